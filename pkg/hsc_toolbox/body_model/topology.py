"""Vertex correspondences between body topologies and label transfer."""

import logging
import re

import numpy as np

from hsc_toolbox.contact.labels import ContactVector
from hsc_toolbox.exceptions import (
    MeshParseError, TopologyMismatch, DimensionMismatch
)
from hsc_toolbox.pipeline.fileio import atomic_write

logger = logging.getLogger(__name__)

_HEADER = re.compile(r'#\s*src=(\S+)\s+dst=(\S+)'
                     r'(?:\s+src_vertices=(\d+)\s+dst_vertices=(\d+))?')


class TopologyMap:
    """Injective vertex map from a source topology to a destination
    topology."""

    def __init__(self, pairs, src_name, dst_name, src_size, dst_size):
        """
        Parameters
        ----------
        pairs: array-like
            (N, 2) rows of (src_index, dst_index)
        src_name, dst_name: str
            topology identifiers
        src_size, dst_size: int
            vertex counts of both topologies
        """
        pairs = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        self.src_name = src_name
        self.dst_name = dst_name
        self.src_size = int(src_size)
        self.dst_size = int(dst_size)
        if len(pairs):
            if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= self.src_size:
                raise TopologyMismatch('source index out of range')
            if pairs[:, 1].min() < 0 or pairs[:, 1].max() >= self.dst_size:
                raise TopologyMismatch('destination index out of range')
        for column, name in ((0, 'source'), (1, 'destination')):
            if len(np.unique(pairs[:, column])) != len(pairs):
                raise TopologyMismatch(
                    'map is not injective: repeated {} index'.format(name))
        self.pairs = pairs

    @classmethod
    def identity(cls, name, size):
        idx = np.arange(size)
        return cls(np.stack([idx, idx], axis=1), name, name, size, size)

    def inverse(self):
        return TopologyMap(self.pairs[:, ::-1], self.dst_name, self.src_name,
                           self.dst_size, self.src_size)

    def __len__(self):
        return len(self.pairs)

    def save(self, path):
        lines = ['# src={} dst={} src_vertices={} dst_vertices={}'.format(
            self.src_name, self.dst_name, self.src_size, self.dst_size)]
        lines += ['{} {}'.format(s, d) for s, d in self.pairs]
        atomic_write(path, '\n'.join(lines) + '\n')

    @classmethod
    def load(cls, path):
        header = None
        pairs = []
        with open(path, 'r') as f:
            for line_number, line in enumerate(f, start=1):
                stripped = line.strip()
                if not stripped:
                    continue
                if stripped.startswith('#'):
                    match = _HEADER.match(stripped)
                    if match and header is None:
                        header = match.groups()
                    continue
                tokens = stripped.split()
                if len(tokens) != 2:
                    raise MeshParseError(path, line_number,
                                         'expected two indices')
                try:
                    pairs.append([int(tokens[0]), int(tokens[1])])
                except ValueError:
                    raise MeshParseError(path, line_number,
                                         'indices must be integers')
        if header is None:
            raise MeshParseError(path, None, 'missing "# src= dst=" header')
        src_name, dst_name, src_size, dst_size = header
        pairs = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        # without sizes in the header the largest index bounds the topology
        if src_size is None:
            src_size = pairs[:, 0].max() + 1 if len(pairs) else 0
            dst_size = pairs[:, 1].max() + 1 if len(pairs) else 0
        return cls(pairs, src_name, dst_name, int(src_size), int(dst_size))

    def __repr__(self):
        return "TopologyMap('{}'[{}] -> '{}'[{}], {} pairs)".format(
            self.src_name, self.src_size, self.dst_name, self.dst_size,
            len(self))


def map_contact_labels(labels, topology_map):
    """Transfer contact labels along a topology map.

    Destination vertices without a source stay out of contact.

    Parameters
    ----------
    labels: ContactVector
        on the map's source topology
    topology_map: TopologyMap

    Returns
    -------
    ContactVector
        on the destination topology
    """
    if len(labels) != topology_map.src_size:
        raise DimensionMismatch('labels', topology_map.src_size, len(labels))
    if labels.topology != topology_map.src_name:
        raise TopologyMismatch("labels are on '{}', map expects '{}'".format(
            labels.topology, topology_map.src_name))
    src, dst = topology_map.pairs[:, 0], topology_map.pairs[:, 1]
    out = np.zeros(topology_map.dst_size, dtype=np.uint8)
    out[dst] = labels.labels[src]
    probabilities = None
    if labels.probabilities is not None:
        probabilities = np.zeros(topology_map.dst_size)
        probabilities[dst] = labels.probabilities[src]
    return ContactVector(out, topology_map.dst_name,
                         probabilities=probabilities, frame=labels.frame)


def drop_region_map(model, region_names, dst_name):
    """Map from the model topology onto the compacted topology without the
    vertices of `region_names` (e.g. dropping the head)."""
    dropped = np.zeros(model.n_vertices, dtype=bool)
    for name in region_names:
        if name not in model.regions:
            raise KeyError("unknown region '{}'".format(name))
        dropped[model.regions[name]] = True
    kept = np.flatnonzero(~dropped)
    pairs = np.stack([kept, np.arange(len(kept))], axis=1)
    return TopologyMap(pairs, model.topology_name, dst_name,
                       model.n_vertices, len(kept))
