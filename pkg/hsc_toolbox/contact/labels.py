import glob
import logging
import os
import re

from dataclasses import dataclass, asdict

import numpy as np

from hsc_toolbox.constants import (
    THRESHOLD_FOOT, THRESHOLD_BODY, NORMAL_MAX_ANGLE
)
from hsc_toolbox.exceptions import ConfigException, TopologyMismatch
from hsc_toolbox.pipeline.fileio import write_json, read_json

logger = logging.getLogger(__name__)

DECISION_THRESHOLD = 0.5
FRAME_FILE = 'frame_{:06d}.json'
_FRAME_FILE_RE = re.compile(r'frame_(\d{6})\.json$')


class ContactVector:
    """Binary per-vertex contact labels on a named topology, optionally with
    the probabilities they were thresholded from."""

    def __init__(self, labels, topology, probabilities=None, frame=None):
        labels = np.asarray(labels)
        if labels.ndim != 1:
            raise ValueError('labels must be one dimensional')
        if labels.size and not np.all((labels == 0) | (labels == 1)):
            raise ValueError('labels must be 0 or 1')
        self.labels = labels.astype(np.uint8)
        self.topology = topology
        self.frame = frame
        self.probabilities = None
        if probabilities is not None:
            probabilities = np.asarray(probabilities, dtype=np.float64)
            if probabilities.shape != self.labels.shape:
                raise ValueError('probabilities and labels differ in length')
            if np.any(probabilities < 0) or np.any(probabilities > 1):
                raise ValueError('probabilities must be in [0, 1]')
            if np.any(self.labels != labels_from_probabilities(
                    probabilities)):
                raise ValueError(
                    'labels are not the thresholded probabilities')
            self.probabilities = probabilities

    @classmethod
    def from_probabilities(cls, probabilities, topology, frame=None):
        probabilities = np.asarray(probabilities, dtype=np.float64)
        return cls(labels_from_probabilities(probabilities), topology,
                   probabilities=probabilities, frame=frame)

    @classmethod
    def empty(cls, n_vertices, topology, frame=None):
        return cls(np.zeros(n_vertices, dtype=np.uint8), topology,
                   frame=frame)

    def __len__(self):
        return len(self.labels)

    @property
    def mask(self):
        return self.labels.astype(bool)

    @property
    def n_contacts(self):
        return int(self.labels.sum())

    def indices(self):
        return np.flatnonzero(self.labels)

    def check_compatible(self, other):
        if self.topology != other.topology or len(self) != len(other):
            raise TopologyMismatch(
                "topology '{}' ({} vertices) vs '{}' ({} vertices)".format(
                    self.topology, len(self), other.topology, len(other)))

    def to_dict(self):
        d = {'topology': self.topology,
             'frame': self.frame,
             'labels': self.labels.tolist()}
        if self.probabilities is not None:
            d['probabilities'] = self.probabilities.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d['labels'], d['topology'],
                   probabilities=d.get('probabilities'),
                   frame=d.get('frame'))

    def __eq__(self, other):
        return isinstance(other, ContactVector) \
            and self.topology == other.topology \
            and np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return "ContactVector(topology='{}', frame={}, {}/{} in contact)"\
            .format(self.topology, self.frame, self.n_contacts, len(self))


def labels_from_probabilities(probabilities):
    return (np.asarray(probabilities) >= DECISION_THRESHOLD).astype(np.uint8)


def save_contacts(contacts, path):
    write_json(path, contacts.to_dict())


def load_contacts(path):
    return ContactVector.from_dict(read_json(path))


def save_contact_frames(directory, contacts):
    """One label file per frame, named after the frame index."""
    os.makedirs(directory, exist_ok=True)
    for c in contacts:
        if c.frame is None:
            raise ValueError('contact labels without frame index')
        save_contacts(c, os.path.join(directory, FRAME_FILE.format(c.frame)))


def load_contact_frames(directory):
    """Label files of a directory keyed by frame index."""
    contacts = {}
    for path in sorted(glob.glob(os.path.join(directory, 'frame_*.json'))):
        match = _FRAME_FILE_RE.search(path)
        if match:
            c = load_contacts(path)
            contacts[int(match.group(1)) if c.frame is None else c.frame] = c
    return contacts


@dataclass
class ContactConfig:
    threshold_foot: float = THRESHOLD_FOOT
    threshold_body: float = THRESHOLD_BODY
    normal_max_angle: float = NORMAL_MAX_ANGLE

    def validate(self):
        for key in ('threshold_foot', 'threshold_body'):
            if not getattr(self, key) > 0:
                raise ConfigException(key, 'threshold must be positive')
        if not 0 < self.normal_max_angle <= 180:
            raise ConfigException('normal_max_angle',
                                  'angle must be in (0, 180]')
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d, prefix='contact'):
        unknown = sorted(set(d) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigException('{}.{}'.format(prefix, unknown[0]))
        return cls(**d).validate()
