"""Dataset manifest: the sequences of a dataset, their split and the files
they are made of. Paths are stored relative to the manifest directory."""

import logging
import os

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, List

from hsc_toolbox.constants import FPS, SPLITS
from hsc_toolbox.exceptions import ManifestException
from hsc_toolbox.metrics.aggregate import subset_of
from hsc_toolbox.pipeline.fileio import read_json, write_json

logger = logging.getLogger(__name__)

MANIFEST_FILE = 'manifest.json'
FILE_KEYS = ('cameras', 'keypoints', 'scene_mesh', 'alignment',
             'correspondences', 'pose_estimates')


class SeenFlags(NamedTuple):
    """Attributes of a sequence observed in the training split."""
    scene: bool
    hsi: bool
    subject: bool


@dataclass
class SequenceEntry:
    id: str
    scene_id: str
    subject_ids: List[str]
    hsi_tag: str
    split: str
    frames: List[int]
    cameras: List[str]
    keypoints: List[str]
    scene_mesh: str
    alignment: Optional[str] = None
    correspondences: Optional[str] = None
    gt_params: Optional[str] = None
    gt_contacts: Optional[str] = None
    pose_estimates: List[str] = field(default_factory=list)
    fps: int = FPS
    seen: Optional[SeenFlags] = None
    corrupted_views: List[str] = field(default_factory=list)

    @property
    def frame_indices(self):
        """Frames of the half open range [start, stop)."""
        return list(range(self.frames[0], self.frames[1]))

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d['seen'] = self.seen._asdict() if self.seen is not None else None
        d['subject_ids'] = list(self.subject_ids)
        d['frames'] = list(self.frames)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = sorted(set(d) - set(cls.__dataclass_fields__))
        if unknown:
            raise ManifestException("unknown sequence key '{}'".format(
                unknown[0]))
        seen = d.pop('seen', None)
        try:
            entry = cls(**d)
        except TypeError as e:
            raise ManifestException('invalid sequence entry: {}'.format(e))
        if seen is not None:
            entry.seen = SeenFlags(bool(seen['scene']), bool(seen['hsi']),
                                   bool(seen['subject']))
        return entry


class DatasetManifest:

    def __init__(self, sequences, root='.'):
        """
        Parameters
        ----------
        sequences: list of SequenceEntry
        root: str
            directory the relative paths are resolved against
        """
        self.sequences = list(sequences)
        self.root = root
        self.validate()

    def validate(self):
        ids = [s.id for s in self.sequences]
        if len(set(ids)) != len(ids):
            raise ManifestException('duplicate sequence ids')
        for s in self.sequences:
            if s.split not in SPLITS:
                raise ManifestException("sequence '{}': unknown split '{}'"
                                        .format(s.id, s.split))
            if len(s.frames) != 2 or s.frames[0] > s.frames[1]:
                raise ManifestException("sequence '{}': invalid frame range"
                                        .format(s.id))
            if s.split == 'test' and s.seen is None:
                raise ManifestException(
                    "test sequence '{}' has no seen flags".format(s.id))
        return self

    def resolve(self, path):
        if path is None:
            return None
        return os.path.normpath(os.path.join(self.root, path))

    def check_files(self):
        """Every referenced input file must exist."""
        for s in self.sequences:
            for key in FILE_KEYS:
                value = getattr(s, key)
                paths = value if isinstance(value, list) else [value]
                for p in paths:
                    if p is not None and not os.path.exists(self.resolve(p)):
                        raise ManifestException(
                            "sequence '{}': missing {} file {}".format(
                                s.id, key, p))
        return self

    def sequence(self, id_):
        for s in self.sequences:
            if s.id == id_:
                return s
        raise ManifestException("unknown sequence '{}'".format(id_))

    def select(self, split=None, subset=None):
        """Sequences of a split, optionally of one seen-flag subset row."""
        selected = [s for s in self.sequences
                    if split is None or s.split == split]
        if subset is not None:
            selected = [s for s in selected
                        if s.seen is not None and subset_of(s.seen) == subset]
        return selected

    def to_dict(self):
        return {'sequences': [s.to_dict() for s in self.sequences]}

    @classmethod
    def from_dict(cls, d, root='.'):
        if 'sequences' not in d:
            raise ManifestException("manifest without 'sequences'")
        return cls([SequenceEntry.from_dict(s) for s in d['sequences']],
                   root)


def derive_seen_flags(sequences):
    """Set the seen flags of every non training sequence relative to the
    training split; training sequences have seen everything."""
    train = [s for s in sequences if s.split == 'train']
    scenes = set(s.scene_id for s in train)
    hsi = set(s.hsi_tag for s in train)
    subjects = set(i for s in train for i in s.subject_ids)
    for s in sequences:
        if s.split == 'train':
            s.seen = SeenFlags(True, True, True)
        else:
            s.seen = SeenFlags(s.scene_id in scenes, s.hsi_tag in hsi,
                               all(i in subjects for i in s.subject_ids))
    return sequences


def save_manifest(manifest, path):
    write_json(path, manifest.to_dict())


def load_manifest(path, check_files=True):
    manifest = DatasetManifest.from_dict(
        read_json(path), root=os.path.dirname(os.path.abspath(path)))
    if check_files:
        manifest.check_files()
    logger.debug("Loaded manifest with {} sequences".format(
        len(manifest.sequences)))
    return manifest
