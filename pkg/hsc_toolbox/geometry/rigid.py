import logging

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hsc_toolbox.exceptions import GeometryException

logger = logging.getLogger(__name__)

ORTHONORMAL_TOLERANCE = 1e-6
# relative size of the second singular value below which points are
# considered collinear
COLLINEAR_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """x -> rotation @ x + translation, meters."""
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rms: Optional[float] = None

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        translation = np.array(self.translation,
                               dtype=np.float64).reshape(3)
        if not np.allclose(rotation.T @ rotation, np.eye(3),
                           atol=ORTHONORMAL_TOLERANCE) \
                or abs(np.linalg.det(rotation) - 1) > ORTHONORMAL_TOLERANCE:
            raise GeometryException('rotation is not a proper rotation')
        object.__setattr__(self, 'rotation', rotation)
        object.__setattr__(self, 'translation', translation)

    @classmethod
    def identity(cls):
        return cls()

    def apply(self, points):
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def apply_vectors(self, vectors):
        """Rotate directions (normals) without translating them."""
        return np.asarray(vectors, dtype=np.float64) @ self.rotation.T

    def inverse(self):
        return RigidTransform(self.rotation.T,
                              -self.rotation.T @ self.translation)

    def compose(self, other):
        """self ∘ other, i.e. apply `other` first."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation
                              + self.translation)

    def to_dict(self):
        return {'R': self.rotation.ravel().tolist(),
                't': self.translation.tolist(),
                'rms': self.rms}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d['R'], dtype=np.float64).reshape(3, 3),
                   np.asarray(d['t'], dtype=np.float64),
                   d.get('rms'))

    def __repr__(self):
        return 'RigidTransform(R={}, t={}, rms={})'.format(
            self.rotation.tolist(), self.translation.tolist(), self.rms)


def _check_correspondences(src, dst):
    src = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    if src.shape != dst.shape:
        raise GeometryException(
            'point sets differ in size: {} vs {}'.format(len(src), len(dst)))
    if len(src) < 3:
        raise GeometryException('degenerate correspondences')
    singular = np.linalg.svd(src - src.mean(axis=0), compute_uv=False)
    if singular[0] == 0 or singular[1] / singular[0] < COLLINEAR_TOLERANCE:
        raise GeometryException('degenerate correspondences')
    return src, dst


def _umeyama(src, dst, with_scale):
    mean_src = src.mean(axis=0)
    mean_dst = dst.mean(axis=0)
    src_c = src - mean_src
    dst_c = dst - mean_dst
    cov = dst_c.T @ src_c / len(src)
    u, d, vt = np.linalg.svd(cov)
    s = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s[2, 2] = -1
    rotation = u @ s @ vt
    scale = 1.0
    if with_scale:
        variance = np.sum(src_c ** 2) / len(src)
        scale = np.trace(np.diag(d) @ s) / variance
    translation = mean_dst - scale * rotation @ mean_src
    return rotation, translation, scale


def rigid_align(src_points, dst_points):
    """Least squares rotation and translation (no scale) mapping src onto
    dst.

    Parameters
    ----------
    src_points: array-like
        (N, 3), N >= 3 and not collinear
    dst_points: array-like
        (N, 3)

    Returns
    -------
    RigidTransform
        with `rms` set to the residual root mean square
    """
    src, dst = _check_correspondences(src_points, dst_points)
    rotation, translation, _ = _umeyama(src, dst, with_scale=False)
    residual = src @ rotation.T + translation - dst
    rms = float(np.sqrt(np.mean(np.sum(residual ** 2, axis=1))))
    logger.debug("Rigid alignment of {} pairs, rms {:.6f} m".format(
        len(src), rms))
    return RigidTransform(rotation, translation, rms)


def similarity_align(src_points, dst_points):
    """Procrustes alignment with scale; returns src mapped onto dst.

    Used by the reconstruction metrics, where the predicted body may differ
    in scale from the reference.
    """
    src, dst = _check_correspondences(src_points, dst_points)
    rotation, translation, scale = _umeyama(src, dst, with_scale=True)
    return scale * src @ rotation.T + translation
