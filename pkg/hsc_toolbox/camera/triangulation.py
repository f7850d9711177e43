"""Pairwise triangulation and triplet based multiview consensus."""

import itertools
import logging

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from hsc_toolbox.constants import (
    CONSENSUS_SOFTMIN_PX, CONSENSUS_TAU, MIN_TRIPLET_CONFIDENCE
)
from hsc_toolbox.exceptions import CameraException

logger = logging.getLogger(__name__)

MIN_BASELINE = 1e-9
# sine of the smallest angle accepted between two viewing rays
MIN_RAY_ANGLE_SINE = 1e-6
MIN_CONSENSUS_VIEWS = 3


def _viewing_ray(cam, obs):
    pixel = np.array([obs[0], obs[1], 1.0])
    direction = cam.extrinsics.rotation.T @ np.linalg.solve(
        cam.intrinsics, pixel)
    return direction / np.linalg.norm(direction)


def triangulate_pair(cam_a, obs_a, cam_b, obs_b):
    """Linear (DLT) triangulation of one point seen in two views.

    Parameters
    ----------
    cam_a, cam_b: Camera
    obs_a, obs_b: array-like
        pixel coordinates (u, v)

    Returns
    -------
    np.ndarray
        3D world point
    """
    if np.linalg.norm(cam_a.center - cam_b.center) < MIN_BASELINE:
        raise CameraException('degenerate baseline')
    ray_a = _viewing_ray(cam_a, obs_a)
    ray_b = _viewing_ray(cam_b, obs_b)
    if np.linalg.norm(np.cross(ray_a, ray_b)) < MIN_RAY_ANGLE_SINE:
        raise CameraException('degenerate baseline')

    p_a, p_b = cam_a.projection_matrix, cam_b.projection_matrix
    a = np.stack([obs_a[0] * p_a[2] - p_a[0],
                  obs_a[1] * p_a[2] - p_a[1],
                  obs_b[0] * p_b[2] - p_b[0],
                  obs_b[1] * p_b[2] - p_b[1]])
    _, _, vt = np.linalg.svd(a)
    x = vt[-1]
    if abs(x[3]) < np.finfo(np.float64).eps * np.abs(x).max():
        raise CameraException('degenerate baseline')
    return x[:3] / x[3]


@dataclass
class ConsensusWeights:
    """weights[c, j] in [0, 1] for view c and joint j."""
    camera_names: list
    weights: np.ndarray
    # accumulated reprojection error per view and joint, NaN where no
    # triplet
    errors: np.ndarray = None

    def for_cameras(self, camera_names):
        order = [self.camera_names.index(n) for n in camera_names]
        return ConsensusWeights(list(camera_names), self.weights[order],
                                None if self.errors is None
                                else self.errors[order])

    @classmethod
    def uniform(cls, keypoints):
        return cls(list(keypoints.camera_names),
                   np.ones((keypoints.n_views, keypoints.n_joints)))

    def to_list(self):
        return self.weights.tolist()


def _reprojection_error(cam, point, obs):
    uv, depth = cam.project_points(point)
    if depth[0] <= 0:
        return cam.diagonal
    return float(np.linalg.norm(uv[0] - obs))


def accumulate_errors(errors, softness=CONSENSUS_SOFTMIN_PX):
    """Soft minimum -softness * log(mean(exp(-errors / softness))) of the
    reprojection errors a view collected, in pixels.

    It lies between the smallest error and the mean and is strictly
    increasing in every error. A view agreeing with any consistent pair of
    other views scores at most its error against that pair plus
    softness * log(len(errors)), while a displaced view is off against every
    pair.
    """
    errors = np.asarray(errors, dtype=np.float64)
    return float(-softness * (logsumexp(-errors / softness)
                              - np.log(len(errors))))


def consensus_weights(cams, keypoints, tau=CONSENSUS_TAU,
                      min_confidence=MIN_TRIPLET_CONFIDENCE,
                      softness=CONSENSUS_SOFTMIN_PX):
    """Soft majority vote of the views on every joint.

    For every joint, each pair of trusted views (confidence >= min_confidence)
    triangulates a point that is reprojected into every other observing view.
    A view's score e accumulates its reprojection errors with
    `accumulate_errors` and its weight is exp(-e / tau). Joints seen in fewer
    than 3 views keep weight 1.

    Parameters
    ----------
    cams: list of Camera
        ordered like keypoints.camera_names
    keypoints: KeypointSet
    tau: float
        pixels
    softness: float
        pixels, see `accumulate_errors`

    Returns
    -------
    ConsensusWeights
    """
    if len(cams) != keypoints.n_views:
        raise CameraException('{} cameras for {} views'.format(
            len(cams), keypoints.n_views))
    n_views, n_joints = keypoints.n_views, keypoints.n_joints
    weights = np.ones((n_views, n_joints))
    errors = np.full((n_views, n_joints), np.nan)
    uv, confidence = keypoints.uv, keypoints.confidence

    for j in range(n_joints):
        observing = np.flatnonzero(confidence[:, j] > 0)
        trusted = [int(v) for v in observing
                   if confidence[v, j] >= min_confidence]
        if len(observing) < MIN_CONSENSUS_VIEWS or len(trusted) < 2:
            continue
        collected = [[] for _ in range(n_views)]
        # fixed view order keeps the accumulation deterministic
        for a, b in itertools.combinations(trusted, 2):
            try:
                point = triangulate_pair(cams[a], uv[a, j], cams[b], uv[b, j])
            except CameraException:
                logger.debug("Skipping degenerate pair ({}, {}) for "
                             "joint {}".format(a, b, j))
                continue
            for c in observing:
                if c == a or c == b:
                    continue
                collected[c].append(
                    _reprojection_error(cams[c], point, uv[c, j]))
        for c, view_errors in enumerate(collected):
            if view_errors:
                errors[c, j] = accumulate_errors(view_errors, softness)
                weights[c, j] = np.exp(-errors[c, j] / tau)
    return ConsensusWeights(list(keypoints.camera_names), weights, errors)
