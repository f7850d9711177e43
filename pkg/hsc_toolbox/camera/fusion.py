import logging

import numpy as np
from scipy.spatial.transform import Rotation

from hsc_toolbox.body_model.model import BodyParams
from hsc_toolbox.exceptions import DimensionMismatch
from hsc_toolbox.pipeline.fileio import write_json, read_json

logger = logging.getLogger(__name__)


def fuse_pose_estimates(estimates):
    """Average several pose estimates of the same body.

    Joint rotations are averaged with the chordal (quaternion) mean, which
    is insensitive to the sign of the quaternions; translation, shape and
    hand pose are averaged arithmetically.

    Parameters
    ----------
    estimates: list of BodyParams

    Returns
    -------
    BodyParams
    """
    if not estimates:
        raise ValueError('no pose estimates to fuse')
    first = estimates[0]
    for e in estimates[1:]:
        for name in ('pose', 'shape', 'hand_pose'):
            if len(getattr(e, name)) != len(getattr(first, name)):
                raise DimensionMismatch(name, len(getattr(first, name)),
                                        len(getattr(e, name)))
    if len(estimates) == 1:
        return first.copy()

    rotvecs = np.stack([e.joint_rotvecs() for e in estimates], axis=1)
    fused = np.stack([Rotation.from_rotvec(joint).mean().as_rotvec()
                      for joint in rotvecs])
    logger.debug("Fused {} pose estimates".format(len(estimates)))
    return BodyParams(
        np.mean([e.global_translation for e in estimates], axis=0),
        fused.ravel(),
        np.mean([e.shape for e in estimates], axis=0),
        np.mean([e.hand_pose for e in estimates], axis=0))


def save_pose_estimates(path, camera_name, frames):
    """
    Parameters
    ----------
    camera_name: str
        view the estimates were regressed from
    frames: dict
        frame index -> BodyParams
    """
    write_json(path, {
        'camera': camera_name,
        'frames': [{'frame': int(f), 'params': p.to_dict()}
                   for f, p in sorted(frames.items())]})


def load_pose_estimate_file(path):
    d = read_json(path)
    return d['camera'], {int(r['frame']): BodyParams.from_dict(r['params'])
                          for r in d['frames']}


def load_pose_estimates(paths):
    """Per-frame lists of the estimates of every camera file; frames a
    camera has no estimate for are left out of that frame's list."""
    estimates = {}
    for path in paths:
        _, frames = load_pose_estimate_file(path)
        for frame, params in sorted(frames.items()):
            estimates.setdefault(frame, []).append(params)
    return estimates
