import logging

import numpy as np

from hsc_toolbox.exceptions import CameraException, DimensionMismatch
from hsc_toolbox.pipeline.fileio import write_json, read_json

logger = logging.getLogger(__name__)


class KeypointSet:
    """2D joint detections of one frame in every view.

    observations[c, j] = (u, v, confidence); a missing detection has
    confidence 0.
    """

    def __init__(self, camera_names, observations):
        observations = np.array(observations, dtype=np.float64)
        if observations.ndim != 3 or observations.shape[2] != 3:
            raise DimensionMismatch('observations', '(C, J, 3)',
                                    observations.shape)
        if len(camera_names) != observations.shape[0]:
            raise DimensionMismatch('camera_names', observations.shape[0],
                                    len(camera_names))
        confidence = observations[:, :, 2]
        if np.any(confidence < 0) or np.any(confidence > 1):
            raise ValueError('confidences must be in [0, 1]')
        # coordinates of missing detections carry no information
        observations[confidence == 0, :2] = 0.0
        self.camera_names = list(camera_names)
        self.observations = observations

    @property
    def n_views(self):
        return self.observations.shape[0]

    @property
    def n_joints(self):
        return self.observations.shape[1]

    @property
    def uv(self):
        return self.observations[:, :, :2]

    @property
    def confidence(self):
        return self.observations[:, :, 2]

    def any_observed(self):
        return bool(np.any(self.confidence > 0))

    def subset(self, views):
        """Keep only the given view indices, in the given order."""
        views = list(views)
        return KeypointSet([self.camera_names[v] for v in views],
                           self.observations[views])

    def with_view_offset(self, view, offset):
        """Copy with every detection of `view` shifted by a 2D offset."""
        observations = self.observations.copy()
        observed = observations[view, :, 2] > 0
        observations[view, observed, :2] += np.asarray(offset)
        return KeypointSet(self.camera_names, observations)

    def __repr__(self):
        return 'KeypointSet(views={}, joints={})'.format(self.n_views,
                                                          self.n_joints)


def order_cameras(cameras, camera_names):
    """Cameras sorted to match the views of a KeypointSet."""
    by_name = {c.name: c for c in cameras}
    try:
        return [by_name[name] for name in camera_names]
    except KeyError as e:
        raise CameraException('no calibration for camera {}'.format(e))


def save_keypoint_file(path, camera_name, frames):
    """
    Parameters
    ----------
    camera_name: str
    frames: dict
        frame index -> (J, 3) detections of this camera
    """
    write_json(path, {
        'camera': camera_name,
        'frames': [{'frame': int(f), 'joints': np.asarray(j).tolist()}
                   for f, j in sorted(frames.items())]})


def load_keypoint_file(path):
    d = read_json(path)
    frames = {int(r['frame']): np.asarray(r['joints'], dtype=np.float64)
              for r in d['frames']}
    return d['camera'], frames


def load_keypoints(paths):
    """Merge per-camera keypoint files into one KeypointSet per frame.

    Frames missing from a camera's file count as unobserved in that view.
    """
    per_camera = [load_keypoint_file(p) for p in paths]
    names = [name for name, _ in per_camera]
    frames = sorted(set(f for _, fr in per_camera for f in fr))
    n_joints = None
    for _, fr in per_camera:
        for joints in fr.values():
            n_joints = len(joints)
            break
    result = {}
    for frame in frames:
        observations = np.zeros((len(per_camera), n_joints, 3))
        for c, (_, fr) in enumerate(per_camera):
            if frame in fr:
                observations[c] = fr[frame]
        result[frame] = KeypointSet(names, observations)
    logger.debug("Loaded keypoints of {} frames from {} cameras".format(
        len(frames), len(names)))
    return result
