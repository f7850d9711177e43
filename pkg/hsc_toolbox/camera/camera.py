import logging

import numpy as np

from hsc_toolbox.exceptions import CameraException
from hsc_toolbox.geometry.rigid import RigidTransform
from hsc_toolbox.pipeline.fileio import write_json, read_json

logger = logging.getLogger(__name__)

CAMERA_KEYS = ('name', 'fx', 'fy', 'cx', 'cy', 'R', 't', 'width', 'height')


class Camera:
    """Calibrated pinhole camera without distortion.

    Camera coordinates follow the usual vision convention: x right, y down,
    z along the optical axis.
    """

    def __init__(self, name, fx, fy, cx, cy, extrinsics, width, height,
                 moving=False):
        """
        Parameters
        ----------
        name: str
        fx, fy, cx, cy: float
            intrinsics in pixels
        extrinsics: RigidTransform
            world -> camera
        width, height: int
            image size in pixels
        moving: bool
            the camera is not static during the sequence
        """
        if not (fx > 0 and fy > 0):
            raise CameraException(
                "camera '{}': focal lengths must be positive".format(name))
        if not (0 <= cx <= width and 0 <= cy <= height):
            raise CameraException(
                "camera '{}': principal point outside the image".format(name))
        self.name = name
        self.fx = float(fx)
        self.fy = float(fy)
        self.cx = float(cx)
        self.cy = float(cy)
        self.extrinsics = extrinsics
        self.width = int(width)
        self.height = int(height)
        self.moving = bool(moving)

    @property
    def intrinsics(self):
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    @property
    def projection_matrix(self):
        """3x4 matrix P = K [R | t]."""
        return self.intrinsics @ np.hstack(
            [self.extrinsics.rotation, self.extrinsics.translation[:, None]])

    @property
    def center(self):
        return self.extrinsics.inverse().translation

    @property
    def diagonal(self):
        return float(np.hypot(self.width, self.height))

    def to_camera(self, points):
        return self.extrinsics.apply(points)

    def project_points(self, points):
        """Project (N, 3) world points; returns (N, 2) pixels and (N,)
        depths. Pixels of points with non-positive depth are undefined."""
        cam = self.to_camera(np.asarray(points,
                                        dtype=np.float64).reshape(-1, 3))
        depth = cam[:, 2]
        safe = np.where(depth > 0, depth, 1.0)
        uv = np.stack([self.fx * cam[:, 0] / safe + self.cx,
                       self.fy * cam[:, 1] / safe + self.cy], axis=1)
        return uv, depth

    def project_with_jacobian(self, points):
        """Pixels (N, 2), d pixels / d world point (N, 2, 3) and depths."""
        cam = self.to_camera(np.asarray(points,
                                        dtype=np.float64).reshape(-1, 3))
        x, y, z = cam[:, 0], cam[:, 1], cam[:, 2]
        z_safe = np.where(z > 0, z, 1.0)
        uv = np.stack([self.fx * x / z_safe + self.cx,
                       self.fy * y / z_safe + self.cy], axis=1)
        d_cam = np.zeros((len(cam), 2, 3))
        d_cam[:, 0, 0] = self.fx / z_safe
        d_cam[:, 0, 2] = -self.fx * x / z_safe ** 2
        d_cam[:, 1, 1] = self.fy / z_safe
        d_cam[:, 1, 2] = -self.fy * y / z_safe ** 2
        return uv, d_cam @ self.extrinsics.rotation, z

    def scaled(self, s):
        """The same camera with intrinsics and image size scaled by s."""
        return Camera(self.name, s * self.fx, s * self.fy, s * self.cx,
                      s * self.cy, self.extrinsics, s * self.width,
                      s * self.height, self.moving)

    def to_dict(self):
        return {'name': self.name, 'fx': self.fx, 'fy': self.fy,
                'cx': self.cx, 'cy': self.cy,
                'R': self.extrinsics.rotation.ravel().tolist(),
                't': self.extrinsics.translation.tolist(),
                'width': self.width, 'height': self.height,
                'moving': self.moving}

    @classmethod
    def from_dict(cls, d):
        missing = [k for k in CAMERA_KEYS if k not in d]
        if missing:
            raise CameraException(
                'camera record is missing keys: {}'.format(', '.join(missing)))
        extrinsics = RigidTransform(
            np.asarray(d['R'], dtype=np.float64).reshape(3, 3), d['t'])
        return cls(d['name'], d['fx'], d['fy'], d['cx'], d['cy'],
                   extrinsics, d['width'], d['height'],
                   d.get('moving', False))

    def __repr__(self):
        return "Camera('{}', f=({}, {}), c=({}, {}), {}x{})".format(
            self.name, self.fx, self.fy, self.cx, self.cy, self.width,
            self.height)


def project(cam, p):
    """Pixel coordinates of the world point p.

    Raises
    ------
    CameraException
        when p is not in front of the camera
    """
    uv, depth = cam.project_points(p)
    if depth[0] <= 0:
        raise CameraException('behind camera')
    return uv[0]


def look_at(name, eye, target, up=(0.0, 0.0, 1.0), focal=1000.0,
            width=1000, height=1000, moving=False):
    """Camera at `eye` whose optical axis passes through `target`."""
    eye = np.asarray(eye, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - eye
    z /= np.linalg.norm(z)
    x = np.cross(z, up)
    if np.linalg.norm(x) < 1e-9:
        raise CameraException('viewing direction is parallel to up')
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    rotation = np.stack([x, y, z])
    extrinsics = RigidTransform(rotation, -rotation @ eye)
    return Camera(name, focal, focal, width / 2.0, height / 2.0, extrinsics,
                  width, height, moving)


def save_camera(cam, path):
    write_json(path, cam.to_dict())


def load_camera(path):
    return Camera.from_dict(read_json(path))
