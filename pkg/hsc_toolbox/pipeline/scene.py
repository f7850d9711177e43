"""Synthetic scene geometry and the scene side files: correspondences
between the capture frame and the scan, and the alignment computed from
them."""

import logging

import numpy as np

from hsc_toolbox.exceptions import DatasetException
from hsc_toolbox.geometry.mesh import Mesh
from hsc_toolbox.geometry.rigid import RigidTransform
from hsc_toolbox.pipeline.fileio import write_json, read_json

logger = logging.getLogger(__name__)

GROUND_MIN = (-2.5, -2.5)
GROUND_MAX = (2.5, 2.5)
GROUND_CELLS = 20

SEAT_MIN = (-0.4, -0.35, 0.0)
SEAT_MAX = (0.4, 0.25, 0.45)

STAIRS_X = (-2.0, -1.2)
STAIRS_Y0 = 0.5
STEP_DEPTH = 0.3
STEP_HEIGHT = 0.15
N_STEPS = 3

# outward oriented triangles of a unit cube with corner index
# 4 * z + 2 * y + x
_BOX_FACES = np.array([
    [0, 2, 3], [0, 3, 1],
    [4, 5, 7], [4, 7, 6],
    [0, 1, 5], [0, 5, 4],
    [2, 6, 7], [2, 7, 3],
    [0, 4, 6], [0, 6, 2],
    [1, 3, 7], [1, 7, 5],
])


def box_mesh(box_min, box_max):
    lo, hi = np.asarray(box_min, float), np.asarray(box_max, float)
    corners = np.array([[hi[0] if i & 1 else lo[0],
                         hi[1] if i & 2 else lo[1],
                         hi[2] if i & 4 else lo[2]] for i in range(8)])
    return corners, _BOX_FACES.copy()


def ground_mesh(lo=GROUND_MIN, hi=GROUND_MAX, cells=GROUND_CELLS):
    """Upward facing grid on z = 0."""
    xs = np.linspace(lo[0], hi[0], cells + 1)
    ys = np.linspace(lo[1], hi[1], cells + 1)
    gx, gy = np.meshgrid(xs, ys, indexing='ij')
    vertices = np.stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)], axis=1)
    faces = []
    for i in range(cells):
        for j in range(cells):
            a = i * (cells + 1) + j
            b, c, d = a + cells + 1, a + cells + 2, a + 1
            faces += [[a, b, c], [a, c, d]]
    return vertices, np.array(faces)


def merge_meshes(parts):
    vertices, faces, offset = [], [], 0
    for v, f in parts:
        vertices.append(v)
        faces.append(f + offset)
        offset += len(v)
    return Mesh(np.concatenate(vertices), np.concatenate(faces))


def make_test_scene():
    """Ground, a seat box and a short flight of stairs, z up, meters."""
    parts = [ground_mesh(), box_mesh(SEAT_MIN, SEAT_MAX)]
    for k in range(N_STEPS):
        y0 = STAIRS_Y0 + k * STEP_DEPTH
        parts.append(box_mesh((STAIRS_X[0], y0, 0.0),
                              (STAIRS_X[1], y0 + STEP_DEPTH,
                               (k + 1) * STEP_HEIGHT)))
    return merge_meshes(parts)


def landmark_points():
    """Box and stair corners, well spread reference points of the scene."""
    points = [box_mesh(SEAT_MIN, SEAT_MAX)[0]]
    last = N_STEPS - 1
    points.append(box_mesh((STAIRS_X[0], STAIRS_Y0 + last * STEP_DEPTH, 0.0),
                           (STAIRS_X[1], STAIRS_Y0 + N_STEPS * STEP_DEPTH,
                            N_STEPS * STEP_HEIGHT))[0])
    return np.concatenate(points)


def save_correspondences(path, scene_id, camera_points, scan_points):
    write_json(path, {'scene_id': scene_id,
                      'camera_points': np.asarray(camera_points).tolist(),
                      'scan_points': np.asarray(scan_points).tolist()})


def load_correspondences(path):
    d = read_json(path)
    camera = np.asarray(d['camera_points'], dtype=np.float64)
    scan = np.asarray(d['scan_points'], dtype=np.float64)
    if camera.shape != scan.shape:
        raise DatasetException('{}: {} camera points for {} scan points'
                               .format(path, len(camera), len(scan)))
    return d['scene_id'], camera, scan


def save_alignment(path, transform):
    write_json(path, transform.to_dict())


def load_alignment(path):
    return RigidTransform.from_dict(read_json(path))
