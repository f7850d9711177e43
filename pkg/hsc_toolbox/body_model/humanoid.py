"""Procedural capsule humanoid with the SMPL joint layout.

The humanoid stands at the origin in a T-pose: z up, feet on z = 0, facing
+y, its left side towards +x. Every limb segment is a closed capsule; the
capsules are stitched to their parent segment by zero-area weld triangles so
the surface is a single connected graph for geodesic queries.
"""

import logging

import numpy as np
from scipy import sparse

from hsc_toolbox.constants import FOOT_SOLE, SEED
from hsc_toolbox.body_model.model import BodyModel

logger = logging.getLogger(__name__)

TOPOLOGY_NAME = 'capsule_humanoid'

JOINT_NAMES = [
    'pelvis', 'left_hip', 'right_hip', 'spine1', 'left_knee', 'right_knee',
    'spine2', 'left_ankle', 'right_ankle', 'spine3', 'left_foot',
    'right_foot', 'neck', 'left_collar', 'right_collar', 'head',
    'left_shoulder', 'right_shoulder', 'left_elbow', 'right_elbow',
    'left_wrist', 'right_wrist', 'left_hand', 'right_hand',
]

PARENTS = [-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17,
           18, 19, 20, 21]

HAND_JOINTS = (20, 21)

_REST_JOINTS = {
    'pelvis': (0.0, 0.0, 0.95),
    'left_hip': (0.09, 0.0, 0.88),
    'spine1': (0.0, 0.0, 1.05),
    'left_knee': (0.09, 0.0, 0.50),
    'spine2': (0.0, 0.0, 1.18),
    'left_ankle': (0.09, 0.0, 0.09),
    'spine3': (0.0, 0.0, 1.30),
    'left_foot': (0.09, 0.12, 0.035),
    'neck': (0.0, 0.0, 1.50),
    'left_collar': (0.07, 0.0, 1.43),
    'head': (0.0, 0.0, 1.60),
    'left_shoulder': (0.18, 0.0, 1.42),
    'left_elbow': (0.45, 0.0, 1.42),
    'left_wrist': (0.70, 0.0, 1.42),
    'left_hand': (0.78, 0.0, 1.42),
}


def _mirror(point):
    return (-point[0], point[1], point[2])


def rest_joint_positions():
    positions = []
    for name in JOINT_NAMES:
        if name.startswith('right_'):
            positions.append(_mirror(_REST_JOINTS['left_' + name[6:]]))
        else:
            positions.append(_REST_JOINTS[name])
    return np.array(positions)


# name, start, end, radius, skinning joint, parent part,
# joints whose rest position is the start / end ring center
_CENTRAL_PARTS = [
    ('torso_lower', 'pelvis', 'spine1', 0.13, 'pelvis', None,
     'pelvis', None),
    ('torso_mid', 'spine1', 'spine2', 0.12, 'spine1', 'torso_lower',
     'spine1', None),
    ('torso_upper', 'spine2', 'spine3', 0.13, 'spine2', 'torso_mid',
     'spine2', None),
    ('chest', 'spine3', (0.0, 0.0, 1.42), 0.13, 'spine3', 'torso_upper',
     'spine3', None),
    ('neck', 'neck', 'head', 0.05, 'neck', 'chest', 'neck', None),
    ('head', 'head', (0.0, 0.0, 1.66), 0.09, 'head', 'neck', 'head', None),
]

_SIDE_PARTS = [
    ('collar', 'collar', 'shoulder', 0.05, 'collar', 'chest',
     'collar', None),
    ('upper_arm', 'shoulder', 'elbow', 0.045, 'shoulder', 'collar',
     'shoulder', None),
    ('forearm', 'elbow', 'wrist', 0.04, 'elbow', 'upper_arm',
     'elbow', None),
    ('hand', 'wrist', 'hand', 0.035, 'wrist', 'forearm', 'wrist', 'hand'),
    ('thigh', 'hip', 'knee', 0.07, 'hip', 'torso_lower', 'hip', None),
    ('shin', 'knee', 'ankle', 0.05, 'knee', 'thigh', 'knee', 'ankle'),
    ('foot', (0.09, -0.04, 0.035), 'foot', 0.035, 'ankle', 'shin',
     None, 'foot'),
]

SEGMENTS = 8
CAP_ANGLE = np.pi / 4
# blend of the start ring towards the parent joint
START_RING_BLEND = 0.3
HEIGHT_COEFFICIENT = 0.05
GIRTH_COEFFICIENT = 0.2


def _part_table():
    parts = []
    for name, start, end, radius, joint, parent, start_j, end_j in \
            _CENTRAL_PARTS:
        parts.append((name, start, end, radius, joint, parent, start_j,
                      end_j))
    for side, mirror in (('left', False), ('right', True)):
        def side_name(n):
            return None if n is None else '{}_{}'.format(side, n)

        def side_point(p):
            if isinstance(p, str):
                return side_name(p)
            return _mirror(p) if mirror else p

        for name, start, end, radius, joint, parent, start_j, end_j in \
                _SIDE_PARTS:
            parent_name = parent if parent in ('chest', 'torso_lower') \
                else side_name(parent)
            parts.append((side_name(name), side_point(start),
                          side_point(end), radius, side_name(joint),
                          parent_name, side_name(start_j),
                          side_name(end_j)))
    return parts


def _frame(axis):
    """Unit vectors u, w with u x w = axis."""
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[2]) > 0.9 \
        else np.array([0.0, 0.0, 1.0])
    u = helper - helper.dot(axis) * axis
    u /= np.linalg.norm(u)
    w = np.cross(axis, u)
    return u, w


def _capsule(start, end, radius):
    """Closed outward-oriented capsule around the segment start -> end.

    Returns vertices, faces and the local index ranges of the start and end
    equator rings.
    """
    axis = end - start
    axis /= np.linalg.norm(axis)
    u, w = _frame(axis)
    phi = 2 * np.pi * np.arange(SEGMENTS) / SEGMENTS
    directions = np.outer(np.cos(phi), u) + np.outer(np.sin(phi), w)

    cap_offset = radius * np.sin(CAP_ANGLE)
    cap_radius = radius * np.cos(CAP_ANGLE)
    rings = [start - cap_offset * axis + cap_radius * directions,
             start + radius * directions,
             end + radius * directions,
             end + cap_offset * axis + cap_radius * directions]
    vertices = np.concatenate([[start - radius * axis]] + rings
                              + [[end + radius * axis]])
    bottom, top = 0, len(vertices) - 1

    def ring(i):
        return 1 + i * SEGMENTS + np.arange(SEGMENTS)

    faces = []
    first = ring(0)
    for j in range(SEGMENTS):
        faces.append([bottom, first[(j + 1) % SEGMENTS], first[j]])
    for i in range(len(rings) - 1):
        lower, upper = ring(i), ring(i + 1)
        for j in range(SEGMENTS):
            a, b = lower[j], lower[(j + 1) % SEGMENTS]
            c, d = upper[(j + 1) % SEGMENTS], upper[j]
            faces.append([a, b, c])
            faces.append([a, c, d])
    last = ring(len(rings) - 1)
    for j in range(SEGMENTS):
        faces.append([last[j], last[(j + 1) % SEGMENTS], top])
    return vertices, np.array(faces), ring(1), ring(2)


def make_test_humanoid(seed=SEED, with_hands=False):
    """Build the capsule test humanoid.

    Parameters
    ----------
    seed: int
        Seeds the per-part girth factors and the hand basis
    with_hands: bool
        Drive the wrists with a 6 dimensional hand pose

    Returns
    -------
    BodyModel
        24 joints, 2 shape directions (height, girth)
    """
    rng = np.random.default_rng(seed)
    joints = rest_joint_positions()
    index = {name: i for i, name in enumerate(JOINT_NAMES)}

    def point(p):
        return joints[index[p]].copy() if isinstance(p, str) \
            else np.array(p, dtype=np.float64)

    vertices, faces, welds = [], [], []
    skin_rows, skin_cols, skin_vals = [], [], []
    reg_rows, reg_cols = [], []
    regions = {}
    shape_dirs = []
    part_vertices = {}
    offset = 0

    for name, start, end, radius, joint, parent, start_j, end_j in \
            _part_table():
        start, end = point(start), point(end)
        v, f, start_ring, end_ring = _capsule(start, end, radius)
        ids = offset + np.arange(len(v))
        part_vertices[name] = ids
        regions[name] = ids.tolist()
        vertices.append(v)
        faces.append(f + offset)

        owner = index[joint]
        blended = set((offset + start_ring).tolist()) \
            if PARENTS[owner] >= 0 else set()
        for vid in ids:
            if vid in blended:
                skin_rows += [vid, vid]
                skin_cols += [owner, PARENTS[owner]]
                skin_vals += [1 - START_RING_BLEND, START_RING_BLEND]
            else:
                skin_rows.append(vid)
                skin_cols.append(owner)
                skin_vals.append(1.0)

        for ring_joint, ring in ((start_j, start_ring), (end_j, end_ring)):
            if ring_joint is not None:
                reg_rows += [index[ring_joint]] * len(ring)
                reg_cols += (offset + ring).tolist()

        # height: dz = c * z; girth: radial offset scaled per part
        axis = (end - start) / np.linalg.norm(end - start)
        along = (v - start) @ axis
        radial = v - start - np.outer(along, axis)
        girth = GIRTH_COEFFICIENT * rng.uniform(0.5, 1.5)
        dirs = np.zeros((len(v), 3, 2))
        dirs[:, 2, 0] = HEIGHT_COEFFICIENT * v[:, 2]
        dirs[:, :, 1] = girth * radial
        shape_dirs.append(dirs)

        if parent is not None:
            welds.append((offset + start_ring, parent))
        if name.endswith('_foot'):
            sole = ids[v[:, 2] < 0.5 * radius]
            regions.setdefault(FOOT_SOLE, []).extend(sole.tolist())
        offset += len(v)

    vertices = np.concatenate(vertices)
    faces = np.concatenate(faces)
    weld_faces = []
    for ring, parent in welds:
        candidates = part_vertices[parent]
        for vid in ring:
            distances = np.linalg.norm(vertices[candidates] - vertices[vid],
                                       axis=1)
            nearest = candidates[int(np.argmin(distances))]
            weld_faces.append([vid, nearest, nearest])
    faces = np.concatenate([faces, np.array(weld_faces)])

    n_vertices = len(vertices)
    n_joints = len(JOINT_NAMES)
    skin_weights = sparse.csr_matrix(
        (skin_vals, (skin_rows, skin_cols)), shape=(n_vertices, n_joints))
    reg_counts = np.bincount(reg_rows, minlength=n_joints)
    reg_vals = 1.0 / reg_counts[reg_rows]
    regressor = sparse.csr_matrix((reg_vals, (reg_rows, reg_cols)),
                                  shape=(n_joints, n_vertices))

    hand_joints, hand_basis = (), None
    if with_hands:
        hand_joints = HAND_JOINTS
        q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
        hand_basis = q

    model = BodyModel(vertices, faces, PARENTS, regressor, skin_weights,
                      np.concatenate(shape_dirs), regions, TOPOLOGY_NAME,
                      joint_names=JOINT_NAMES, hand_joints=hand_joints,
                      hand_basis=hand_basis)
    logger.debug("Built test humanoid {}".format(model))
    return model
