import logging

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse

from hsc_toolbox.constants import FOOT_SOLE
from hsc_toolbox.exceptions import DimensionMismatch
from hsc_toolbox.geometry.mesh import Mesh
from hsc_toolbox.body_model.rotation import (
    rotvecs_to_matrices, left_jacobian, skew_many
)

logger = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-6
MAX_INFLUENCES = 4
DEFAULT_REGION = 'BODY'


class BodyModel:
    """Articulated template: kinematic tree, joint regressor, linear blend
    skinning weights and linear shape blendshapes.

    Joints are ordered so that every parent precedes its children, the root
    (index 0, the pelvis) has parent -1.
    """

    def __init__(self, template_vertices, faces, parents, joint_regressor,
                 skin_weights, shape_dirs, regions, topology_name,
                 joint_names=None, hand_joints=(), hand_basis=None):
        """
        Parameters
        ----------
        template_vertices: array-like
            (V, 3) rest vertices, meters
        faces: array-like
            (F, 3)
        parents: array-like
            (J,) parent joint index, -1 for the root
        joint_regressor: scipy.sparse matrix or array-like
            (J, V), rows sum to 1
        skin_weights: scipy.sparse matrix or array-like
            (V, J), rows sum to 1, at most 4 influences per vertex
        shape_dirs: array-like
            (V, 3, B) shape blendshape basis
        regions: dict
            region name -> vertex indices, must contain FOOT_SOLE for
            contact annotation
        topology_name: str
        joint_names: list of str
        hand_joints: sequence of int
            joints driven by the low dimensional hand pose
        hand_basis: array-like
            (3 * len(hand_joints), K) linear map hand pose -> joint
            axis-angle
        """
        self.template_vertices = np.array(template_vertices,
                                          dtype=np.float64).reshape(-1, 3)
        self.faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
        self.parents = np.array(parents, dtype=np.int64)
        self.joint_regressor = sparse.csr_matrix(joint_regressor,
                                                 dtype=np.float64)
        self.skin_weights = sparse.csr_matrix(skin_weights, dtype=np.float64)
        self.shape_dirs = np.array(shape_dirs, dtype=np.float64)
        self.regions = {name: np.array(sorted(set(int(i) for i in idx)),
                                       dtype=np.int64)
                        for name, idx in regions.items()}
        self.topology_name = topology_name
        self.joint_names = list(joint_names) if joint_names is not None \
            else ['joint_{}'.format(i) for i in range(len(self.parents))]
        self.hand_joints = np.array(hand_joints, dtype=np.int64)
        if hand_basis is None:
            hand_basis = np.zeros((3 * len(self.hand_joints), 0))
        self.hand_basis = np.array(hand_basis, dtype=np.float64)
        self._validate()

        self.mesh = Mesh(self.template_vertices, self.faces)
        # ancestor_or_self[k, m]: joint k moves joint m
        n = self.n_joints
        self.ancestor_or_self = np.eye(n, dtype=bool)
        for m in range(n):
            k = self.parents[m]
            while k >= 0:
                self.ancestor_or_self[k, m] = True
                k = self.parents[k]

    def _validate(self):
        n_vertices = len(self.template_vertices)
        n_joints = len(self.parents)
        if self.parents[0] != -1:
            raise ValueError('joint 0 must be the root')
        for k in range(1, n_joints):
            if not 0 <= self.parents[k] < k:
                raise ValueError(
                    'parent of joint {} must precede it, got {}'.format(
                        k, self.parents[k]))
        if self.joint_regressor.shape != (n_joints, n_vertices):
            raise DimensionMismatch('joint_regressor',
                                    (n_joints, n_vertices),
                                    self.joint_regressor.shape)
        if self.skin_weights.shape != (n_vertices, n_joints):
            raise DimensionMismatch('skin_weights', (n_vertices, n_joints),
                                    self.skin_weights.shape)
        if self.shape_dirs.ndim != 3 or \
                self.shape_dirs.shape[:2] != (n_vertices, 3):
            raise DimensionMismatch('shape_dirs', (n_vertices, 3, 'B'),
                                    self.shape_dirs.shape)
        for name, matrix in (('joint_regressor', self.joint_regressor),
                             ('skin_weights', self.skin_weights)):
            sums = np.asarray(matrix.sum(axis=1)).ravel()
            if np.any(np.abs(sums - 1) > WEIGHT_TOLERANCE):
                raise ValueError('rows of {} must sum to 1'.format(name))
        if np.diff(self.skin_weights.indptr).max(initial=0) > MAX_INFLUENCES:
            raise ValueError('more than {} skinning influences'.format(
                MAX_INFLUENCES))
        for name, idx in self.regions.items():
            if len(idx) and (idx.min() < 0 or idx.max() >= n_vertices):
                raise ValueError(
                    "region '{}' has out of range vertices".format(name))
        if len(self.joint_names) != n_joints:
            raise DimensionMismatch('joint_names', n_joints,
                                    len(self.joint_names))
        if self.hand_basis.shape[0] != 3 * len(self.hand_joints):
            raise DimensionMismatch('hand_basis', 3 * len(self.hand_joints),
                                    self.hand_basis.shape[0])

    @property
    def n_vertices(self):
        return len(self.template_vertices)

    @property
    def n_joints(self):
        return len(self.parents)

    @property
    def n_shape(self):
        return self.shape_dirs.shape[2]

    @property
    def n_hand(self):
        return self.hand_basis.shape[1]

    @property
    def has_hands(self):
        return len(self.hand_joints) > 0 and self.n_hand > 0

    def joint_index(self, name):
        return self.joint_names.index(name)

    def bones(self):
        """(parent, child) pairs of the kinematic tree."""
        return [(int(self.parents[k]), k) for k in range(1, self.n_joints)]

    def region_mask(self, name):
        mask = np.zeros(self.n_vertices, dtype=bool)
        if name in self.regions:
            mask[self.regions[name]] = True
        return mask

    @property
    def foot_sole_mask(self):
        return self.region_mask(FOOT_SOLE)

    def vertex_regions(self):
        """Per-vertex region tag, FOOT_SOLE taking precedence over the
        other regions."""
        tags = np.full(self.n_vertices, DEFAULT_REGION, dtype=object)
        for name in sorted(self.regions):
            if name != FOOT_SOLE:
                tags[self.regions[name]] = name
        if FOOT_SOLE in self.regions:
            tags[self.regions[FOOT_SOLE]] = FOOT_SOLE
        return tags

    def dominant_joint(self):
        """Joint with the largest skinning weight for every vertex."""
        return np.asarray(self.skin_weights.argmax(axis=1)).ravel()

    def shaped_template(self, shape):
        return self.template_vertices + np.einsum(
            'vcb,b->vc', self.shape_dirs, shape)

    def rest_joints(self, shape):
        return self.joint_regressor @ self.shaped_template(shape)

    def __repr__(self):
        return ("BodyModel(topology='{}', n_vertices={}, n_joints={}, "
                "n_shape={}, n_hand={})").format(
            self.topology_name, self.n_vertices, self.n_joints,
            self.n_shape, self.n_hand)


@dataclass
class BodyParams:
    """Pose and shape of one body.

    The first pose entry is the global orientation.
    """
    global_translation: np.ndarray
    pose: np.ndarray
    shape: np.ndarray
    hand_pose: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.global_translation = np.array(self.global_translation,
                                           dtype=np.float64).reshape(3)
        self.pose = np.array(self.pose, dtype=np.float64).ravel()
        self.shape = np.array(self.shape, dtype=np.float64).ravel()
        if self.hand_pose is None:
            self.hand_pose = np.zeros(0)
        self.hand_pose = np.array(self.hand_pose, dtype=np.float64).ravel()

    @classmethod
    def zeros(cls, model):
        return cls(np.zeros(3), np.zeros(3 * model.n_joints),
                   np.zeros(model.n_shape), np.zeros(model.n_hand))

    def copy(self):
        return BodyParams(self.global_translation.copy(), self.pose.copy(),
                          self.shape.copy(), self.hand_pose.copy())

    def joint_rotvecs(self):
        return self.pose.reshape(-1, 3)

    def validate(self, model):
        if len(self.pose) != 3 * model.n_joints:
            raise DimensionMismatch('pose', 3 * model.n_joints,
                                    len(self.pose))
        if len(self.shape) != model.n_shape:
            raise DimensionMismatch('shape', model.n_shape, len(self.shape))
        if len(self.hand_pose) not in (0, model.n_hand):
            raise DimensionMismatch('hand_pose', model.n_hand,
                                    len(self.hand_pose))
        for name in ('global_translation', 'pose', 'shape', 'hand_pose'):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError("non-finite entries in '{}'".format(name))

    def to_dict(self):
        return {'global_translation': self.global_translation.tolist(),
                'pose': self.pose.tolist(),
                'shape': self.shape.tolist(),
                'hand_pose': self.hand_pose.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d['global_translation'], d['pose'], d['shape'],
                   d.get('hand_pose'))


def effective_pose(model, params):
    """Per-joint axis-angle with the hand pose folded into the hand
    joints."""
    rotvecs = params.joint_rotvecs().copy()
    if model.has_hands and len(params.hand_pose):
        rotvecs[model.hand_joints] += (
            model.hand_basis @ params.hand_pose).reshape(-1, 3)
    return rotvecs


def _world_transforms(model, rest_joints, rotvecs, translation):
    """World rotations (J, 3, 3) and positions (J, 3) of every joint."""
    local = rotvecs_to_matrices(rotvecs)
    rotations = np.empty_like(local)
    positions = np.empty_like(rest_joints)
    rotations[0] = local[0]
    positions[0] = rest_joints[0] + translation
    for k in range(1, model.n_joints):
        p = model.parents[k]
        rotations[k] = rotations[p] @ local[k]
        positions[k] = positions[p] + rotations[p] @ (
            rest_joints[k] - rest_joints[p])
    return rotations, positions


def pose_body(model, params):
    """Shape, pose and skin the template.

    Parameters
    ----------
    model: BodyModel
    params: BodyParams

    Returns
    -------
    posed_vertices: (V, 3), posed_joints: (J, 3)
    """
    params.validate(model)
    shaped = model.shaped_template(params.shape)
    rest_joints = model.joint_regressor @ shaped
    rotations, positions = _world_transforms(
        model, rest_joints, effective_pose(model, params),
        params.global_translation)

    # per-joint affine map x -> G_k (x - j_k) + p_k, blended per vertex
    offsets = positions - np.einsum('kij,kj->ki', rotations, rest_joints)
    affine = np.concatenate([rotations.reshape(-1, 9), offsets], axis=1)
    blended = model.skin_weights @ affine
    vertices = np.einsum('vij,vj->vi', blended[:, :9].reshape(-1, 3, 3),
                         shaped) + blended[:, 9:]
    return vertices, positions


def free_parameter_count(model):
    """Size of the vector [translation, pose, hand_pose]."""
    return 3 + 3 * model.n_joints + model.n_hand


def joints_and_jacobian(model, params):
    """Posed joints and their Jacobian.

    Returns
    -------
    joints: (J, 3)
    jacobian: (J, 3, P) derivative with respect to the stacked vector
        [global_translation (3), pose (3J), hand_pose (K)]; shape is held
        fixed
    """
    params.validate(model)
    rest_joints = model.rest_joints(params.shape)
    rotvecs = effective_pose(model, params)
    rotations, positions = _world_transforms(
        model, rest_joints, rotvecs, params.global_translation)

    n = model.n_joints
    jacobian = np.zeros((n, 3, free_parameter_count(model)))
    jacobian[:, :, :3] = np.eye(3)
    for k in range(n):
        parent_rotation = np.eye(3) if k == 0 else \
            rotations[model.parents[k]]
        # d p_m / d w_k = -[p_m - p_k]x G_parent(k) J_l(w_k)
        column = parent_rotation @ left_jacobian(rotvecs[k])
        moved = np.flatnonzero(model.ancestor_or_self[k])
        lever = skew_many(positions[moved] - positions[k])
        jacobian[moved, :, 3 + 3 * k:6 + 3 * k] = -lever @ column

    if model.has_hands:
        hand_columns = np.concatenate(
            [3 + 3 * k + np.arange(3) for k in model.hand_joints])
        jacobian[:, :, 3 + 3 * n:] = \
            jacobian[:, :, hand_columns] @ model.hand_basis
    return positions, jacobian


def pack_free_parameters(params):
    return np.concatenate([params.global_translation, params.pose,
                           params.hand_pose])


def unpack_free_parameters(model, vector, shape, hand=True):
    n = model.n_joints
    hand_pose = vector[3 + 3 * n:] if hand else np.zeros(0)
    return BodyParams(vector[:3], vector[3:3 + 3 * n], shape, hand_pose)
