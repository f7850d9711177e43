"""Per-vertex inputs of the contact classifier."""

import logging

import numpy as np
from scipy import sparse

from hsc_toolbox.exceptions import DimensionMismatch
from hsc_toolbox.body_model.model import pose_body
from hsc_toolbox.geometry.mesh import Mesh

logger = logging.getLogger(__name__)

PELVIS = 0
# position (3), normal (3), template position (3)
FEATURE_DIM = 9


class VertexFeatures:
    """(V, D) feature rows plus a per-vertex flag for masked rows.

    `neighbors` is the optional (V, V) mesh adjacency the classifier fills
    masked rows from.
    """

    def __init__(self, values, mask=None, neighbors=None):
        values = np.array(values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatch('values', '(V, D)', values.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError('features must be finite')
        if mask is None:
            mask = np.zeros(len(values), dtype=bool)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (len(values),):
            raise DimensionMismatch('mask', len(values), mask.shape)
        if neighbors is not None and \
                neighbors.shape != (len(values), len(values)):
            raise DimensionMismatch('neighbors', (len(values), len(values)),
                                    neighbors.shape)
        self.values = values
        self.mask = mask
        self.neighbors = neighbors

    @property
    def n_vertices(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def n_masked(self):
        return int(self.mask.sum())

    def copy(self):
        return VertexFeatures(self.values.copy(), self.mask.copy(),
                              self.neighbors)

    def __repr__(self):
        return 'VertexFeatures(V={}, D={}, masked={})'.format(
            self.n_vertices, self.dim, self.n_masked)


def mesh_adjacency(mesh):
    """Symmetric (V, V) 0/1 adjacency of the mesh edges."""
    edges = mesh.edges()
    n = mesh.n_vertices
    adjacency = sparse.coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    return (adjacency + adjacency.T).tocsr()


def vertex_features(model, vertices, joints):
    """Features of a posed body in scene coordinates (z up).

    Positions are centered horizontally on the pelvis and keep their height
    above the scene origin; normals come from the posed surface and the
    template positions serve as positional encoding.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    if vertices.shape != (model.n_vertices, 3):
        raise DimensionMismatch('vertices', (model.n_vertices, 3),
                                vertices.shape)
    centered = vertices.copy()
    centered[:, :2] -= np.asarray(joints)[PELVIS, :2]
    mesh = Mesh(vertices, model.faces)
    return VertexFeatures(np.concatenate(
        [centered, mesh.vertex_normals, model.template_vertices], axis=1),
        neighbors=mesh_adjacency(mesh))


def features_for_params(model, params, align=None):
    """Pose the body, move it into scene coordinates and compute its
    features."""
    vertices, joints = pose_body(model, params)
    if align is not None:
        vertices, joints = align.apply(vertices), align.apply(joints)
    return vertex_features(model, vertices, joints)


def mask_count(fraction, n_vertices):
    return int(np.floor(fraction * n_vertices + 1e-9))


def mvm_mask(features, fraction, seed):
    """Zero the features of floor(fraction * V) uniformly chosen vertices
    and flag them as masked. Supervision of the masked vertices is kept by
    the caller."""
    if not 0 <= fraction < 1:
        raise ValueError('mask fraction must be in [0, 1)')
    masked = features.copy()
    count = mask_count(fraction, features.n_vertices)
    if count == 0:
        return masked
    rng = np.random.default_rng(seed)
    chosen = rng.choice(features.n_vertices, size=count, replace=False)
    masked.values[chosen] = 0.0
    masked.mask[chosen] = True
    return masked


def mask_all(features):
    """Every vertex masked, the input of a fully occluded body."""
    return VertexFeatures(np.zeros_like(features.values),
                          np.ones(features.n_vertices, dtype=bool),
                          features.neighbors)


def neighbor_fill(rows, features):
    """Mean of the unmasked mesh neighbors' rows for every masked vertex.

    Unmasked vertices, masked vertices without an unmasked neighbor and
    features without adjacency get zeros.

    Parameters
    ----------
    rows: array-like
        (V, D) rows to average, usually the standardized features
    features: VertexFeatures
        Provides the mask and the adjacency

    Returns
    -------
    (V, D) array
    """
    rows = np.asarray(rows, dtype=np.float64)
    fill = np.zeros_like(rows)
    if features.neighbors is None or not features.mask.any():
        return fill
    masked = np.flatnonzero(features.mask)
    visible = (~features.mask).astype(np.float64)
    adjacency = features.neighbors[masked]
    counts = np.asarray(adjacency @ visible).ravel()
    sums = np.asarray(adjacency @ (rows * visible[:, None]))
    filled = counts > 0
    fill[masked[filled]] = sums[filled] / counts[filled, None]
    return fill
