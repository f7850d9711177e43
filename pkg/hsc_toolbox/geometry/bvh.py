import logging

from dataclasses import dataclass

import numpy as np
import trimesh

from hsc_toolbox.exceptions import GeometryException

logger = logging.getLogger(__name__)

DEFAULT_LEAF_SIZE = 4
DEGENERATE_AREA = 1e-16


@dataclass(frozen=True)
class SurfaceHit:
    """Result of a point-to-surface query.

    `normal` is the geometric normal of `face_index`; it is the zero vector
    when that face is degenerate.
    """
    distance: float
    point: np.ndarray
    face_index: int
    normal: np.ndarray


@dataclass
class QueryStats:
    """Work done by the closest point queries it was passed to."""
    queries: int = 0
    triangles_tested: int = 0

    def mean_triangles_tested(self):
        if not self.queries:
            return 0.0
        return self.triangles_tested / self.queries


def _segment_closest_points(points, a, b):
    ab = b - a
    denom = np.einsum('ij,ij->i', ab, ab)
    t = np.einsum('ij,ij->i', points - a, ab)
    safe = denom > 0
    t = np.where(safe, t / np.where(safe, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return a + t[:, None] * ab


def _degenerate_closest_points(triangles, points):
    """Closest points on zero-area triangles, taken as the best of the three
    edge segments."""
    best = None
    best_d2 = None
    for i, j in ((0, 1), (1, 2), (2, 0)):
        candidate = _segment_closest_points(
            points, triangles[:, i], triangles[:, j])
        d2 = np.sum((points - candidate) ** 2, axis=1)
        if best is None:
            best, best_d2 = candidate, d2
        else:
            closer = d2 < best_d2
            best[closer] = candidate[closer]
            best_d2[closer] = d2[closer]
    return best


def closest_points_on_triangles(triangles, points, degenerate):
    """Pairwise closest points, row i of `points` against triangle i.

    Parameters
    ----------
    triangles: np.ndarray
        (n, 3, 3) triangle corners
    points: np.ndarray
        (n, 3) query points
    degenerate: np.ndarray
        (n,) bool, rows handled by the segment fallback
    """
    result = np.empty_like(points)
    regular = ~degenerate
    if np.any(regular):
        result[regular] = trimesh.triangles.closest_point(
            triangles[regular], points[regular])
    if np.any(degenerate):
        result[degenerate] = _degenerate_closest_points(
            triangles[degenerate], points[degenerate])
    return result


def _box_distance_sq(points, box_min, box_max):
    below = np.maximum(0.0, box_min - points)
    above = np.maximum(0.0, points - box_max)
    return np.sum(below * below + above * above, axis=1)


class Bvh:
    """Median split axis-aligned bounding box tree over the triangles of a
    Mesh.

    Nodes are kept in flat arrays. A node with `left == -1` is a leaf owning
    `order[start:start + count]`. The tree is not modified by queries and can
    be shared between threads.
    """

    def __init__(self, mesh, leaf_size=DEFAULT_LEAF_SIZE):
        if leaf_size < 1:
            raise ValueError('leaf_size must be at least 1')
        self.mesh = mesh
        self.leaf_size = leaf_size
        self._triangles = mesh.triangles
        self._degenerate = mesh.face_areas <= DEGENERATE_AREA
        self._build()

    @property
    def n_nodes(self):
        return len(self.left)

    def _build(self):
        n_faces = self.mesh.n_faces
        tri_min = self._triangles.min(axis=1) if n_faces else np.zeros((0, 3))
        tri_max = self._triangles.max(axis=1) if n_faces else np.zeros((0, 3))
        centroids = self._triangles.mean(axis=1) if n_faces \
            else np.zeros((0, 3))
        order = np.arange(n_faces)

        box_min, box_max, left, right, start, count = [], [], [], [], [], []

        def new_node(lo, hi):
            faces = order[lo:hi]
            box_min.append(tri_min[faces].min(axis=0))
            box_max.append(tri_max[faces].max(axis=0))
            left.append(-1)
            right.append(-1)
            start.append(lo)
            count.append(hi - lo)
            return len(left) - 1

        if n_faces:
            stack = [(new_node(0, n_faces), 0, n_faces)]
            while stack:
                node, lo, hi = stack.pop()
                if hi - lo <= self.leaf_size:
                    continue
                faces = order[lo:hi]
                extent = np.ptp(centroids[faces], axis=0)
                axis = int(np.argmax(extent))
                # stable sort keeps builds deterministic on ties
                ranked = np.argsort(centroids[faces, axis], kind='stable')
                order[lo:hi] = faces[ranked]
                mid = lo + (hi - lo) // 2
                left_child = new_node(lo, mid)
                right_child = new_node(mid, hi)
                left[node] = left_child
                right[node] = right_child
                stack.append((right_child, mid, hi))
                stack.append((left_child, lo, mid))

        self.order = order
        self.box_min = np.array(box_min).reshape(-1, 3)
        self.box_max = np.array(box_max).reshape(-1, 3)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.start = np.array(start, dtype=np.int64)
        self.count = np.array(count, dtype=np.int64)
        logger.debug("Built BVH with {} nodes over {} triangles".format(
            self.n_nodes, n_faces))

    def leaves(self):
        return np.flatnonzero(self.left < 0)

    def _leaf_candidates(self, point_ids, nodes):
        """Expand (point, leaf) pairs into (point, face) pairs."""
        counts = self.count[nodes]
        total = int(counts.sum())
        offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts,
                                               counts)
        faces = self.order[np.repeat(self.start[nodes], counts) + offsets]
        return np.repeat(point_ids, counts), faces

    def _evaluate(self, points, point_ids, faces, best_d2, best_face,
                  best_point):
        if not len(faces):
            return 0
        closest = closest_points_on_triangles(
            self._triangles[faces], points[point_ids],
            self._degenerate[faces])
        d2 = np.sum((points[point_ids] - closest) ** 2, axis=1)

        # merge with current best; ties go to the lower face index
        ids = np.concatenate([point_ids, np.arange(len(points))])
        all_d2 = np.concatenate([d2, best_d2])
        all_faces = np.concatenate([faces, best_face])
        all_points = np.concatenate([closest, best_point])
        ranked = np.lexsort((all_faces, all_d2, ids))
        first = np.ones(len(ranked), dtype=bool)
        first[1:] = ids[ranked][1:] != ids[ranked][:-1]
        winners = ranked[first]
        best_d2[:] = all_d2[winners]
        best_face[:] = all_faces[winners]
        best_point[:] = all_points[winners]
        return len(faces)

    def _descend_greedy(self, points):
        """Nearest-child descent giving every point one leaf to seed its
        upper bound."""
        nodes = np.zeros(len(points), dtype=np.int64)
        while True:
            internal = self.left[nodes] >= 0
            if not np.any(internal):
                return nodes
            idx = np.flatnonzero(internal)
            lc = self.left[nodes[idx]]
            rc = self.right[nodes[idx]]
            dl = _box_distance_sq(points[idx], self.box_min[lc],
                                  self.box_max[lc])
            dr = _box_distance_sq(points[idx], self.box_min[rc],
                                  self.box_max[rc])
            nodes[idx] = np.where(dl <= dr, lc, rc)

    def closest_points(self, points, stats=None):
        """Closest surface points for many query points at once.

        Parameters
        ----------
        points: array-like
            (N, 3) query points
        stats: QueryStats
            optional, the number of queries and triangle tests are added

        Returns
        -------
        distances: (N,), closest points: (N, 3), face indices: (N,)
        """
        if self.mesh.n_faces == 0:
            raise GeometryException('empty geometry')
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        n = len(points)
        best_d2 = np.full(n, np.inf)
        best_face = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
        best_point = np.zeros((n, 3))

        seeds = self._descend_greedy(points)
        point_ids, faces = self._leaf_candidates(np.arange(n), seeds)
        tested = self._evaluate(points, point_ids, faces, best_d2,
                                best_face, best_point)

        frontier_points = np.arange(n)
        frontier_nodes = np.zeros(n, dtype=np.int64)
        while len(frontier_nodes):
            box_d2 = _box_distance_sq(points[frontier_points],
                                      self.box_min[frontier_nodes],
                                      self.box_max[frontier_nodes])
            keep = box_d2 <= best_d2[frontier_points]
            frontier_points = frontier_points[keep]
            frontier_nodes = frontier_nodes[keep]

            is_leaf = self.left[frontier_nodes] < 0
            # the seed leaf of each point was already evaluated
            fresh = is_leaf & (frontier_nodes != seeds[frontier_points])
            point_ids, faces = self._leaf_candidates(
                frontier_points[fresh], frontier_nodes[fresh])
            tested += self._evaluate(points, point_ids, faces, best_d2,
                                     best_face, best_point)

            internal = ~is_leaf
            parents = frontier_nodes[internal]
            frontier_points = np.repeat(frontier_points[internal], 2)
            frontier_nodes = np.stack(
                [self.left[parents], self.right[parents]], axis=1).ravel()

        if stats is not None:
            stats.queries += n
            stats.triangles_tested += tested
        return np.sqrt(best_d2), best_point, best_face

    def closest_point(self, p):
        distances, points, faces = self.closest_points(np.reshape(p, (1, 3)))
        return distances[0], points[0], int(faces[0])


def closest_surface_point(bvh, p):
    """Closest point on the mesh surface to p.

    Parameters
    ----------
    bvh: Bvh
        Tree over a non-empty mesh
    p: array-like
        Query point, meters

    Returns
    -------
    SurfaceHit
    """
    distance, point, face = bvh.closest_point(p)
    return SurfaceHit(distance=float(distance), point=point, face_index=face,
                      normal=bvh.mesh.face_normals[face].copy())
