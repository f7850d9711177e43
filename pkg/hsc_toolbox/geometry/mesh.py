import logging

import numpy as np
import trimesh

from hsc_toolbox.exceptions import GeometryException

logger = logging.getLogger(__name__)

DEFAULT_NORMAL = np.array([0.0, 0.0, 1.0])


class Mesh:
    """Indexed triangle surface in meters.

    Meshes are immutable after construction, the arrays are flagged read-only
    so a Mesh can be shared between threads and Bvh instances.
    """

    def __init__(self, vertices, faces):
        """
        Parameters
        ----------
        vertices: array-like
            (V, 3) vertex positions in meters
        faces: array-like
            (F, 3) vertex indices per triangle
        """
        vertices = np.array(vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
        if len(faces) and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise GeometryException(
                "face index out of range for {} vertices".format(
                    len(vertices)))
        self.vertices = vertices
        self.faces = faces

        triangles = vertices[faces]
        face_normals = np.zeros((len(faces), 3))
        if len(faces):
            normals, valid = trimesh.triangles.normals(triangles)
            face_normals[valid] = normals
            self.face_areas = trimesh.triangles.area(triangles)
        else:
            self.face_areas = np.zeros(0)
        self.face_normals = face_normals
        self.vertex_normals = self._area_weighted_normals()

        for array in (self.vertices, self.faces, self.face_normals,
                      self.face_areas, self.vertex_normals):
            array.setflags(write=False)

    def _area_weighted_normals(self):
        """Degenerate triangles have a zero normal and do not contribute;
        vertices without any valid face get DEFAULT_NORMAL."""
        accumulated = np.zeros_like(self.vertices)
        weighted = self.face_normals * self.face_areas[:, None]
        for corner in range(3):
            np.add.at(accumulated, self.faces[:, corner], weighted)
        norms = np.linalg.norm(accumulated, axis=1)
        normals = np.tile(DEFAULT_NORMAL, (len(self.vertices), 1))
        valid = norms > 1e-15
        normals[valid] = accumulated[valid] / norms[valid, None]
        return normals

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def triangles(self):
        return self.vertices[self.faces]

    def edges(self):
        """Unique undirected edges as an (E, 2) array, self loops dropped."""
        if not len(self.faces):
            return np.zeros((0, 2), dtype=np.int64)
        edges = np.concatenate([self.faces[:, [0, 1]],
                                self.faces[:, [1, 2]],
                                self.faces[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        edges = edges[edges[:, 0] != edges[:, 1]]
        return np.unique(edges, axis=0)

    def is_consistently_oriented(self):
        """True if no directed edge is used twice by non-degenerate faces,
        i.e. neighbouring faces traverse their shared edge in opposite
        directions."""
        faces = self.faces[self.face_areas > 0]
        if not len(faces):
            return True
        directed = np.concatenate([faces[:, [0, 1]],
                                   faces[:, [1, 2]],
                                   faces[:, [2, 0]]])
        _, counts = np.unique(directed, axis=0, return_counts=True)
        return bool(np.all(counts == 1))

    def transformed(self, transform):
        """Return a new mesh with `transform` (a RigidTransform) applied."""
        return Mesh(transform.apply(self.vertices), self.faces)

    def with_vertices(self, vertices):
        """Same connectivity, new vertex positions (e.g. a posed body)."""
        return Mesh(vertices, self.faces)

    def to_trimesh(self, vertex_colors=None):
        return trimesh.Trimesh(vertices=self.vertices, faces=self.faces,
                               vertex_colors=vertex_colors, process=False)

    def __repr__(self):
        return 'Mesh(n_vertices={}, n_faces={})'.format(
            self.n_vertices, self.n_faces)
