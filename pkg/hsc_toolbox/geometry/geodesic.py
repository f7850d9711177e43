import logging

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from hsc_toolbox.exceptions import GeometryException

logger = logging.getLogger(__name__)


def edge_graph(mesh):
    """Symmetric sparse adjacency of the mesh edges weighted by Euclidean
    length."""
    edges = mesh.edges()
    lengths = np.linalg.norm(
        mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1)
    # coincident vertices still need an edge, csgraph drops stored zeros
    lengths = np.maximum(lengths, np.finfo(np.float64).tiny)
    n = mesh.n_vertices
    graph = sparse.coo_matrix((lengths, (edges[:, 0], edges[:, 1])),
                              shape=(n, n))
    return graph.tocsr()


def geodesic_distances(mesh, sources, graph=None):
    """Multi-source shortest path distance along mesh edges.

    Parameters
    ----------
    mesh: Mesh
    sources: iterable of int
        Source vertex indices
    graph: scipy.sparse matrix
        Precomputed `edge_graph(mesh)`, to reuse across calls

    Returns
    -------
    np.ndarray
        (V,) distances in meters, +inf on components without a source
    """
    sources = np.unique(np.asarray(list(sources), dtype=np.int64))
    if not len(sources):
        raise GeometryException('no sources')
    if sources.min() < 0 or sources.max() >= mesh.n_vertices:
        raise GeometryException('source index out of range')
    if graph is None:
        graph = edge_graph(mesh)
    return csgraph.dijkstra(graph, directed=False, indices=sources,
                            min_only=True)
