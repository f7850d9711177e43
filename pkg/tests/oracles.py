import heapq

import numpy as np
import trimesh


def _segment(p, a, b):
    ab = b - a
    denom = np.dot(ab, ab)
    if denom == 0:
        return a
    t = np.clip(np.dot(p - a, ab) / denom, 0.0, 1.0)
    return a + t * ab


def _inside(q, a, b, c, n):
    return all(np.dot(np.cross(v1 - v0, q - v0), n) >= 0
               for v0, v1 in ((a, b), (b, c), (c, a)))


def brute_force_closest(mesh, p):
    """Closest point over every triangle, by projection onto the plane and
    the three edges."""
    best = (np.inf, None, None)
    for f, (a, b, c) in enumerate(mesh.triangles):
        candidates = [_segment(p, a, b), _segment(p, b, c), _segment(p, c, a)]
        n = np.cross(b - a, c - a)
        if np.linalg.norm(n) > 0:
            n = n / np.linalg.norm(n)
            q = p - np.dot(p - a, n) * n
            if _inside(q, a, b, c, n):
                candidates.append(q)
        for q in candidates:
            d = np.linalg.norm(p - q)
            if d < best[0] - 1e-15:
                best = (d, q, f)
    return best


def naive_dijkstra(n_vertices, edges, sources):
    adjacency = [[] for _ in range(n_vertices)]
    for i, j, w in edges:
        adjacency[i].append((j, w))
        adjacency[j].append((i, w))
    dist = [np.inf] * n_vertices
    heap = []
    for s in sources:
        dist[s] = 0.0
        heap.append((0.0, s))
    heapq.heapify(heap)
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adjacency[u]:
            if d + w < dist[v]:
                dist[v] = d + w
                heapq.heappush(heap, (d + w, v))
    return np.array(dist)


def brute_force_contact(vertices, normals, thresholds, scene, max_angle,
                        tie=1e-9):
    """Contact labels against every scene triangle.

    Returns the labels and a mask of the vertices whose label does not
    depend on how ties between equally close faces are broken.
    """
    n_faces = scene.n_faces
    triangles = np.repeat(scene.triangles[None], len(vertices), axis=0)
    points = np.repeat(vertices, n_faces, axis=0)
    closest = trimesh.triangles.closest_point(
        triangles.reshape(-1, 3, 3), points)
    distances = np.linalg.norm(points - closest, axis=1).reshape(
        len(vertices), n_faces)
    cosine = -normals @ scene.face_normals.T
    facing = cosine >= np.cos(np.radians(max_angle)) - 1e-12
    nearest = distances.min(axis=1)
    tied = distances <= nearest[:, None] + tie
    decision = (distances < thresholds[:, None]) & facing
    votes = np.where(tied, decision, False).sum(axis=1)
    n_tied = tied.sum(axis=1)
    labels = votes == n_tied
    unambiguous = (votes == 0) | (votes == n_tied)
    # a vertex right at its threshold could go either way as well
    unambiguous &= np.abs(nearest - thresholds) > tie
    return labels.astype(np.uint8), unambiguous
