"""OBJ / PLY reading and writing for scene scans and body meshes.

OBJ files are read with a strict line parser so that malformed input is
reported with its line number; PLY files are read and all files are written
through trimesh.
"""

import logging
import os

import numpy as np
import trimesh

from hsc_toolbox.exceptions import MeshParseError
from hsc_toolbox.geometry.mesh import Mesh
from hsc_toolbox.pipeline.fileio import atomic_write

logger = logging.getLogger(__name__)

FORMATS = ('obj', 'ply')

CONTACT_COLOR = (0, 255, 0)
NO_CONTACT_COLOR = (128, 128, 128)
FALSE_POSITIVE_COLOR = (255, 0, 0)
FALSE_NEGATIVE_COLOR = (0, 0, 255)

# OBJ statements that carry no geometry we use
_IGNORED_OBJ_KEYS = ('vn', 'vt', 'vp', 'o', 'g', 's', 'l', 'usemtl', 'mtllib')


def _format_of(path, file_format):
    file_format = file_format or os.path.splitext(path)[1][1:]
    file_format = file_format.lower()
    if file_format not in FORMATS:
        raise ValueError("unsupported mesh format '{}'".format(file_format))
    return file_format


def _parse_face_index(token, n_vertices, path, line_number):
    try:
        index = int(token.split('/')[0])
    except ValueError:
        raise MeshParseError(path, line_number,
                             "invalid face index '{}'".format(token))
    if index < 0:
        raise MeshParseError(path, line_number,
                             "negative face index {}".format(index))
    if index == 0 or index > n_vertices:
        raise MeshParseError(path, line_number,
                             "face index {} out of range".format(index))
    return index - 1


def _read_obj(path):
    vertices = []
    faces = []
    with open(path, 'r') as f:
        for line_number, line in enumerate(f, start=1):
            tokens = line.split('#', 1)[0].split()
            if not tokens:
                continue
            key = tokens[0]
            if key == 'v':
                if len(tokens) < 4:
                    raise MeshParseError(path, line_number,
                                         "vertex needs 3 coordinates")
                try:
                    vertices.append([float(t) for t in tokens[1:4]])
                except ValueError:
                    raise MeshParseError(path, line_number,
                                         "invalid vertex coordinate")
            elif key == 'f':
                if len(tokens) < 4:
                    raise MeshParseError(path, line_number,
                                         "face needs at least 3 indices")
                polygon = [_parse_face_index(t, len(vertices), path,
                                             line_number)
                           for t in tokens[1:]]
                # fan triangulation for polygons
                for i in range(1, len(polygon) - 1):
                    faces.append([polygon[0], polygon[i], polygon[i + 1]])
            elif key not in _IGNORED_OBJ_KEYS:
                raise MeshParseError(path, line_number,
                                     "unknown statement '{}'".format(key))
    return Mesh(np.array(vertices).reshape(-1, 3),
                np.array(faces, dtype=np.int64).reshape(-1, 3))


def _read_ply(path):
    try:
        loaded = trimesh.load(path, file_type='ply', process=False,
                              force='mesh')
        return Mesh(np.asarray(loaded.vertices), np.asarray(loaded.faces))
    except Exception as e:
        raise MeshParseError(path, None, "malformed PLY: {}".format(e))


def load_mesh(path, file_format=None):
    """Load a triangle mesh from an OBJ or PLY file.

    Parameters
    ----------
    path: str
        Mesh file
    file_format: str
        'obj' or 'ply', inferred from the extension if omitted

    Returns
    -------
    Mesh
    """
    file_format = _format_of(path, file_format)
    if file_format == 'obj':
        mesh = _read_obj(path)
    else:
        mesh = _read_ply(path)
    if not mesh.is_consistently_oriented():
        logger.warning(
            "Faces of {} are not consistently oriented".format(path))
    logger.debug("Loaded {} from {}".format(mesh, path))
    return mesh


def save_mesh(mesh, path, file_format=None, vertex_colors=None):
    """Write a mesh as OBJ or PLY. Vertex colors (uchar RGB per vertex) are
    only written for PLY."""
    file_format = _format_of(path, file_format)
    if vertex_colors is not None:
        vertex_colors = np.asarray(vertex_colors, dtype=np.uint8)
        if file_format != 'ply':
            logger.warning("Vertex colors are dropped for {}".format(path))
            vertex_colors = None
    exported = mesh.to_trimesh(vertex_colors=vertex_colors)
    if file_format == 'obj':
        data = exported.export(file_type='obj', include_normals=False,
                               include_texture=False, digits=10)
    else:
        data = exported.export(file_type='ply', encoding='binary')
    atomic_write(path, data, 'wb' if isinstance(data, bytes) else 'w')


def contact_colors(labels, gt_labels=None):
    """Per-vertex RGB colors for a contact export.

    Without ground truth, contact vertices are green and the rest gray. With
    ground truth, true positives are green, false positives red and false
    negatives blue.
    """
    labels = np.asarray(labels).astype(bool)
    colors = np.tile(np.array(NO_CONTACT_COLOR, dtype=np.uint8),
                     (len(labels), 1))
    if gt_labels is None:
        colors[labels] = CONTACT_COLOR
        return colors
    gt_labels = np.asarray(gt_labels).astype(bool)
    colors[labels & gt_labels] = CONTACT_COLOR
    colors[labels & ~gt_labels] = FALSE_POSITIVE_COLOR
    colors[~labels & gt_labels] = FALSE_NEGATIVE_COLOR
    return colors
