"""Dense contact annotation of fitted bodies placed in a scanned scene."""

import logging

import numpy as np

from hsc_toolbox.constants import FOOT_SOLE
from hsc_toolbox.exceptions import TopologyMismatch, DimensionMismatch
from hsc_toolbox.body_model.model import pose_body
from hsc_toolbox.geometry.bvh import Bvh
from hsc_toolbox.geometry.mesh import Mesh
from hsc_toolbox.contact.labels import ContactVector, ContactConfig

logger = logging.getLogger(__name__)

# accepted slack on the normal test for exactly perpendicular normals
COSINE_SLACK = 1e-12


def vertex_thresholds(regions, cfg):
    """Distance threshold of every vertex from its region tag."""
    regions = np.asarray(regions)
    return np.where(regions == FOOT_SOLE, cfg.threshold_foot,
                    cfg.threshold_body)


def normals_compatible(body_normals, scene_normals, max_angle):
    """Body normals and flipped scene normals within max_angle degrees."""
    cosine = -np.sum(body_normals * scene_normals, axis=1)
    return cosine >= np.cos(np.radians(max_angle)) - COSINE_SLACK


def annotate_contact(body_vertices, body_normals, model, scene_bvh,
                     cfg=None, frame=None):
    """Per-vertex contact labels of a body in scene coordinates.

    A vertex is in contact when its unsigned distance to the scene surface is
    below the threshold of its region and its normal faces the closest scene
    face.

    Parameters
    ----------
    body_vertices: np.ndarray
        (V, 3) posed vertices in scene coordinates
    body_normals: np.ndarray
        (V, 3) unit vertex normals
    model: BodyModel
        provides the topology name and the vertex regions
    scene_bvh: Bvh
    cfg: ContactConfig
    frame: int, optional

    Returns
    -------
    ContactVector
    """
    cfg = (cfg or ContactConfig()).validate()
    body_vertices = np.asarray(body_vertices, dtype=np.float64)
    body_normals = np.asarray(body_normals, dtype=np.float64)
    regions = model.vertex_regions()
    if len(body_vertices) != len(regions):
        raise TopologyMismatch(
            "{} vertices for topology '{}' with {} vertices".format(
                len(body_vertices), model.topology_name, len(regions)))
    if body_normals.shape != body_vertices.shape:
        raise DimensionMismatch('body_normals', body_vertices.shape,
                                body_normals.shape)

    distances, _, faces = scene_bvh.closest_points(body_vertices)
    scene_normals = scene_bvh.mesh.face_normals[faces]
    close = distances < vertex_thresholds(regions, cfg)
    facing = normals_compatible(body_normals, scene_normals,
                                cfg.normal_max_angle)
    labels = (close & facing).astype(np.uint8)
    logger.debug("Frame {}: {} of {} vertices in contact".format(
        frame, int(labels.sum()), len(labels)))
    return ContactVector(labels, model.topology_name, frame=frame)


def posed_in_scene(model, params, align):
    """Posed body mesh of one frame moved into scene coordinates."""
    vertices, _ = pose_body(model, params)
    return Mesh(align.apply(vertices), model.faces)


def contact_from_fit(fit, model, scene, align, cfg=None, scene_bvh=None):
    """Contact labels of every fitted frame.

    Parameters
    ----------
    fit: FitResult
    model: BodyModel
    scene: Mesh
    align: RigidTransform
        camera (fit) coordinates to scene coordinates
    cfg: ContactConfig
    scene_bvh: Bvh, optional
        reused when given, built from `scene` otherwise

    Returns
    -------
    list of ContactVector
    """
    bvh = scene_bvh or Bvh(scene)
    contacts = []
    for frame, params in zip(fit.frames, fit.params):
        body = posed_in_scene(model, params, align)
        contacts.append(annotate_contact(body.vertices, body.vertex_normals,
                                         model, bvh, cfg, frame=frame))
    logger.info("Annotated {} frames, mean {:.1f} contact vertices".format(
        len(contacts), np.mean([c.n_contacts for c in contacts])
        if contacts else 0.0))
    return contacts
