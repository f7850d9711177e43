"""Simpler contact labelers used as baselines for the dense annotation."""

import logging

import numpy as np

from hsc_toolbox.constants import UNIFORM_THRESHOLD
from hsc_toolbox.exceptions import DimensionMismatch
from hsc_toolbox.contact.labels import ContactVector

logger = logging.getLogger(__name__)


def uniform_threshold_contact(body_vertices, scene_bvh,
                              threshold=UNIFORM_THRESHOLD, *, topology,
                              frame=None):
    """Every vertex closer to the scene than one whole-body threshold, no
    normal test."""
    if not threshold > 0:
        raise ValueError('threshold must be positive')
    distances, _, _ = scene_bvh.closest_points(body_vertices)
    return ContactVector((distances < threshold).astype(np.uint8), topology,
                         frame=frame)


def joint_contacts_to_vertices(joint_labels, model, frame=None):
    """Expand per-joint contact labels to the vertices each joint
    dominates in the skinning weights."""
    joint_labels = np.asarray(joint_labels).astype(bool)
    if len(joint_labels) != model.n_joints:
        raise DimensionMismatch('joint_labels', model.n_joints,
                                len(joint_labels))
    labels = joint_labels[model.dominant_joint()].astype(np.uint8)
    return ContactVector(labels, model.topology_name, frame=frame)
