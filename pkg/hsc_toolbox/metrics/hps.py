"""Body reconstruction errors after Procrustes (PA) or pelvis (TR)
alignment."""

import enum
import logging

from dataclasses import dataclass

import numpy as np

from hsc_toolbox.exceptions import DimensionMismatch
from hsc_toolbox.body_model.model import pose_body
from hsc_toolbox.geometry.rigid import similarity_align

logger = logging.getLogger(__name__)

MM = 1000.0
PELVIS = 0
CONTACT_GROUP = 'contact'
NO_CONTACT_GROUP = 'foot_ground_only'


class Alignment(enum.Enum):
    PA = 'PA'
    TR = 'TR'


@dataclass
class HpsScore:
    """Mean errors in millimeters."""
    mpjpe: float
    v2v: float
    alignment: Alignment
    frames: int = 1

    def to_dict(self):
        return {'mpjpe': self.mpjpe, 'v2v': self.v2v,
                'alignment': self.alignment.value, 'frames': self.frames}


def _check(pred, gt, name):
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 3)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 3)
    if pred.shape != gt.shape:
        raise DimensionMismatch(name, len(gt), len(pred))
    return pred, gt


def _aligned_error(pred, gt, align, pred_pelvis, gt_pelvis):
    align = Alignment(align)
    if align is Alignment.PA:
        pred = similarity_align(pred, gt)
    else:
        pred = pred - (np.asarray(pred_pelvis) - np.asarray(gt_pelvis))
    return float(np.mean(np.linalg.norm(pred - gt, axis=1)) * MM)


def mpjpe(pred_joints, gt_joints, align=Alignment.PA, pelvis=PELVIS):
    """Mean per-joint position error in mm; inputs in meters."""
    pred, gt = _check(pred_joints, gt_joints, 'joints')
    return _aligned_error(pred, gt, align, pred[pelvis], gt[pelvis])


def v2v(pred_vertices, gt_vertices, align=Alignment.PA, pred_pelvis=None,
        gt_pelvis=None):
    """Mean vertex-to-vertex error in mm.

    TR alignment needs the pelvis locations of both bodies.
    """
    pred, gt = _check(pred_vertices, gt_vertices, 'vertices')
    if Alignment(align) is Alignment.TR and (pred_pelvis is None
                                             or gt_pelvis is None):
        raise ValueError('pelvis locations required for TR alignment')
    return _aligned_error(pred, gt, align, pred_pelvis, gt_pelvis)


def score_hps(model, pred_params, gt_params, align=Alignment.PA):
    """HpsScore of one frame from body parameters."""
    pred_v, pred_j = pose_body(model, pred_params)
    gt_v, gt_j = pose_body(model, gt_params)
    return HpsScore(mpjpe(pred_j, gt_j, align),
                    v2v(pred_v, gt_v, align, pred_j[PELVIS], gt_j[PELVIS]),
                    Alignment(align))


def mean_score(scores):
    if not scores:
        return None
    alignments = set(s.alignment for s in scores)
    if len(alignments) != 1:
        raise ValueError('cannot average scores of different alignments')
    return HpsScore(float(np.mean([s.mpjpe for s in scores])),
                    float(np.mean([s.v2v for s in scores])),
                    alignments.pop(), frames=len(scores))


def has_meaningful_contact(contacts, model):
    """Any contact vertex outside the foot soles."""
    return bool(np.any(contacts.mask & ~model.foot_sole_mask))


def hps_by_contact(per_frame_hps, per_frame_contacts, model):
    """Average HPS errors separately over frames with scene contact beyond
    the feet and frames with foot-ground contact only.

    Returns
    -------
    dict
        group name -> HpsScore, or None for an empty group
    """
    if len(per_frame_hps) != len(per_frame_contacts):
        raise ValueError('{} scores for {} contact frames'.format(
            len(per_frame_hps), len(per_frame_contacts)))
    groups = {CONTACT_GROUP: [], NO_CONTACT_GROUP: []}
    for score, contacts in zip(per_frame_hps, per_frame_contacts):
        key = CONTACT_GROUP if has_meaningful_contact(contacts, model) \
            else NO_CONTACT_GROUP
        groups[key].append(score)
    logger.debug("HPS frames with contact: {}, without: {}".format(
        len(groups[CONTACT_GROUP]), len(groups[NO_CONTACT_GROUP])))
    return {k: mean_score(v) for k, v in groups.items()}
