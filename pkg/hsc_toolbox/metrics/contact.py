"""Contact detection scores: vertex precision, recall, F1 and the on-mesh
geodesic error of the predicted contact vertices."""

import logging

from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from hsc_toolbox.exceptions import GeometryException
from hsc_toolbox.geometry.geodesic import geodesic_distances, edge_graph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmptySetConvention:
    """(precision, recall, f1) reported when a ratio is undefined."""
    both_empty: tuple = (1.0, 1.0, 1.0)
    pred_empty: tuple = (0.0, 0.0, 0.0)
    gt_empty: tuple = (0.0, 0.0, 0.0)


DEFAULT_CONVENTION = EmptySetConvention()


@dataclass
class ContactScore:
    precision: float
    recall: float
    f1: float
    # meters, None when the frame is excluded from the geodesic mean
    geodesic_error: Optional[float] = None
    tp: int = 0
    fp: int = 0
    fn: int = 0
    frames_evaluated: int = 1
    geodesic_frames: int = 0

    def to_dict(self):
        return asdict(self)


def f1_score(precision, recall):
    if precision + recall <= 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def contact_counts(pred, gt):
    pred.check_compatible(gt)
    p, g = pred.mask, gt.mask
    return (int(np.count_nonzero(p & g)), int(np.count_nonzero(p & ~g)),
            int(np.count_nonzero(~p & g)))


def contact_prf(pred, gt, convention=DEFAULT_CONVENTION):
    """Vertex-level precision, recall and F1 of one frame.

    Parameters
    ----------
    pred: ContactVector
    gt: ContactVector
    convention: EmptySetConvention

    Returns
    -------
    (precision, recall, f1)
    """
    tp, fp, fn = contact_counts(pred, gt)
    n_pred, n_gt = tp + fp, tp + fn
    if n_pred == 0 and n_gt == 0:
        return tuple(convention.both_empty)
    if n_pred == 0:
        return tuple(convention.pred_empty)
    if n_gt == 0:
        return tuple(convention.gt_empty)
    precision = tp / n_pred
    recall = tp / n_gt
    return precision, recall, f1_score(precision, recall)


def contact_geodesic_error(pred, gt, mesh, graph=None):
    """Mean geodesic distance from every predicted contact vertex to the
    closest ground truth contact vertex, in meters.

    True positives contribute 0. Returns None when either set is empty,
    the frame is then excluded from averages.
    """
    if mesh.n_vertices == 0 or mesh.n_faces == 0:
        raise GeometryException('empty geometry')
    pred.check_compatible(gt)
    if len(pred) != mesh.n_vertices:
        raise GeometryException('{} labels for a mesh of {} vertices'.format(
            len(pred), mesh.n_vertices))
    if pred.n_contacts == 0 or gt.n_contacts == 0:
        return None
    distances = geodesic_distances(mesh, gt.indices(), graph=graph)
    return float(np.mean(distances[pred.indices()]))


def score_contact(pred, gt, mesh, graph=None,
                  convention=DEFAULT_CONVENTION):
    """ContactScore of one frame."""
    tp, fp, fn = contact_counts(pred, gt)
    precision, recall, f1 = contact_prf(pred, gt, convention)
    geodesic = contact_geodesic_error(pred, gt, mesh, graph)
    return ContactScore(precision, recall, f1, geodesic, tp, fp, fn,
                        frames_evaluated=1,
                        geodesic_frames=int(geodesic is not None))


def score_sequence(preds, gts, mesh, convention=DEFAULT_CONVENTION):
    """Per-frame scores of matching prediction and ground truth lists,
    sharing one edge graph."""
    if len(preds) != len(gts):
        raise ValueError('{} predictions for {} ground truth frames'.format(
            len(preds), len(gts)))
    graph = edge_graph(mesh)
    return [score_contact(p, g, mesh, graph, convention)
            for p, g in zip(preds, gts)]
