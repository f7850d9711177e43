import logging

from collections import OrderedDict

import numpy as np

from hsc_toolbox.exceptions import DatasetException
from hsc_toolbox.metrics.contact import ContactScore

logger = logging.getLogger(__name__)

# (scene, hsi, subject) seen at training for every subset row; g is the
# full test set, h and i complete the partition of the flag combinations
SUBSET_ROWS = OrderedDict([
    ('a', (False, True, True)),
    ('b', (True, True, False)),
    ('c', (True, False, False)),
    ('d', (False, True, False)),
    ('e', (False, False, True)),
    ('f', (False, False, False)),
    ('h', (True, True, True)),
    ('i', (True, False, True)),
])
FULL_SET = 'g'

SUBSET_COLUMNS = ('subset', 'scene', 'hsi', 'subject', 'precision',
                  'recall', 'f1', 'geodesic_cm', 'frames')
METHOD_COLUMNS = ('method', 'precision', 'recall', 'f1', 'geodesic_cm',
                  'frames')


def subset_of(tag):
    """Row name of a (scene, hsi, subject) seen-flag tag."""
    key = tuple(bool(v) for v in tag)
    for name, flags in SUBSET_ROWS.items():
        if flags == key:
            return name
    raise DatasetException('unknown subset tag {}'.format(tag))


def macro_average(scores):
    """Frame average of per-frame ContactScores; the geodesic error
    averages only the frames where it is defined."""
    if not scores:
        return None
    geodesic = [s.geodesic_error for s in scores
                if s.geodesic_error is not None]
    return ContactScore(
        precision=float(np.mean([s.precision for s in scores])),
        recall=float(np.mean([s.recall for s in scores])),
        f1=float(np.mean([s.f1 for s in scores])),
        geodesic_error=float(np.mean(geodesic)) if geodesic else None,
        tp=sum(s.tp for s in scores),
        fp=sum(s.fp for s in scores),
        fn=sum(s.fn for s in scores),
        frames_evaluated=len(scores),
        geodesic_frames=len(geodesic))


def _row(score):
    if score is None:
        return [None, None, None, None, 0]
    geodesic_cm = None if score.geodesic_error is None \
        else score.geodesic_error * 100.0
    return [score.precision, score.recall, score.f1, geodesic_cm,
            score.frames_evaluated]


def aggregate_scores(scores, tags):
    """Subset table of per-frame scores.

    Parameters
    ----------
    scores: list of ContactScore
    tags: list
        (scene, hsi, subject) seen flags of every frame

    Returns
    -------
    list of rows in SUBSET_COLUMNS order: one per subset row that has
    frames, then the full set
    """
    if len(scores) != len(tags):
        raise ValueError('{} scores for {} tags'.format(len(scores),
                                                        len(tags)))
    groups = OrderedDict((name, []) for name in SUBSET_ROWS)
    for score, tag in zip(scores, tags):
        groups[subset_of(tag)].append(score)

    rows = []
    for name, members in groups.items():
        if not members:
            continue
        rows.append([name] + list(SUBSET_ROWS[name])
                    + _row(macro_average(members)))
    rows.append([FULL_SET, None, None, None] + _row(macro_average(scores)))
    logger.debug("Aggregated {} frames into {} subset rows".format(
        len(scores), len(rows) - 1))
    return rows


def method_table(scores_by_method):
    """One overall row per method, in the given order."""
    return [[name] + _row(macro_average(scores))
            for name, scores in scores_by_method.items()]
