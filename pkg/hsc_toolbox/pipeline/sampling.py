import logging

import numpy as np

from hsc_toolbox.constants import SEED
from hsc_toolbox.camera.camera import load_camera

logger = logging.getLogger(__name__)

FRAME_STRIDE = 2


def _views_of(manifest, sequence):
    cams = [load_camera(manifest.resolve(p)) for p in sequence.cameras]
    static = [c.name for c in cams if not c.moving]
    moving = [c.name for c in cams if c.moving]
    return static, moving


def sample_training_pairs(manifest, split='train', seed=SEED):
    """Training views of every other frame.

    A frame is paired with the moving camera plus one random static view
    when the sequence has a moving camera, with two random static views
    otherwise.

    Returns
    -------
    list of (sequence_id, frame, camera_name)
    """
    rng = np.random.default_rng(seed)
    pairs = []
    for sequence in manifest.select(split):
        static, moving = _views_of(manifest, sequence)
        if not moving and len(static) < 2 or moving and not static:
            logger.warning("Sequence {} has {} static and {} moving views, "
                           "sampling a single view per frame".format(
                               sequence.id, len(static), len(moving)))
        for frame in sequence.frame_indices[::FRAME_STRIDE]:
            if moving:
                views = [moving[0]]
                if static:
                    views.append(static[int(rng.integers(len(static)))])
            elif len(static) >= 2:
                chosen = rng.choice(len(static), size=2, replace=False)
                views = [static[int(i)] for i in chosen]
            elif static:
                views = [static[0]]
            else:
                continue
            pairs += [(sequence.id, frame, v) for v in views]
    logger.info("Sampled {} training pairs from split '{}'".format(
        len(pairs), split))
    return pairs
