import glob
import logging
import os

import numpy as np

from hsc_toolbox.body_model.model import BodyParams
from hsc_toolbox.camera.triangulation import ConsensusWeights
from hsc_toolbox.fitting.energy import BATCH_TERMS
from hsc_toolbox.fitting.fit import FitResult
from hsc_toolbox.pipeline.fileio import (
    write_json, read_json, write_csv
)

logger = logging.getLogger(__name__)

FRAME_FILE = 'frame_{:06d}.json'
ENERGY_FILE = 'energies.csv'
ENERGY_COLUMNS = ('frame', 'total') + BATCH_TERMS


def frame_path(directory, frame):
    return os.path.join(directory, FRAME_FILE.format(frame))


def save_fit(directory, result):
    """One parameter record per frame plus the energy breakdown CSV."""
    rows = []
    for i, frame in enumerate(result.frames):
        weights = result.weights[i]
        write_json(frame_path(directory, frame), {
            'frame': int(frame),
            'params': result.params[i].to_dict(),
            'energies': result.energies[i],
            'converged': bool(result.converged[i]),
            'cameras': list(weights.camera_names),
            'weights': weights.to_list()})
        rows.append([int(frame)] + [float(result.energies[i][k])
                                    for k in ENERGY_COLUMNS[1:]])
    write_csv(os.path.join(directory, ENERGY_FILE), ENERGY_COLUMNS, rows)
    logger.info("Wrote {} fitted frames to {}".format(len(rows), directory))


def load_fit_frame(path):
    d = read_json(path)
    weights = ConsensusWeights(d['cameras'], np.asarray(d['weights']))
    return FitResult([BodyParams.from_dict(d['params'])], [d['energies']],
                     [weights], [d['converged']], [int(d['frame'])])


def load_fit(directory):
    """All frame records of a fit directory, in frame order."""
    paths = sorted(glob.glob(os.path.join(directory, 'frame_*.json')))
    return FitResult.concatenate([load_fit_frame(p) for p in paths])
