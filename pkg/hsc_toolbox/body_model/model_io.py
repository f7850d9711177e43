import logging

import numpy as np
from scipy import sparse

from hsc_toolbox.exceptions import DatasetException
from hsc_toolbox.body_model.model import BodyModel, BodyParams
from hsc_toolbox.pipeline.fileio import write_json, read_json

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ('topology_name', 'template', 'faces', 'parents',
                 'regressor', 'skin_weights', 'shape_dirs', 'regions')


def _triplets(matrix):
    coo = sparse.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    return [[int(coo.row[i]), int(coo.col[i]), float(coo.data[i])]
            for i in order]


def _from_triplets(triplets, shape):
    triplets = np.asarray(triplets, dtype=np.float64).reshape(-1, 3)
    return sparse.csr_matrix(
        (triplets[:, 2], (triplets[:, 0].astype(np.int64),
                          triplets[:, 1].astype(np.int64))), shape=shape)


def model_to_dict(model):
    return {
        'topology_name': model.topology_name,
        'template': model.template_vertices.tolist(),
        'faces': model.faces.tolist(),
        'parents': model.parents.tolist(),
        'joint_names': model.joint_names,
        'regressor': _triplets(model.joint_regressor),
        'skin_weights': _triplets(model.skin_weights),
        'shape_dirs': model.shape_dirs.tolist(),
        'regions': {name: idx.tolist()
                    for name, idx in sorted(model.regions.items())},
        'hand_joints': model.hand_joints.tolist(),
        'hand_basis': model.hand_basis.tolist(),
    }


def model_from_dict(d):
    missing = [k for k in REQUIRED_KEYS if k not in d]
    if missing:
        raise DatasetException(
            'body model is missing keys: {}'.format(', '.join(missing)))
    n_vertices = len(d['template'])
    n_joints = len(d['parents'])
    hand_joints = d.get('hand_joints', [])
    hand_basis = np.asarray(d.get('hand_basis') or [], dtype=np.float64)
    rows = 3 * len(hand_joints)
    # an empty basis loads as (0,), numpy cannot infer its column count
    if hand_basis.size == 0:
        hand_basis = np.zeros((rows, 0))
    else:
        hand_basis = hand_basis.reshape(rows, -1)
    return BodyModel(
        template_vertices=d['template'],
        faces=d['faces'],
        parents=d['parents'],
        joint_regressor=_from_triplets(d['regressor'],
                                       (n_joints, n_vertices)),
        skin_weights=_from_triplets(d['skin_weights'],
                                    (n_vertices, n_joints)),
        shape_dirs=np.asarray(d['shape_dirs'],
                              dtype=np.float64).reshape(n_vertices, 3, -1),
        regions=d['regions'],
        topology_name=d['topology_name'],
        joint_names=d.get('joint_names'),
        hand_joints=hand_joints,
        hand_basis=hand_basis)


def save_model(model, path):
    write_json(path, model_to_dict(model))


def load_model(path):
    model = model_from_dict(read_json(path))
    logger.info("Loaded {} from {}".format(model, path))
    return model


def save_params_sequence(path, params_by_frame):
    """Body parameters of a sequence, e.g. its ground truth, keyed by
    frame index."""
    write_json(path, {'frames': [{'frame': int(f), 'params': p.to_dict()}
                                 for f, p in sorted(params_by_frame.items())]})


def load_params_sequence(path):
    return {int(r['frame']): BodyParams.from_dict(r['params'])
            for r in read_json(path)['frames']}
