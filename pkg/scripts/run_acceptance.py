#!/bin/env python3
"""
Run the long synthetic acceptance checks with their full trial counts. The
unit tests run reduced versions of the same checks.

    python3 scripts/run_acceptance.py
    python3 scripts/run_acceptance.py --only contact geodesic --trials 50

Exits with 1 if any check fails.
"""

import argparse
import logging
import os
import shutil
import sys
import tempfile
import time

import numpy as np
from scipy.spatial.transform import Rotation

from hsc_toolbox.body_model.humanoid import make_test_humanoid
from hsc_toolbox.body_model.model import pose_body
from hsc_toolbox.camera.keypoints import KeypointSet
from hsc_toolbox.camera.triangulation import (
    ConsensusWeights, consensus_weights
)
from hsc_toolbox.contact.annotate import annotate_contact
from hsc_toolbox.contact.labels import ContactConfig, ContactVector
from hsc_toolbox.fitting.fit import fit_frame
from hsc_toolbox.geometry.bvh import Bvh
from hsc_toolbox.geometry.geodesic import edge_graph
from hsc_toolbox.geometry.mesh import Mesh
from hsc_toolbox.geometry.rigid import RigidTransform
from hsc_toolbox.logging.base_logging_conf import (
    basic_logging_conf_with_level
)
from hsc_toolbox.metrics.contact import (
    contact_counts, contact_geodesic_error
)
from hsc_toolbox.pipeline.cli import main as cli_main
from hsc_toolbox.pipeline.fileio import read_csv, write_json
from hsc_toolbox.pipeline.scene import (
    box_mesh, ground_mesh, merge_meshes, SEAT_MIN, SEAT_MAX
)
from hsc_toolbox.pipeline.synth import (
    make_rig, perturb_keypoints, perturb_params, render_keypoints,
    sit_params, walk_params
)
from hsc_toolbox.predictor.classifier import (
    ClassifierConfig, predict, train_classifier
)
from hsc_toolbox.predictor.features import features_for_params, mvm_mask

# the brute force oracles of the test suite
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)),
                                '..', 'tests'))
from oracles import brute_force_contact, naive_dijkstra  # noqa: E402

logger = logging.getLogger('run_acceptance')

CHECKS = ('fitting', 'consensus', 'contact', 'geodesic', 'training',
          'pipeline')

MODEL = make_test_humanoid()


def _keypoints(cams, params, rng=None, noise_px=0.0, corrupted=None,
               offset_px=80.0):
    _, joints = pose_body(MODEL, params)
    detections = []
    for c, cam in enumerate(cams):
        d = render_keypoints(cam, joints)
        if rng is not None:
            d = perturb_keypoints(d, rng, noise_px,
                                  offset_px if c == corrupted else 0.0)
        detections.append(d)
    return KeypointSet([c.name for c in cams], detections)


def _mpjpe(a, b):
    return float(np.mean(np.linalg.norm(
        pose_body(MODEL, a)[1] - pose_body(MODEL, b)[1], axis=1))) * 1000.0


def check_fitting(trials, seed):
    """Recovery from perturbed starts, noiseless and with 1 px noise."""
    rng = np.random.default_rng(seed)
    clean, noisy, runtimes = [], [], []
    for t in range(trials):
        truth = walk_params(MODEL, t, np.zeros(2), 30)
        cams = make_rig(truth.global_translation)
        init = perturb_params(truth, rng)
        start = time.time()
        fitted = fit_frame(MODEL, cams, _keypoints(cams, truth), init)
        runtimes.append(time.time() - start)
        clean.append(_mpjpe(truth, fitted.params[0]))
        fitted = fit_frame(MODEL, cams,
                           _keypoints(cams, truth, rng, noise_px=1.0), init)
        noisy.append(_mpjpe(truth, fitted.params[0]))
    logger.info("fitting: max MPJPE {:.2f} mm clean, {:.2f} mm with noise, "
                "{:.2f} s per frame".format(max(clean), max(noisy),
                                            max(runtimes)))
    return max(clean) <= 5.0 and max(noisy) <= 25.0


def check_consensus(trials, seed):
    """One of four views shifted by 80 px."""
    rng = np.random.default_rng(seed)
    wins, close, smallest, gated = 0, 0, 0, 0
    for t in range(trials):
        truth = walk_params(MODEL, t, np.zeros(2), 30)
        cams = make_rig(truth.global_translation)
        corrupted = int(rng.integers(len(cams)))
        keypoints = _keypoints(cams, truth, rng, 1.0, corrupted)
        init = perturb_params(truth, rng)
        weights = consensus_weights(cams, keypoints)
        weighted = fit_frame(MODEL, cams, keypoints, init, weights=weights)
        plain = fit_frame(MODEL, cams, keypoints, init,
                          weights=ConsensusWeights.uniform(keypoints))
        clean_views = [c for c in range(len(cams)) if c != corrupted]
        clean = fit_frame(MODEL, [cams[c] for c in clean_views],
                          keypoints.subset(clean_views), init)
        error = _mpjpe(truth, weighted.params[0])
        wins += error < _mpjpe(truth, plain.params[0])
        close += error <= 2.0 * _mpjpe(truth, clean.params[0])
        observed = (keypoints.confidence > 0).sum(axis=0) >= 3
        others = np.delete(weights.weights, corrupted, axis=0)
        lowest = weights.weights[corrupted] < others.min(axis=0)
        smallest += int(lowest[observed].sum())
        gated += int(observed.sum())
    logger.info("consensus: weighted fit better in {} of {} trials, within "
                "twice the clean-view fit in {}, corrupted view lowest on "
                "{} of {} joints".format(wins, trials, close, smallest,
                                         gated))
    return wins >= 0.95 * trials and close >= 0.95 * trials \
        and smallest >= 0.99 * gated


def _oracle_scene():
    # about two thousand triangles
    return merge_meshes([ground_mesh((-2.0, -2.0), (2.0, 2.0), 31),
                         box_mesh(SEAT_MIN, SEAT_MAX)])


def check_contact(trials, seed):
    """Random body placements against the all-triangle labeler."""
    rng = np.random.default_rng(seed)
    scene = _oracle_scene()
    bvh = Bvh(scene)
    cfg = ContactConfig()
    thresholds = np.where(MODEL.foot_sole_mask, cfg.threshold_foot,
                          cfg.threshold_body)
    mismatches = 0
    for t in range(trials):
        motion = sit_params if t % 2 else walk_params
        params = motion(MODEL, int(rng.integers(30)), np.zeros(2), 30)
        params.global_translation = params.global_translation + \
            [rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
             rng.uniform(-0.02, 0.08)]
        yaw = Rotation.from_euler('z', rng.uniform(0, 360), degrees=True)
        vertices, _ = pose_body(MODEL, params)
        body = Mesh(vertices, MODEL.faces).transformed(
            RigidTransform(yaw.as_matrix(), np.zeros(3)))
        labels = annotate_contact(body.vertices, body.vertex_normals, MODEL,
                                  bvh, cfg).labels
        expected, unambiguous = brute_force_contact(
            body.vertices, body.vertex_normals, thresholds, scene,
            cfg.normal_max_angle)
        mismatches += int((labels != expected)[unambiguous].sum())
    logger.info("contact: {} label mismatches over {} placements".format(
        mismatches, trials))
    return mismatches == 0


def _oracle_geodesic(mesh, graph, pred, gt):
    edges = list(zip(graph.row, graph.col, graph.data))
    to_gt = naive_dijkstra(mesh.n_vertices, edges, gt.indices())
    return float(np.mean(to_gt[pred.indices()]))


def check_geodesic(trials, seed):
    rng = np.random.default_rng(seed)
    grid = merge_meshes([ground_mesh((0.0, 0.0), (1.0, 1.0), 10)])
    template = Mesh(MODEL.template_vertices, MODEL.faces)
    worst = 0.0
    for mesh in (grid, template):
        graph = edge_graph(mesh).tocoo()
        for _ in range(trials):
            pred, gt = (ContactVector(
                (rng.random(mesh.n_vertices) < 0.05).astype(np.uint8), 'm')
                for _ in range(2))
            if not pred.n_contacts or not gt.n_contacts:
                continue
            worst = max(worst, abs(
                contact_geodesic_error(pred, gt, mesh)
                - _oracle_geodesic(mesh, graph, pred, gt)))
    logger.info("geodesic: largest difference {:.3g} m".format(worst))
    return worst <= 1e-9


def _height_dataset(n_bodies, rng):
    """Contact exactly when a vertex is below 3 cm."""
    dataset = []
    for b in range(n_bodies):
        params = walk_params(MODEL, int(rng.integers(24)), np.zeros(2), 30)
        params.global_translation = params.global_translation + \
            [0.0, 0.0, rng.uniform(-0.02, 0.06)]
        features = features_for_params(MODEL, params)
        labels = (features.values[:, 2] < 0.03).astype(np.uint8)
        dataset.append((features, ContactVector(labels, MODEL.topology_name,
                                                frame=b)))
    return dataset


def _f1(clf, dataset, mask_fraction, seed):
    """Vertex-level F1 pooled over every held-out body."""
    tp = fp = fn = 0
    for k, (features, gt) in enumerate(dataset):
        if mask_fraction:
            features = mvm_mask(features, mask_fraction, seed + k)
        counts = contact_counts(predict(clf, features, gt.topology), gt)
        tp, fp, fn = tp + counts[0], fp + counts[1], fn + counts[2]
    return 2.0 * tp / max(2 * tp + fp + fn, 1)


def check_training(trials, seed):
    rng = np.random.default_rng(seed)
    train = _height_dataset(trials, rng)
    held_out = _height_dataset(max(trials // 4, 1), rng)
    plain = train_classifier(train, ClassifierConfig(mask_fraction=0.0,
                                                     seed=seed))
    masked = train_classifier(train, ClassifierConfig(mask_fraction=0.3,
                                                      seed=seed))
    f1 = _f1(plain, held_out, 0.0, seed)
    gain = _f1(masked, held_out, 0.3, seed) - _f1(plain, held_out, 0.3, seed)
    logger.info("training: held-out F1 {:.3f}, masked-input gain {:.3f}"
                .format(f1, gain))
    return f1 >= 0.95 and gain >= 0.05


def check_pipeline(trials, seed):
    """synth, fit, annotate and evaluate on the noiseless sequences."""
    folder = tempfile.mkdtemp(suffix='_acceptance_')
    try:
        config = os.path.join(folder, 'config.json')
        write_json(config, {'output_dir': os.path.join(folder, 'out'),
                            'seed': seed})
        manifest = os.path.join(folder, 'data', 'manifest.json')
        start = time.time()
        codes = [cli_main(['synth', '--config', config, '--output',
                           os.path.join(folder, 'data')])]
        for command in ('fit', 'annotate', 'evaluate'):
            codes.append(cli_main([command, '--config', config,
                                   '--manifest', manifest,
                                   '--split', 'test']))
        runtime = time.time() - start
        _, rows = read_csv(os.path.join(folder, 'out', 'scores',
                                        'contact_subsets.csv'))
        # subsets of the noiseless walk and sit sequences
        rows = [r for r in rows if r[0] == 'annotated' and r[1] in 'dh']
        f1 = min(float(r[7]) for r in rows)
        geodesic = max(float(r[8] or 0.0) for r in rows)
    finally:
        shutil.rmtree(folder)
    logger.info("pipeline: exit codes {}, F1 {:.3f}, geodesic {:.2f} cm, "
                "{:.0f} s".format(codes, f1, geodesic, runtime))
    return not any(codes) and f1 >= 0.95 and geodesic <= 2.0 \
        and runtime <= 300.0


DEFAULT_TRIALS = {
    'fitting': 20,
    'consensus': 100,
    'contact': 1000,
    'geodesic': 100,
    'training': 200,
    'pipeline': 1,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.split('\n')[1])
    parser.add_argument('--only', nargs='+', choices=CHECKS,
                        default=list(CHECKS))
    parser.add_argument('--trials', type=int, default=None,
                        help='trial count of every selected check')
    parser.add_argument('--seed', type=int, default=0)
    args = parser.parse_args()
    basic_logging_conf_with_level(logging.INFO)
    # the pipeline logs every stage
    logging.getLogger('hsc_toolbox').setLevel(logging.WARNING)

    failed = []
    for name in args.only:
        trials = args.trials or DEFAULT_TRIALS[name]
        check = globals()['check_' + name]
        if not check(trials, args.seed):
            failed.append(name)
    if failed:
        logger.error("Failed: {}".format(', '.join(failed)))
        return 1
    logger.info("All {} checks passed".format(len(args.only)))
    return 0


if __name__ == '__main__':
    sys.exit(main())
