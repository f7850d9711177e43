"""Pipeline commands: synthetic data, multiview fitting, scene alignment,
contact annotation, evaluation, export and the contact predictor.

Output layout below the configured output directory (every directory can be
moved with the `paths` config section):

    fits/<sequence>/frame_%06d.json, energies.csv
    contacts/<sequence>/frame_%06d.json
    predictions/<sequence>/frame_%06d.json
    scores/*.csv
    export/<sequence>/frame_%06d.ply
    classifier/classifier.json, training_log.csv
    training_pairs.csv
    run.db, summary.json

Every command returns the entry it merges into summary.json; an entry with
failed frames makes the command line exit with 1.
"""

import logging
import os

from dataclasses import replace

import numpy as np

from hsc_toolbox.run_db.model import TaskState
from hsc_toolbox.exceptions import (
    CameraException, DatasetException, FittingException
)
from hsc_toolbox.body_model.model_io import load_model, load_params_sequence
from hsc_toolbox.camera.camera import load_camera
from hsc_toolbox.camera.fusion import (
    fuse_pose_estimates, load_pose_estimates, load_pose_estimate_file
)
from hsc_toolbox.camera.keypoints import load_keypoints, order_cameras
from hsc_toolbox.camera.triangulation import (
    consensus_weights, triangulate_pair
)
from hsc_toolbox.contact.annotate import contact_from_fit, posed_in_scene
from hsc_toolbox.contact.baselines import uniform_threshold_contact
from hsc_toolbox.contact.labels import (
    ContactVector, save_contact_frames, load_contact_frames
)
from hsc_toolbox.fitting.fit import fit_batch, initial_params
from hsc_toolbox.fitting.fit_io import save_fit, load_fit
from hsc_toolbox.geometry.bvh import Bvh
from hsc_toolbox.geometry.mesh import Mesh
from hsc_toolbox.geometry.mesh_io import load_mesh, save_mesh, contact_colors
from hsc_toolbox.geometry.rigid import rigid_align
from hsc_toolbox.logging.base_logging_conf import (
    log_task_runtime, logger_for_sequence
)
from hsc_toolbox.metrics.aggregate import (
    aggregate_scores, method_table, SUBSET_COLUMNS, METHOD_COLUMNS
)
from hsc_toolbox.metrics.contact import ContactScore, score_contact
from hsc_toolbox.metrics.hps import (
    Alignment, HpsScore, score_hps, mean_score, hps_by_contact
)
from hsc_toolbox.geometry.geodesic import edge_graph
from hsc_toolbox.pipeline.fileio import (
    read_json, write_json, write_csv
)
from hsc_toolbox.pipeline.manifest import load_manifest
from hsc_toolbox.pipeline.runner import StageRunner
from hsc_toolbox.pipeline.sampling import sample_training_pairs
from hsc_toolbox.pipeline.scene import (
    load_correspondences, load_alignment, save_alignment
)
from hsc_toolbox.pipeline.synth import generate_dataset
from hsc_toolbox.pipeline.tasks import FrameTask
from hsc_toolbox.predictor.classifier import (
    train_classifier, predict, save_classifier, load_classifier
)
from hsc_toolbox.predictor.features import features_for_params
from hsc_toolbox.run_db.run_db import RunDB, engine_for

logger = logging.getLogger(__name__)

SUMMARY_FILE = 'summary.json'
MODEL_FILE = 'model.json'
CLASSIFIER_FILE = 'classifier.json'
TRAINING_LOG_FILE = 'training_log.csv'
TRAINING_PAIRS_FILE = 'training_pairs.csv'
EXPORT_FILE = 'frame_{:06d}.ply'
ANNOTATED = 'annotated'
UNIFORM = 'uniform'
BASELINES = (UNIFORM,)

CONTACT_SCORE_COLUMNS = ('method', 'sequence', 'frame', 'precision',
                         'recall', 'f1', 'geodesic_cm', 'tp', 'fp', 'fn')
HPS_SCORE_COLUMNS = ('sequence', 'frame', 'alignment', 'mpjpe', 'v2v')
HPS_CONTACT_COLUMNS = ('group', 'alignment', 'mpjpe', 'v2v', 'frames')


def output_path(cfg, key, default_name=None):
    """Configured location of an output directory, below the output
    directory by default."""
    return cfg.path(key) or os.path.join(cfg.output_dir, default_name or key)


def model_path(cfg, manifest):
    return cfg.path('model') or os.path.join(manifest.root, MODEL_FILE)


def write_summary(cfg, command, entry):
    """Merge the entry of a command into the run summary."""
    path = os.path.join(cfg.output_dir, SUMMARY_FILE)
    summary = read_json(path) if os.path.exists(path) else {}
    summary[command] = entry
    write_json(path, summary)
    return entry


def _ledger_entry(run_db, stage, tasks):
    """Frame states of the processed tasks, as recorded in the ledger."""
    counts = {state.name: 0 for state in TaskState}
    for task in tasks:
        frames = set(task.frames)
        for record in run_db.records_for(task.sequence_id, stage):
            if record.frame in frames:
                counts[record.task_state.name] += 1
    return {'stage': stage,
            'sequences': [t.sequence_id for t in tasks],
            'states': counts,
            'failed': counts[TaskState.failed.name],
            'errors': {t.sequence_id: t.error for t in tasks if t.error}}


def _tasks(manifest, tag, split, subset):
    sequences = manifest.select(split, subset)
    if not sequences:
        logger.warning("No sequences in split '{}' subset '{}'".format(
            split, subset))
    return [FrameTask(sequence_id=s.id, frames=s.frame_indices, tag=tag)
            for s in sequences]


def _run_stage(runner, tasks, cfg, command):
    try:
        done = runner.run(tasks, cfg.jobs)
        entry = _ledger_entry(runner.run_db, runner.stage, done)
    finally:
        runner.run_db.close()
    return done, write_summary(cfg, command, entry)


def _sequence_cameras(manifest, sequence, camera_names):
    cams = [load_camera(manifest.resolve(p)) for p in sequence.cameras]
    return order_cameras(cams, camera_names)


class ManifestRunner(StageRunner):
    """Stage runner whose tasks are the sequences of a manifest."""

    def __init__(self, run_db, stage, config, manifest_path):
        super().__init__(run_db, stage, config)
        self.manifest_path = manifest_path
        self._manifest = None

    def __getstate__(self):
        state = super().__getstate__()
        state['_manifest'] = None
        return state

    @property
    def manifest(self):
        if self._manifest is None:
            self._manifest = load_manifest(self.manifest_path)
        return self._manifest

    def model(self):
        return load_model(model_path(self.config, self.manifest))


def _pelvis_translation(model, cams, keypoints, shape):
    """Translation placing the rest pelvis on its triangulation from the
    two most confident views, None when it cannot be triangulated."""
    confidence = keypoints.confidence[:, 0]
    views = [int(v) for v in np.argsort(-confidence, kind='stable')
             if confidence[v] > 0][:2]
    if len(views) < 2:
        return None
    a, b = views
    try:
        pelvis = triangulate_pair(cams[a], keypoints.uv[a, 0],
                                  cams[b], keypoints.uv[b, 0])
    except CameraException:
        return None
    return pelvis - model.rest_joints(shape)[0]


def initial_estimates(model, manifest, sequence, cams, keypoints_by_frame):
    """Starting parameters of every frame: the fused per-view pose
    estimates when the sequence has them, the mean pose at the
    triangulated pelvis otherwise."""
    frames = sorted(keypoints_by_frame)
    if sequence.pose_estimates:
        estimates = load_pose_estimates(
            [manifest.resolve(p) for p in sequence.pose_estimates])
    else:
        estimates = {}
    inits = {}
    for frame in frames:
        if estimates.get(frame):
            inits[frame] = fuse_pose_estimates(estimates[frame])
            continue
        init = initial_params(model)
        translation = _pelvis_translation(model, cams,
                                          keypoints_by_frame[frame],
                                          init.shape)
        if translation is not None:
            init.global_translation = translation
        inits[frame] = init
    return inits


@log_task_runtime
def fit_sequence(task, runner):
    """Fit every observed frame of a sequence and write its fit
    directory."""
    log = logger_for_sequence(__name__, task.sequence_id)
    manifest = runner.manifest
    sequence = manifest.sequence(task.sequence_id)
    model = runner.model()
    keypoints = load_keypoints(
        [manifest.resolve(p) for p in sequence.keypoints])
    names = next(iter(keypoints.values())).camera_names if keypoints else []
    cams = _sequence_cameras(manifest, sequence, names)

    frames, errors = [], {}
    for frame in task.frames:
        if frame not in keypoints or not keypoints[frame].any_observed():
            errors[str(frame)] = 'no observations'
            log.warning("Frame {}: no observations".format(frame))
        else:
            frames.append(frame)
    task.data['frame_errors'] = errors
    if not frames:
        raise FittingException('no observations')

    kps = [keypoints[f] for f in frames]
    inits = initial_estimates(model, manifest, sequence, cams,
                              {f: keypoints[f] for f in frames})
    weights = [consensus_weights(cams, k, tau=runner.config.consensus_tau)
               for k in kps]
    result = fit_batch(model, cams, kps, [inits[f] for f in frames],
                       runner.config.energy, weights)
    result.frames = [frames[i] for i in result.frames]
    save_fit(os.path.join(runner.fits_dir, sequence.id), result)
    if not all(result.converged):
        log.warning("Fit did not converge on {} of {} frames".format(
            result.converged.count(False), len(result)))
    return {f: e['total'] for f, e in zip(result.frames, result.energies)}


class FitRunner(ManifestRunner):

    def __init__(self, run_db, config, manifest_path, fits_dir):
        super().__init__(run_db, 'fit', config, manifest_path)
        self.fits_dir = fits_dir

    def process_task(self, task):
        return fit_sequence(task, self)


def _load_sequence_fit(fits_dir, sequence):
    fit = load_fit(os.path.join(fits_dir, sequence.id))
    if not len(fit):
        raise DatasetException('no fitted frames for sequence {}'.format(
            sequence.id))
    return fit


def _missing(frames, available, msg):
    available = set(available)
    return {str(f): msg for f in frames if f not in available}


@log_task_runtime
def annotate_sequence(task, runner):
    manifest = runner.manifest
    sequence = manifest.sequence(task.sequence_id)
    model = runner.model()
    fit = _load_sequence_fit(runner.fits_dir, sequence)
    scene = load_mesh(manifest.resolve(sequence.scene_mesh))
    align = load_alignment(manifest.resolve(sequence.alignment))
    bvh = Bvh(scene)

    if runner.baseline == UNIFORM:
        contacts = []
        for frame, params in zip(fit.frames, fit.params):
            body = posed_in_scene(model, params, align)
            contacts.append(uniform_threshold_contact(
                body.vertices, bvh, topology=model.topology_name,
                frame=frame))
    else:
        contacts = contact_from_fit(fit, model, scene, align,
                                    runner.config.contact, scene_bvh=bvh)
    save_contact_frames(os.path.join(runner.contacts_dir, sequence.id),
                        contacts)
    task.data['frame_errors'] = _missing(task.frames, fit.frames, 'no fit')
    return {}


class AnnotateRunner(ManifestRunner):

    def __init__(self, run_db, config, manifest_path, fits_dir,
                 contacts_dir, baseline=None):
        super().__init__(run_db, 'annotate', config, manifest_path)
        self.fits_dir = fits_dir
        self.contacts_dir = contacts_dir
        self.baseline = baseline

    def process_task(self, task):
        return annotate_sequence(task, self)


def _hps_rows(runner, model, sequence, gts, log):
    """PA and TR errors of every fitted frame with ground truth, each with
    the ground truth contacts of its frame."""
    fit_dir = os.path.join(runner.fits_dir, sequence.id) \
        if runner.fits_dir else None
    if fit_dir is None or not os.path.isdir(fit_dir) \
            or sequence.gt_params is None:
        log.info("No fits or ground truth parameters, HPS skipped")
        return []
    fit = load_fit(fit_dir)
    gt_params = load_params_sequence(
        runner.manifest.resolve(sequence.gt_params))
    rows = []
    for frame, params in zip(fit.frames, fit.params):
        if frame not in gt_params:
            continue
        for align in Alignment:
            score = score_hps(model, params, gt_params[frame], align)
            rows.append([frame, score.to_dict(),
                         gts[frame].to_dict() if frame in gts else None])
    return rows


@log_task_runtime
def evaluate_sequence(task, runner):
    log = logger_for_sequence(__name__, task.sequence_id)
    sequence = runner.manifest.sequence(task.sequence_id)
    if sequence.gt_contacts is None:
        raise DatasetException('sequence {} has no ground truth contacts'
                               .format(sequence.id))
    model = runner.model()
    gts = load_contact_frames(runner.manifest.resolve(sequence.gt_contacts))
    # geodesics are measured on the rest pose surface
    template = Mesh(model.template_vertices, model.faces)
    graph = edge_graph(template)

    errors, scores = {}, {}
    for method, directory in runner.predictions.items():
        preds = load_contact_frames(os.path.join(directory, sequence.id))
        rows = []
        for frame in task.frames:
            if frame not in gts or frame not in preds:
                errors[str(frame)] = '{}: no {} labels'.format(
                    method, 'predicted' if frame in gts else 'ground truth')
                continue
            score = score_contact(preds[frame], gts[frame], template, graph)
            rows.append([frame, score.to_dict()])
        scores[method] = rows
    task.data['scores'] = scores
    task.data['hps'] = _hps_rows(runner, model, sequence, gts, log)
    task.data['frame_errors'] = errors
    return {}


class EvaluateRunner(ManifestRunner):
    """Scores every prediction directory of a sequence against its ground
    truth; the per-frame scores travel back in task.data."""

    def __init__(self, run_db, config, manifest_path, predictions,
                 fits_dir=None):
        super().__init__(run_db, 'evaluate', config, manifest_path)
        self.predictions = predictions
        self.fits_dir = fits_dir

    def process_task(self, task):
        return evaluate_sequence(task, self)


@log_task_runtime
def export_sequence(task, runner):
    manifest = runner.manifest
    sequence = manifest.sequence(task.sequence_id)
    model = runner.model()
    fit = _load_sequence_fit(runner.fits_dir, sequence)
    align = load_alignment(manifest.resolve(sequence.alignment))
    contacts = load_contact_frames(os.path.join(runner.contacts_dir,
                                                sequence.id))
    gts = {}
    if runner.with_gt and sequence.gt_contacts is not None:
        gts = load_contact_frames(manifest.resolve(sequence.gt_contacts))

    directory = os.path.join(runner.export_dir, sequence.id)
    for frame, params in zip(fit.frames, fit.params):
        if frame not in contacts:
            continue
        gt = gts[frame].labels if frame in gts else None
        save_mesh(posed_in_scene(model, params, align),
                  os.path.join(directory, EXPORT_FILE.format(frame)),
                  vertex_colors=contact_colors(contacts[frame].labels, gt))
    errors = _missing(task.frames, fit.frames, 'no fit')
    errors.update(_missing(set(fit.frames) & set(task.frames), contacts,
                           'no contact labels'))
    task.data['frame_errors'] = errors
    return {}


class ExportRunner(ManifestRunner):

    def __init__(self, run_db, config, manifest_path, fits_dir,
                 contacts_dir, export_dir, with_gt=True):
        super().__init__(run_db, 'export', config, manifest_path)
        self.fits_dir = fits_dir
        self.contacts_dir = contacts_dir
        self.export_dir = export_dir
        self.with_gt = with_gt

    def process_task(self, task):
        return export_sequence(task, self)


def _run_db(cfg):
    return RunDB(engine_for(cfg.output_dir))


def cmd_synth(cfg, output=None, n_frames=None):
    """Generate the synthetic dataset; returns its summary entry with the
    manifest path."""
    root = output or cfg.path('dataset') \
        or os.path.join(cfg.output_dir, 'dataset')
    kwargs = {} if n_frames is None else {'n_frames': n_frames}
    path = generate_dataset(root, cfg, **kwargs)
    manifest = load_manifest(path)
    return write_summary(cfg, 'synth', {
        'manifest': path,
        'sequences': [s.id for s in manifest.sequences],
        'failed': 0})


def cmd_fit(manifest_path, cfg, split=None, subset=None):
    fits_dir = output_path(cfg, 'fits')
    manifest = load_manifest(manifest_path)
    runner = FitRunner(_run_db(cfg), cfg, manifest_path, fits_dir)
    _, entry = _run_stage(runner, _tasks(manifest, 'fit', split, subset),
                          cfg, 'fit')
    return entry


def cmd_align(manifest_path, cfg):
    """Compute every scene alignment from its correspondence file and write
    it where the manifest expects it."""
    manifest = load_manifest(manifest_path)
    done, rms = set(), {}
    for sequence in manifest.sequences:
        if sequence.correspondences is None or sequence.alignment is None:
            logger.warning("Sequence {} has no correspondences, alignment "
                           "kept".format(sequence.id))
            continue
        target = manifest.resolve(sequence.alignment)
        if target in done:
            continue
        scene_id, camera_points, scan_points = load_correspondences(
            manifest.resolve(sequence.correspondences))
        transform = rigid_align(camera_points, scan_points)
        save_alignment(target, transform)
        logger.info("Scene {}: alignment rms {:.6f} m from {} points".format(
            scene_id, transform.rms, len(camera_points)))
        done.add(target)
        rms[scene_id] = transform.rms
    return write_summary(cfg, 'align', {'rms': rms, 'failed': 0})


def cmd_annotate(manifest_path, cfg, split=None, subset=None,
                 baseline=None):
    """Label the fitted bodies; with a baseline name the labels go to a
    directory of that name instead of the annotation directory."""
    if baseline is not None and baseline not in BASELINES:
        raise ValueError("unknown baseline '{}'".format(baseline))
    manifest = load_manifest(manifest_path)
    contacts_dir = output_path(cfg, 'contacts') if baseline is None \
        else os.path.join(cfg.output_dir, baseline)
    runner = AnnotateRunner(_run_db(cfg), cfg, manifest_path,
                            output_path(cfg, 'fits'), contacts_dir, baseline)
    _, entry = _run_stage(runner,
                          _tasks(manifest, 'annotate', split, subset),
                          cfg, 'annotate')
    entry['contacts'] = contacts_dir
    return entry


def _score_rows(done, methods):
    per_method = {m: [] for m in methods}
    per_frame_rows = []
    for task in done:
        for method, rows in task.data.get('scores', {}).items():
            for frame, d in rows:
                score = ContactScore(**d)
                per_method[method].append((task.sequence_id, frame, score))
                geodesic_cm = None if score.geodesic_error is None \
                    else score.geodesic_error * 100.0
                per_frame_rows.append([method, task.sequence_id, frame,
                                       score.precision, score.recall,
                                       score.f1, geodesic_cm, score.tp,
                                       score.fp, score.fn])
    return per_method, per_frame_rows


def _write_hps(done, model, scores_dir):
    by_align = {a: [] for a in Alignment}
    contacts = {a: [] for a in Alignment}
    rows = []
    for task in done:
        for frame, d, gt in task.data.get('hps', []):
            score = HpsScore(d['mpjpe'], d['v2v'], Alignment(d['alignment']),
                             d['frames'])
            rows.append([task.sequence_id, frame, score.alignment.value,
                         score.mpjpe, score.v2v])
            if gt is not None:
                by_align[score.alignment].append(score)
                contacts[score.alignment].append(ContactVector.from_dict(gt))
    means = {}
    for align in Alignment:
        mean = mean_score(by_align[align])
        if mean is not None:
            rows.append(['all', None, align.value, mean.mpjpe, mean.v2v])
            means[align.value] = mean.to_dict()
    write_csv(os.path.join(scores_dir, 'hps_scores.csv'), HPS_SCORE_COLUMNS,
              rows)

    group_rows = []
    for align in Alignment:
        if not by_align[align]:
            continue
        groups = hps_by_contact(by_align[align], contacts[align], model)
        for group, score in sorted(groups.items()):
            group_rows.append([group, align.value] + (
                [score.mpjpe, score.v2v, score.frames] if score is not None
                else [None, None, 0]))
    write_csv(os.path.join(scores_dir, 'hps_by_contact.csv'),
              HPS_CONTACT_COLUMNS, group_rows)
    return means


def cmd_evaluate(manifest_path, cfg, predictions=None, split='test',
                 subset=None):
    """Score contact predictions against the ground truth.

    Parameters
    ----------
    predictions: dict, optional
        method name -> directory with one label directory per sequence;
        the annotation directory by default

    Returns
    -------
    dict
        summary entry with the overall row of every method
    """
    predictions = predictions or {ANNOTATED: output_path(cfg, 'contacts')}
    manifest = load_manifest(manifest_path)
    runner = EvaluateRunner(_run_db(cfg), cfg, manifest_path, predictions,
                            output_path(cfg, 'fits'))
    done, entry = _run_stage(runner,
                             _tasks(manifest, 'evaluate', split, subset),
                             cfg, 'evaluate')

    scores_dir = output_path(cfg, 'scores')
    per_method, frame_rows = _score_rows(done, predictions)
    write_csv(os.path.join(scores_dir, 'contact_scores.csv'),
              CONTACT_SCORE_COLUMNS, frame_rows)
    methods = method_table({m: [s for _, _, s in v]
                            for m, v in per_method.items()})
    write_csv(os.path.join(scores_dir, 'contact_methods.csv'),
              METHOD_COLUMNS, methods)

    seen = {s.id: s.seen for s in manifest.sequences}
    subset_rows = []
    for method, entries in per_method.items():
        rows = aggregate_scores([s for _, _, s in entries],
                                [seen[seq] for seq, _, _ in entries])
        subset_rows += [[method] + row for row in rows]
    write_csv(os.path.join(scores_dir, 'contact_subsets.csv'),
              ('method',) + SUBSET_COLUMNS, subset_rows)

    model = load_model(model_path(cfg, manifest))
    entry['hps'] = _write_hps(done, model, scores_dir)
    entry['methods'] = {row[0]: dict(zip(METHOD_COLUMNS[1:], row[1:]))
                        for row in methods}
    for row in methods:
        logger.info("{}: precision {}, recall {}, f1 {}, geodesic {} cm"
                    .format(*row[:5]))
    return write_summary(cfg, 'evaluate', entry)


def cmd_export(manifest_path, cfg, split=None, subset=None,
               contacts_dir=None, with_gt=True):
    manifest = load_manifest(manifest_path)
    runner = ExportRunner(_run_db(cfg), cfg, manifest_path,
                          output_path(cfg, 'fits'),
                          contacts_dir or output_path(cfg, 'contacts'),
                          output_path(cfg, 'export'), with_gt)
    _, entry = _run_stage(runner, _tasks(manifest, 'export', split, subset),
                          cfg, 'export')
    return entry


def cmd_sample(manifest_path, cfg, split='train'):
    manifest = load_manifest(manifest_path)
    pairs = sample_training_pairs(manifest, split,
                                  seed=cfg.seed_for('sampling'))
    path = os.path.join(cfg.output_dir, TRAINING_PAIRS_FILE)
    write_csv(path, ('sequence', 'frame', 'camera'), pairs)
    return write_summary(cfg, 'sample', {'pairs': len(pairs),
                                         'path': path, 'failed': 0})


def _view_estimates(manifest, sequence):
    """camera name -> {frame: BodyParams} of a sequence."""
    estimates = {}
    for path in sequence.pose_estimates:
        camera, frames = load_pose_estimate_file(manifest.resolve(path))
        estimates[camera] = frames
    return estimates


def training_dataset(manifest, model, pairs):
    """(features, ground truth contacts) of every sampled view: the pose
    estimate of the view placed in the scene."""
    dataset = []
    cache = {}
    for sequence_id, frame, camera in pairs:
        if sequence_id not in cache:
            sequence = manifest.sequence(sequence_id)
            if sequence.gt_contacts is None or not sequence.pose_estimates:
                raise DatasetException(
                    'sequence {} has no ground truth contacts or pose '
                    'estimates'.format(sequence_id))
            cache[sequence_id] = (
                _view_estimates(manifest, sequence),
                load_contact_frames(manifest.resolve(sequence.gt_contacts)),
                load_alignment(manifest.resolve(sequence.alignment)))
        estimates, gts, align = cache[sequence_id]
        if camera not in estimates or frame not in estimates[camera] \
                or frame not in gts:
            logger.warning("No estimate or labels for {} frame {} camera {}"
                           .format(sequence_id, frame, camera))
            continue
        dataset.append((features_for_params(model, estimates[camera][frame],
                                            align), gts[frame]))
    return dataset


def cmd_train(manifest_path, cfg, split='train'):
    """Train the per-vertex contact classifier on sampled views."""
    manifest = load_manifest(manifest_path)
    model = load_model(model_path(cfg, manifest))
    pairs = sample_training_pairs(manifest, split,
                                  seed=cfg.seed_for('sampling'))
    dataset = training_dataset(manifest, model, pairs)
    clf = train_classifier(dataset, replace(
        cfg.predictor, seed=cfg.seed_for('classifier')))

    directory = output_path(cfg, 'classifier')
    save_classifier(clf, os.path.join(directory, CLASSIFIER_FILE))
    write_csv(os.path.join(directory, TRAINING_LOG_FILE), ('epoch', 'loss'),
              list(enumerate(clf.history)))
    return write_summary(cfg, 'train', {
        'bodies': len(dataset),
        'final_loss': clf.history[-1] if clf.history else None,
        'classifier': directory,
        'failed': 0})


def cmd_predict(manifest_path, cfg, split='test', subset=None):
    """Contact labels of the trained classifier on the fused pose estimates
    of every frame."""
    manifest = load_manifest(manifest_path)
    model = load_model(model_path(cfg, manifest))
    clf = load_classifier(os.path.join(output_path(cfg, 'classifier'),
                                       CLASSIFIER_FILE))
    root = os.path.join(cfg.output_dir, 'predictions')
    failed = 0
    for sequence in manifest.select(split, subset):
        estimates = load_pose_estimates(
            [manifest.resolve(p) for p in sequence.pose_estimates])
        align = load_alignment(manifest.resolve(sequence.alignment))
        contacts = []
        for frame in sequence.frame_indices:
            if not estimates.get(frame):
                logger.warning("Sequence {} frame {}: no pose estimate"
                               .format(sequence.id, frame))
                failed += 1
                continue
            params = fuse_pose_estimates(estimates[frame])
            contacts.append(predict(clf,
                                    features_for_params(model, params, align),
                                    model.topology_name, frame=frame))
        save_contact_frames(os.path.join(root, sequence.id), contacts)
    return write_summary(cfg, 'predict', {'predictions': root,
                                          'failed': failed})
