"""Synthetic capture sessions with exact ground truth.

A session is written as a dataset directory:

    manifest.json
    model.json
    scenes/<scene_id>/scene.obj            scan coordinates
    scenes/<scene_id>/correspondences.json
    scenes/<scene_id>/alignment.json       capture -> scan
    sequences/<id>/cameras/<camera>.json
    sequences/<id>/keypoints/<camera>.json
    sequences/<id>/estimates/<camera>.json per view pose estimates
    sequences/<id>/gt_params.json
    sequences/<id>/gt_contacts/frame_%06d.json

Bodies and cameras live in the capture coordinates, the scene is stored in
its scan coordinates. Everything is determined by the seed.
"""

import logging
import os

from collections import namedtuple

import numpy as np
from scipy.spatial.transform import Rotation

from hsc_toolbox.constants import FPS
from hsc_toolbox.body_model.humanoid import make_test_humanoid
from hsc_toolbox.body_model.model import BodyParams, pose_body
from hsc_toolbox.body_model.model_io import save_model, save_params_sequence
from hsc_toolbox.body_model.rotation import rotation_about
from hsc_toolbox.camera.camera import look_at, save_camera
from hsc_toolbox.camera.fusion import save_pose_estimates
from hsc_toolbox.camera.keypoints import save_keypoint_file
from hsc_toolbox.contact.annotate import annotate_contact, posed_in_scene
from hsc_toolbox.contact.labels import save_contact_frames
from hsc_toolbox.geometry.bvh import Bvh
from hsc_toolbox.geometry.mesh_io import save_mesh
from hsc_toolbox.geometry.rigid import RigidTransform
from hsc_toolbox.pipeline.manifest import (
    DatasetManifest, SequenceEntry, MANIFEST_FILE, derive_seen_flags,
    save_manifest
)
from hsc_toolbox.pipeline.scene import (
    make_test_scene, landmark_points, save_correspondences, save_alignment
)

logger = logging.getLogger(__name__)

N_FRAMES = 12
N_CAMERAS = 4

RIG_RADIUS = 4.0
RIG_HEIGHT = 2.0
RIG_TARGET_HEIGHT = 0.9
MOVING_RADIUS = 3.0
MOVING_HEIGHT = 1.5
FOCAL = 1000.0
IMAGE_SIZE = 1000

KEYPOINT_NOISE_PX = 1.0
CORRUPTION_PX = 80.0
ESTIMATE_ROTATION_DEG = 10.0
ESTIMATE_TRANSLATION_M = 0.03

WALK_X = 1.2
WALK_START_Y = -1.0
WALK_SPEED = 1.0
WALK_PERIOD = 24
HIP_SWING_DEG = 25.0
KNEE_SWING_DEG = 30.0
ARM_DOWN_DEG = 70.0

SIT_TRANSLATION = (0.0, -0.05, -0.36)
SIT_PERIOD = 12
ELBOW_BASE_DEG = 30.0
ELBOW_SWING_DEG = 25.0

# capture -> scan transforms of the scene scans as (yaw degrees, t); scans
# keep z up with the floor at z = 0
SCAN_POSES = {
    'scene_0': (30.0, (2.0, -1.0, 0.0)),
    'scene_1': (-60.0, (-0.5, 3.0, 0.0)),
}

SUBJECT_SHAPES = {
    'subject_0': (0.0, 0.0),
    'subject_1': (0.3, -0.2),
}

SequencePlan = namedtuple(
    'SequencePlan', ['id', 'split', 'scene_id', 'subject_id', 'hsi_tag',
                     'moving_camera', 'noisy'])

PLANS = (
    SequencePlan('train_walk', 'train', 'scene_0', 'subject_0', 'walk',
                 True, False),
    SequencePlan('train_sit', 'train', 'scene_0', 'subject_0', 'sit',
                 True, False),
    SequencePlan('test_walk', 'test', 'scene_1', 'subject_1', 'walk',
                 False, False),
    SequencePlan('test_sit', 'test', 'scene_0', 'subject_0', 'sit',
                 False, False),
    SequencePlan('test_sit_noisy', 'test', 'scene_0', 'subject_1', 'sit',
                 False, True),
)

# corrupted view of the noisy sequences
CORRUPTED_CAMERA = 'cam_2'


def scan_transform(scene_id):
    yaw, translation = SCAN_POSES[scene_id]
    return RigidTransform(
        Rotation.from_euler('z', yaw, degrees=True).as_matrix(),
        translation)


def _set(pose, model, name, rotvec):
    j = model.joint_index(name)
    pose[3 * j:3 * j + 3] = rotvec


def _grounded(model, params):
    """Shift the body vertically so its lowest foot joint is at the rest
    height."""
    feet = [model.joint_index(n) for n in
            ('left_ankle', 'right_ankle', 'left_foot', 'right_foot')]
    rest = BodyParams.zeros(model)
    rest.shape = params.shape
    _, rest_joints = pose_body(model, rest)
    _, joints = pose_body(model, params)
    params.global_translation[2] += \
        rest_joints[feet, 2].min() - joints[feet, 2].min()
    return params


def walk_params(model, frame, shape, fps):
    phase = 2 * np.pi * frame / WALK_PERIOD
    pose = np.zeros(3 * model.n_joints)
    swing = HIP_SWING_DEG * np.sin(phase)
    _set(pose, model, 'left_hip', rotation_about((1, 0, 0), swing))
    _set(pose, model, 'right_hip', rotation_about((1, 0, 0), -swing))
    # the knee bends while its leg swings forward
    for name, sign in (('left_knee', 1.0), ('right_knee', -1.0)):
        flexion = KNEE_SWING_DEG * max(0.0, sign * np.cos(phase))
        _set(pose, model, name, rotation_about((1, 0, 0), -flexion))
    _set(pose, model, 'left_shoulder', rotation_about((0, 1, 0),
                                                      ARM_DOWN_DEG))
    _set(pose, model, 'right_shoulder', rotation_about((0, 1, 0),
                                                       -ARM_DOWN_DEG))
    translation = (WALK_X, WALK_START_Y + WALK_SPEED * frame / fps, 0.0)
    params = BodyParams(translation, pose, shape,
                        np.zeros(model.n_hand))
    return _grounded(model, params)


def sit_params(model, frame, shape, fps):
    phase = 2 * np.pi * frame / SIT_PERIOD
    pose = np.zeros(3 * model.n_joints)
    for side in ('left', 'right'):
        _set(pose, model, side + '_hip', rotation_about((1, 0, 0), 90.0))
        _set(pose, model, side + '_knee', rotation_about((1, 0, 0), -90.0))
    _set(pose, model, 'left_shoulder', rotation_about((0, 1, 0),
                                                      ARM_DOWN_DEG))
    _set(pose, model, 'right_shoulder', rotation_about((0, 1, 0),
                                                       -ARM_DOWN_DEG))
    elbow = ELBOW_BASE_DEG + ELBOW_SWING_DEG * np.sin(phase)
    _set(pose, model, 'left_elbow', rotation_about((0, 0, 1), elbow))
    _set(pose, model, 'right_elbow', rotation_about((0, 0, 1), -elbow))
    return BodyParams(SIT_TRANSLATION, pose, shape, np.zeros(model.n_hand))


MOTIONS = {
    'walk': walk_params,
    'sit': sit_params,
}


def make_rig(center, n_cameras=N_CAMERAS, moving=False):
    """Static cameras evenly spaced on a circle around `center`, looking at
    the body, plus an optional hand-held camera."""
    target = np.array([center[0], center[1], RIG_TARGET_HEIGHT])
    cams = []
    for k in range(n_cameras):
        angle = 2 * np.pi * (k + 0.5) / n_cameras
        eye = target + np.array([RIG_RADIUS * np.cos(angle),
                                 RIG_RADIUS * np.sin(angle),
                                 RIG_HEIGHT - RIG_TARGET_HEIGHT])
        cams.append(look_at('cam_{}'.format(k), eye, target, focal=FOCAL,
                            width=IMAGE_SIZE, height=IMAGE_SIZE))
    if moving:
        eye = target + np.array([0.0, MOVING_RADIUS,
                                 MOVING_HEIGHT - RIG_TARGET_HEIGHT])
        cams.append(look_at('cam_{}'.format(n_cameras), eye, target,
                            focal=FOCAL, width=IMAGE_SIZE,
                            height=IMAGE_SIZE, moving=True))
    return cams


def render_keypoints(cam, joints):
    """(J, 3) detections of the world joints in one view; joints behind the
    camera or outside the image are unobserved."""
    uv, depth = cam.project_points(joints)
    visible = (depth > 0) & (uv[:, 0] >= 0) & (uv[:, 0] < cam.width) \
        & (uv[:, 1] >= 0) & (uv[:, 1] < cam.height)
    detections = np.zeros((len(joints), 3))
    detections[visible, :2] = uv[visible]
    detections[visible, 2] = 1.0
    return detections


def perturb_keypoints(detections, rng, noise_px, offset_px=0.0):
    """Pixel noise on the observed joints plus a common offset in a random
    direction."""
    detections = detections.copy()
    observed = detections[:, 2] > 0
    noise = rng.normal(0.0, 1.0, (len(detections), 2)) * noise_px
    angle = rng.uniform(0.0, 2 * np.pi)
    offset = offset_px * np.array([np.cos(angle), np.sin(angle)])
    detections[observed, :2] += noise[observed] + offset
    return detections


def perturb_params(params, rng, max_degrees=ESTIMATE_ROTATION_DEG,
                   translation_sigma=ESTIMATE_TRANSLATION_M):
    """A pose estimate: every joint rotated by at most `max_degrees` about a
    random axis, translation with gaussian noise."""
    noisy = params.copy()
    rotvecs = noisy.joint_rotvecs()
    axes = rng.normal(size=rotvecs.shape)
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    angles = np.deg2rad(rng.uniform(0.0, max_degrees, len(rotvecs)))
    delta = Rotation.from_rotvec(axes * angles[:, None])
    noisy.pose = (delta * Rotation.from_rotvec(rotvecs)).as_rotvec().ravel()
    noisy.global_translation = noisy.global_translation \
        + rng.normal(0.0, translation_sigma, 3)
    return noisy


def _write_scene(root, scene_id):
    scene = make_test_scene()
    transform = scan_transform(scene_id)
    directory = os.path.join(root, 'scenes', scene_id)
    scan = scene.transformed(transform)
    save_mesh(scan, os.path.join(directory, 'scene.obj'))
    landmarks = landmark_points()
    save_correspondences(os.path.join(directory, 'correspondences.json'),
                         scene_id, landmarks, transform.apply(landmarks))
    save_alignment(os.path.join(directory, 'alignment.json'), transform)
    return scan, transform


def _write_sequence(root, plan, model, scan, transform, n_frames, cfg,
                    noise_rng):
    directory = os.path.join(root, 'sequences', plan.id)
    fps = FPS

    def rel(*parts):
        return os.path.relpath(os.path.join(directory, *parts), root)

    shape = np.asarray(SUBJECT_SHAPES[plan.subject_id], dtype=np.float64)
    motion = MOTIONS[plan.hsi_tag]
    params = {f: motion(model, f, shape, fps) for f in range(n_frames)}
    joints = {f: pose_body(model, p)[1] for f, p in params.items()}

    center = np.mean([p.global_translation for p in params.values()],
                     axis=0)
    cams = make_rig(center, moving=plan.moving_camera)
    corrupted = [CORRUPTED_CAMERA] if plan.noisy else []

    cameras, keypoints, estimates = [], [], []
    for cam in cams:
        save_camera(cam, os.path.join(directory, 'cameras',
                                      cam.name + '.json'))
        detections = {}
        for f in range(n_frames):
            d = render_keypoints(cam, joints[f])
            if plan.noisy:
                d = perturb_keypoints(
                    d, noise_rng, KEYPOINT_NOISE_PX,
                    CORRUPTION_PX if cam.name in corrupted else 0.0)
            detections[f] = d
        save_keypoint_file(os.path.join(directory, 'keypoints',
                                        cam.name + '.json'),
                           cam.name, detections)
        save_pose_estimates(
            os.path.join(directory, 'estimates', cam.name + '.json'),
            cam.name, {f: perturb_params(p, noise_rng)
                       for f, p in params.items()})
        cameras.append(rel('cameras', cam.name + '.json'))
        keypoints.append(rel('keypoints', cam.name + '.json'))
        estimates.append(rel('estimates', cam.name + '.json'))

    save_params_sequence(os.path.join(directory, 'gt_params.json'), params)
    bvh = Bvh(scan)
    contacts = []
    for f, p in params.items():
        body = posed_in_scene(model, p, transform)
        contacts.append(annotate_contact(body.vertices, body.vertex_normals,
                                         model, bvh, cfg.contact, frame=f))
    save_contact_frames(os.path.join(directory, 'gt_contacts'), contacts)
    logger.info("Sequence {}: {} frames, {} cameras, {:.1f} contact "
                "vertices per frame".format(
                    plan.id, n_frames, len(cams),
                    np.mean([c.n_contacts for c in contacts])))

    scene_dir = os.path.join('scenes', plan.scene_id)
    return SequenceEntry(
        id=plan.id, scene_id=plan.scene_id, subject_ids=[plan.subject_id],
        hsi_tag=plan.hsi_tag, split=plan.split, frames=[0, n_frames],
        cameras=cameras, keypoints=keypoints,
        scene_mesh=os.path.join(scene_dir, 'scene.obj'),
        alignment=os.path.join(scene_dir, 'alignment.json'),
        correspondences=os.path.join(scene_dir, 'correspondences.json'),
        gt_params=rel('gt_params.json'), gt_contacts=rel('gt_contacts'),
        pose_estimates=estimates, fps=fps, corrupted_views=corrupted)


def generate_dataset(root, cfg, n_frames=N_FRAMES, plans=PLANS):
    """Write a synthetic dataset to `root` and return its manifest path.

    Parameters
    ----------
    root: str
        dataset directory, created when missing
    cfg: PipelineConfig
        seed and contact thresholds of the ground truth labels
    n_frames: int
        frames per sequence
    plans: sequence of SequencePlan
    """
    os.makedirs(root, exist_ok=True)
    model = make_test_humanoid(seed=cfg.seed_for('synth'))
    save_model(model, os.path.join(root, 'model.json'))
    noise_rng = np.random.default_rng(cfg.seed_for('noise'))

    scenes = {}
    for scene_id in sorted(set(p.scene_id for p in plans)):
        scenes[scene_id] = _write_scene(root, scene_id)

    entries = []
    for plan in plans:
        scan, transform = scenes[plan.scene_id]
        entries.append(_write_sequence(root, plan, model, scan, transform,
                                       n_frames, cfg, noise_rng))
    manifest = DatasetManifest(derive_seen_flags(entries),
                               root=os.path.abspath(root))
    path = os.path.join(root, MANIFEST_FILE)
    save_manifest(manifest, path)
    logger.info("Wrote synthetic dataset with {} sequences to {}".format(
        len(entries), root))
    return path
