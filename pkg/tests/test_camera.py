import os
import shutil
import tempfile
import unittest

import numpy as np

from hsc_toolbox.exceptions import CameraException, DimensionMismatch
from hsc_toolbox.body_model.humanoid import make_test_humanoid
from hsc_toolbox.body_model.model import BodyParams, pose_body
from hsc_toolbox.body_model.rotation import rotation_about, angle_between
from hsc_toolbox.camera.camera import (
    Camera, project, look_at, save_camera, load_camera
)
from hsc_toolbox.camera.fusion import (
    fuse_pose_estimates, save_pose_estimates, load_pose_estimates
)
from hsc_toolbox.camera.keypoints import (
    KeypointSet, order_cameras, save_keypoint_file, load_keypoints
)
from hsc_toolbox.camera.triangulation import (
    triangulate_pair, consensus_weights, accumulate_errors
)
from hsc_toolbox.pipeline.synth import (
    make_rig, walk_params, render_keypoints, perturb_keypoints
)


def ring_of_cameras(n, radius=4.0, height=1.5):
    cams = []
    for k in range(n):
        angle = 2 * np.pi * (k + 0.5) / n
        eye = [radius * np.cos(angle), radius * np.sin(angle), height]
        cams.append(look_at('cam_{}'.format(k), eye, [0.0, 0.0, 1.0]))
    return cams


def observe(cams, points):
    observations = np.zeros((len(cams), len(points), 3))
    for c, cam in enumerate(cams):
        uv, _ = cam.project_points(points)
        observations[c, :, :2] = uv
        observations[c, :, 2] = 1.0
    return KeypointSet([cam.name for cam in cams], observations)


class TestCamera(unittest.TestCase):

    def setUp(self):
        self.cam = look_at('cam', [0.0, -4.0, 1.0], [0.0, 0.0, 1.0])

    def test_target_projects_to_principal_point(self):
        np.testing.assert_allclose([500.0, 500.0],
                                   project(self.cam, [0.0, 0.0, 1.0]))
        np.testing.assert_allclose([0.0, -4.0, 1.0], self.cam.center)

    def test_image_axes(self):
        # x right and y down in the image
        right = project(self.cam, [0.5, 0.0, 1.0])
        up = project(self.cam, [0.0, 0.0, 1.5])
        self.assertGreater(right[0], 500.0)
        self.assertLess(up[1], 500.0)

    def test_behind_camera(self):
        with self.assertRaises(CameraException) as cm:
            project(self.cam, [0.0, -6.0, 1.0])
        self.assertIn('behind camera', str(cm.exception))

    def test_jacobian(self):
        rng = np.random.default_rng(0)
        points = rng.normal(0, 0.3, (5, 3)) + [0.0, 0.0, 1.0]
        uv, jacobian, _ = self.cam.project_with_jacobian(points)
        eps = 1e-6
        for i in range(3):
            step = np.zeros(3)
            step[i] = eps
            plus, _ = self.cam.project_points(points + step)
            minus, _ = self.cam.project_points(points - step)
            np.testing.assert_allclose((plus - minus) / (2 * eps),
                                       jacobian[:, :, i], atol=1e-4)

    def test_invalid_intrinsics(self):
        with self.assertRaises(CameraException):
            Camera('bad', 0.0, 1.0, 0.0, 0.0, self.cam.extrinsics, 10, 10)
        with self.assertRaises(CameraException):
            Camera('bad', 1.0, 1.0, 20.0, 0.0, self.cam.extrinsics, 10, 10)

    def test_save_and_load(self):
        folder = tempfile.mkdtemp(suffix='_test_camera_')
        try:
            path = os.path.join(folder, 'cam.json')
            save_camera(self.cam, path)
            loaded = load_camera(path)
            np.testing.assert_allclose(self.cam.projection_matrix,
                                       loaded.projection_matrix)
        finally:
            shutil.rmtree(folder)

    def test_missing_keys(self):
        d = self.cam.to_dict()
        del d['fx']
        with self.assertRaises(CameraException):
            Camera.from_dict(d)


class TestTriangulation(unittest.TestCase):

    def test_exact_point(self):
        cams = ring_of_cameras(2)
        point = np.array([0.1, -0.2, 1.3])
        recovered = triangulate_pair(cams[0], project(cams[0], point),
                                     cams[1], project(cams[1], point))
        np.testing.assert_allclose(point, recovered, atol=1e-9)

    def test_degenerate_baseline(self):
        cam = ring_of_cameras(1)[0]
        with self.assertRaises(CameraException) as cm:
            triangulate_pair(cam, [500, 500], cam, [510, 500])
        self.assertIn('degenerate baseline', str(cm.exception))

    def test_corrupted_view_gets_lowest_weight(self):
        cams = ring_of_cameras(5)
        points = np.random.default_rng(1).normal(0, 0.3, (6, 3)) \
            + [0.0, 0.0, 1.0]
        keypoints = observe(cams, points).with_view_offset(2, [80.0, 0.0])
        weights = consensus_weights(cams, keypoints, tau=20.0)
        # good pairs triangulate exactly, the shifted view is off by 80 px
        np.testing.assert_allclose(np.exp(-4.0), weights.weights[2])
        for j in range(keypoints.n_joints):
            self.assertEqual(2, int(np.argmin(weights.weights[:, j])))

    def test_accumulate_errors(self):
        self.assertAlmostEqual(7.0, accumulate_errors([7.0]))
        self.assertAlmostEqual(80.0, accumulate_errors([80.0] * 3))
        errors = [1.0, 45.0, 300.0]
        score = accumulate_errors(errors)
        self.assertGreater(score, min(errors))
        self.assertLess(score, np.mean(errors))
        self.assertLessEqual(score, 1.0 + 10.0 * np.log(3))
        self.assertAlmostEqual(score, accumulate_errors(errors[::-1]))
        for k in range(3):
            larger = list(errors)
            larger[k] += 1.0
            self.assertGreater(accumulate_errors(larger), score)

    def test_camera_order_does_not_matter(self):
        cams = ring_of_cameras(5)
        points = np.random.default_rng(2).normal(0, 0.3, (6, 3)) \
            + [0.0, 0.0, 1.0]
        keypoints = observe(cams, points).with_view_offset(1, [30.0, 50.0])
        keypoints.observations[3, :, :2] += np.random.default_rng(3).normal(
            0, 2.0, (6, 2))
        weights = consensus_weights(cams, keypoints)
        order = [3, 0, 4, 1, 2]
        shuffled = consensus_weights([cams[c] for c in order],
                                     keypoints.subset(order))
        np.testing.assert_allclose(
            weights.weights,
            shuffled.for_cameras(keypoints.camera_names).weights,
            rtol=1e-9)

    def test_corrupted_rig_view_is_lowest(self):
        model = make_test_humanoid()
        rng = np.random.default_rng(7)
        for frame in range(0, 24, 3):
            truth = walk_params(model, frame, np.zeros(2), 30)
            _, joints = pose_body(model, truth)
            cams = make_rig(truth.global_translation)
            for corrupted in range(len(cams)):
                keypoints = KeypointSet(
                    [cam.name for cam in cams],
                    [perturb_keypoints(render_keypoints(cam, joints), rng,
                                       1.0, 80.0 if c == corrupted else 0.0)
                     for c, cam in enumerate(cams)])
                weights = consensus_weights(cams, keypoints).weights
                observed = (keypoints.confidence > 0).sum(axis=0) >= 3
                others = np.delete(weights, corrupted, axis=0).min(axis=0)
                self.assertTrue(observed.any())
                self.assertTrue(np.all(
                    weights[corrupted][observed] < others[observed]),
                    'frame {} camera {}'.format(frame, corrupted))

    def test_clean_views_keep_full_weight(self):
        cams = ring_of_cameras(4)
        points = np.array([[0.0, 0.0, 1.0], [0.2, 0.1, 0.5]])
        weights = consensus_weights(cams, observe(cams, points))
        np.testing.assert_allclose(1.0, weights.weights, atol=1e-6)

    def test_too_few_views(self):
        cams = ring_of_cameras(4)
        keypoints = observe(cams, np.array([[0.0, 0.0, 1.0]]))
        observations = keypoints.observations.copy()
        observations[:2, 0, 2] = 0.0
        observations[2, 0, :2] += 50.0
        weights = consensus_weights(cams, KeypointSet(
            keypoints.camera_names, observations))
        np.testing.assert_array_equal(1.0, weights.weights)

    def test_camera_count_mismatch(self):
        cams = ring_of_cameras(3)
        keypoints = observe(cams, np.zeros((1, 3)))
        with self.assertRaises(CameraException):
            consensus_weights(cams[:2], keypoints)

    def test_for_cameras_reorders(self):
        cams = ring_of_cameras(5)
        keypoints = observe(cams, np.array([[0.0, 0.0, 1.0]]))
        weights = consensus_weights(
            cams, keypoints.with_view_offset(4, [0.0, 40.0]))
        reordered = weights.for_cameras(['cam_4', 'cam_0'])
        np.testing.assert_array_equal(weights.weights[[4, 0]],
                                      reordered.weights)


class TestKeypoints(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.mkdtemp(suffix='_test_keypoints_')

    def tearDown(self):
        shutil.rmtree(self.folder)

    def test_validation(self):
        with self.assertRaises(DimensionMismatch):
            KeypointSet(['a'], np.zeros((1, 3, 2)))
        with self.assertRaises(DimensionMismatch):
            KeypointSet(['a', 'b'], np.zeros((1, 3, 3)))
        with self.assertRaises(ValueError):
            KeypointSet(['a'], [[[0.0, 0.0, 1.5]]])

    def test_missing_detection_coordinates_are_cleared(self):
        keypoints = KeypointSet(['a'], [[[10.0, 20.0, 0.0]]])
        np.testing.assert_array_equal([[[0.0, 0.0]]], keypoints.uv)
        self.assertFalse(keypoints.any_observed())

    def test_load_merges_cameras(self):
        paths = []
        for name, frames in (('a', {0: np.ones((2, 3)), 1: np.ones((2, 3))}),
                             ('b', {1: np.full((2, 3), 0.5)})):
            path = os.path.join(self.folder, name + '.json')
            save_keypoint_file(path, name, frames)
            paths.append(path)
        keypoints = load_keypoints(paths)
        self.assertEqual([0, 1], sorted(keypoints))
        self.assertEqual(['a', 'b'], keypoints[0].camera_names)
        np.testing.assert_array_equal(0.0, keypoints[0].confidence[1])
        np.testing.assert_array_equal(0.5, keypoints[1].confidence[1])

    def test_order_cameras(self):
        cams = ring_of_cameras(3)
        ordered = order_cameras(cams, ['cam_2', 'cam_0'])
        self.assertEqual(['cam_2', 'cam_0'], [c.name for c in ordered])
        with self.assertRaises(CameraException):
            order_cameras(cams, ['cam_9'])


class TestFusion(unittest.TestCase):

    def _params(self, degrees, translation):
        pose = np.zeros(6)
        pose[:3] = rotation_about([0, 0, 1], degrees)
        return BodyParams(translation, pose, np.zeros(2))

    def test_rotation_mean(self):
        fused = fuse_pose_estimates([self._params(10, [0, 0, 0]),
                                     self._params(30, [1, 0, 0])])
        self.assertAlmostEqual(
            0.0, angle_between(rotation_about([0, 0, 1], 20),
                               fused.pose[:3]), places=6)
        np.testing.assert_allclose([0.5, 0, 0], fused.global_translation)

    def test_single_estimate_is_copied(self):
        params = self._params(10, [0, 0, 0])
        fused = fuse_pose_estimates([params])
        fused.pose[0] = 5.0
        self.assertNotEqual(5.0, params.pose[0])

    def test_errors(self):
        with self.assertRaises(ValueError):
            fuse_pose_estimates([])
        with self.assertRaises(DimensionMismatch):
            fuse_pose_estimates([self._params(0, [0, 0, 0]),
                                 BodyParams(np.zeros(3), np.zeros(9),
                                            np.zeros(2))])

    def test_estimate_files(self):
        folder = tempfile.mkdtemp(suffix='_test_fusion_')
        try:
            paths = []
            for name, frames in (('a', {0: self._params(0, [0, 0, 0])}),
                                 ('b', {0: self._params(10, [0, 0, 0]),
                                        1: self._params(20, [0, 0, 0])})):
                path = os.path.join(folder, name + '.json')
                save_pose_estimates(path, name, frames)
                paths.append(path)
            estimates = load_pose_estimates(paths)
            self.assertEqual(2, len(estimates[0]))
            self.assertEqual(1, len(estimates[1]))
        finally:
            shutil.rmtree(folder)
