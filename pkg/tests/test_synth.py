import filecmp
import os
import shutil
import tempfile
import unittest

import numpy as np

from hsc_toolbox.body_model.model import pose_body
from hsc_toolbox.body_model.model_io import load_model, load_params_sequence
from hsc_toolbox.camera.camera import load_camera
from hsc_toolbox.camera.keypoints import load_keypoint_file
from hsc_toolbox.contact.annotate import annotate_contact, posed_in_scene
from hsc_toolbox.contact.labels import load_contact_frames
from hsc_toolbox.geometry.bvh import Bvh
from hsc_toolbox.geometry.mesh_io import load_mesh
from hsc_toolbox.geometry.rigid import rigid_align
from hsc_toolbox.pipeline.config import PipelineConfig
from hsc_toolbox.pipeline.manifest import load_manifest
from hsc_toolbox.pipeline.sampling import sample_training_pairs
from hsc_toolbox.pipeline.scene import load_alignment, load_correspondences
from hsc_toolbox.pipeline.synth import (
    PLANS, CORRUPTED_CAMERA, CORRUPTION_PX, generate_dataset, scan_transform
)

N_FRAMES = 4
# clean train sequence and the noisy test sequence
SMALL_PLANS = (PLANS[1], PLANS[4])


class TestSynth(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.folder = tempfile.mkdtemp(suffix='_test_synth_')
        cls.root = os.path.join(cls.folder, 'a')
        cls.path = generate_dataset(cls.root, PipelineConfig(seed=0),
                                    n_frames=N_FRAMES, plans=SMALL_PLANS)
        cls.manifest = load_manifest(cls.path)
        cls.model = load_model(os.path.join(cls.root, 'model.json'))

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.folder)

    def test_manifest(self):
        self.assertEqual(['train_sit', 'test_sit_noisy'],
                         [s.id for s in self.manifest.sequences])
        noisy = self.manifest.sequence('test_sit_noisy')
        self.assertEqual([CORRUPTED_CAMERA], noisy.corrupted_views)
        self.assertEqual([], self.manifest.sequence('train_sit')
                         .corrupted_views)
        # seen scene and interaction, new subject
        self.assertEqual((True, True, False), tuple(noisy.seen))
        self.assertEqual(list(range(N_FRAMES)), noisy.frame_indices)

    def test_same_seed_same_files(self):
        root = os.path.join(self.folder, 'b')
        generate_dataset(root, PipelineConfig(seed=0), n_frames=N_FRAMES,
                         plans=SMALL_PLANS)
        for rel in ('sequences/test_sit_noisy/gt_params.json',
                    'sequences/test_sit_noisy/keypoints/cam_2.json',
                    'sequences/test_sit_noisy/estimates/cam_0.json',
                    'sequences/train_sit/gt_contacts/frame_000003.json'):
            self.assertTrue(filecmp.cmp(os.path.join(self.root, rel),
                                        os.path.join(root, rel),
                                        shallow=False), rel)

    def test_keypoints_are_projected_joints(self):
        sequence = self.manifest.sequence('train_sit')
        gt = load_params_sequence(self.manifest.resolve(sequence.gt_params))
        for cam_path, kp_path in zip(sequence.cameras, sequence.keypoints):
            cam = load_camera(self.manifest.resolve(cam_path))
            _, frames = load_keypoint_file(self.manifest.resolve(kp_path))
            for frame, detections in frames.items():
                uv, _ = cam.project_points(pose_body(self.model,
                                                     gt[frame])[1])
                observed = detections[:, 2] > 0
                self.assertTrue(observed.any())
                np.testing.assert_allclose(uv[observed],
                                           detections[observed, :2],
                                           atol=1e-6)

    def test_corrupted_view_is_offset(self):
        sequence = self.manifest.sequence('test_sit_noisy')
        gt = load_params_sequence(self.manifest.resolve(sequence.gt_params))
        index = [os.path.basename(p) for p in sequence.cameras] \
            .index(CORRUPTED_CAMERA + '.json')
        cam = load_camera(self.manifest.resolve(sequence.cameras[index]))
        _, frames = load_keypoint_file(
            self.manifest.resolve(sequence.keypoints[index]))
        uv, _ = cam.project_points(pose_body(self.model, gt[0])[1])
        observed = frames[0][:, 2] > 0
        error = np.linalg.norm(frames[0][observed, :2] - uv[observed],
                               axis=1)
        # common offset plus 1 px noise
        self.assertAlmostEqual(CORRUPTION_PX, np.median(error), delta=5.0)

    def test_ground_truth_contacts_match_annotation(self):
        sequence = self.manifest.sequence('train_sit')
        gt = load_params_sequence(self.manifest.resolve(sequence.gt_params))
        contacts = load_contact_frames(
            self.manifest.resolve(sequence.gt_contacts))
        bvh = Bvh(load_mesh(self.manifest.resolve(sequence.scene_mesh)))
        align = load_alignment(self.manifest.resolve(sequence.alignment))
        for frame, params in gt.items():
            body = posed_in_scene(self.model, params, align)
            again = annotate_contact(body.vertices, body.vertex_normals,
                                     self.model, bvh)
            # the scan file is written with finite precision
            agreement = np.mean(again.labels == contacts[frame].labels)
            self.assertGreater(agreement, 0.99)
            # sitting touches more than the feet
            outside = contacts[frame].mask & ~self.model.foot_sole_mask
            self.assertTrue(outside.any())

    def test_alignment_from_correspondences(self):
        sequence = self.manifest.sequence('train_sit')
        _, camera_points, scan_points = load_correspondences(
            self.manifest.resolve(sequence.correspondences))
        transform = rigid_align(camera_points, scan_points)
        expected = scan_transform(sequence.scene_id)
        np.testing.assert_allclose(expected.rotation, transform.rotation,
                                   atol=1e-9)
        np.testing.assert_allclose(expected.translation,
                                   transform.translation, atol=1e-9)
        self.assertLess(transform.rms, 1e-9)

    def test_sampling(self):
        pairs = sample_training_pairs(self.manifest, seed=2)
        # every other frame, the moving view plus one static view
        self.assertEqual(2 * len(range(0, N_FRAMES, 2)), len(pairs))
        self.assertEqual({'train_sit'}, set(p[0] for p in pairs))
        self.assertEqual([0, 0, 2, 2], [p[1] for p in pairs])
        self.assertEqual(['cam_4', 'cam_4'], [p[2] for p in pairs[::2]])
        self.assertEqual(pairs, sample_training_pairs(self.manifest, seed=2))
        self.assertEqual([], sample_training_pairs(self.manifest, 'val'))

    def test_sampling_static_views_only(self):
        pairs = sample_training_pairs(self.manifest, 'test', seed=2)
        for frame in (0, 2):
            views = [c for _, f, c in pairs if f == frame]
            self.assertEqual(2, len(set(views)))
            self.assertNotIn('cam_4', views)
