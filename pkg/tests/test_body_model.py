import os
import shutil
import tempfile
import unittest

import numpy as np
from scipy.spatial.transform import Rotation

from hsc_toolbox.constants import FOOT_SOLE
from hsc_toolbox.contact.labels import ContactVector
from hsc_toolbox.exceptions import (
    DatasetException, DimensionMismatch, MeshParseError, TopologyMismatch
)
from hsc_toolbox.body_model.humanoid import (
    make_test_humanoid, rest_joint_positions, TOPOLOGY_NAME
)
from hsc_toolbox.body_model.model import (
    BodyModel, BodyParams, pose_body, joints_and_jacobian,
    pack_free_parameters, unpack_free_parameters, free_parameter_count
)
from hsc_toolbox.body_model.model_io import (
    model_to_dict, model_from_dict, save_model, load_model,
    save_params_sequence, load_params_sequence
)
from hsc_toolbox.body_model.rotation import (
    left_jacobian, rotation_about, angle_between
)
from hsc_toolbox.body_model.topology import (
    TopologyMap, map_contact_labels, drop_region_map
)


def random_params(model, rng, scale=0.3):
    return BodyParams(rng.normal(0, 0.2, 3),
                      rng.normal(0, scale, 3 * model.n_joints),
                      rng.normal(0, 0.5, model.n_shape),
                      rng.normal(0, scale, model.n_hand))


class TestHumanoid(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.model = make_test_humanoid()

    def test_rest_pose(self):
        vertices, joints = pose_body(self.model,
                                     BodyParams.zeros(self.model))
        np.testing.assert_allclose(self.model.template_vertices, vertices,
                                   atol=1e-12)
        np.testing.assert_allclose(rest_joint_positions(), joints,
                                   atol=1e-9)

    def test_translation_moves_everything(self):
        params = BodyParams.zeros(self.model)
        params.global_translation = np.array([1.0, -2.0, 0.5])
        vertices, joints = pose_body(self.model, params)
        np.testing.assert_allclose(self.model.template_vertices
                                   + [1.0, -2.0, 0.5], vertices)
        np.testing.assert_allclose(rest_joint_positions()
                                   + [1.0, -2.0, 0.5], joints, atol=1e-9)

    def test_skinning_weights(self):
        sums = np.asarray(self.model.skin_weights.sum(axis=1)).ravel()
        np.testing.assert_allclose(1.0, sums)
        self.assertLessEqual(np.diff(self.model.skin_weights.indptr).max(), 4)

    def test_knee_flexion_moves_ankle_back(self):
        params = BodyParams.zeros(self.model)
        knee = self.model.joint_index('left_knee')
        ankle = self.model.joint_index('left_ankle')
        params.pose[3 * knee:3 * knee + 3] = rotation_about([1, 0, 0], -90)
        _, joints = pose_body(self.model, params)
        self.assertLess(joints[ankle, 1], joints[knee, 1] - 0.3)
        self.assertAlmostEqual(joints[knee, 2], joints[ankle, 2], places=9)

    def test_bone_lengths_are_pose_invariant(self):
        rng = np.random.default_rng(0)
        params = random_params(self.model, rng)
        _, rest = pose_body(self.model, BodyParams(
            np.zeros(3), np.zeros(3 * self.model.n_joints), params.shape))
        _, posed = pose_body(self.model, params)
        for parent, child in self.model.bones():
            self.assertAlmostEqual(
                np.linalg.norm(rest[child] - rest[parent]),
                np.linalg.norm(posed[child] - posed[parent]), places=9)

    def test_height_shape_direction(self):
        params = BodyParams.zeros(self.model)
        params.shape[0] = 1.0
        vertices, _ = pose_body(self.model, params)
        top = np.argmax(self.model.template_vertices[:, 2])
        self.assertGreater(vertices[top, 2],
                           self.model.template_vertices[top, 2])

    def test_foot_sole_region(self):
        sole = self.model.foot_sole_mask
        self.assertTrue(sole.any())
        self.assertTrue(np.all(self.model.template_vertices[sole, 2] < 0.02))
        tags = self.model.vertex_regions()
        self.assertTrue(np.all(tags[sole] == FOOT_SOLE))

    def test_faces_are_consistently_oriented(self):
        self.assertTrue(self.model.mesh.is_consistently_oriented())


class TestJacobian(unittest.TestCase):

    def _check(self, model, seed):
        rng = np.random.default_rng(seed)
        params = random_params(model, rng)
        joints, jacobian = joints_and_jacobian(model, params)
        self.assertEqual((model.n_joints, 3, free_parameter_count(model)),
                         jacobian.shape)
        _, posed = pose_body(model, params)
        np.testing.assert_allclose(posed, joints, atol=1e-12)

        vector = pack_free_parameters(params)
        eps = 1e-6
        numeric = np.zeros_like(jacobian)
        for i in range(len(vector)):
            plus, minus = vector.copy(), vector.copy()
            plus[i] += eps
            minus[i] -= eps
            j_plus, _ = joints_and_jacobian(
                model, unpack_free_parameters(model, plus, params.shape))
            j_minus, _ = joints_and_jacobian(
                model, unpack_free_parameters(model, minus, params.shape))
            numeric[:, :, i] = (j_plus - j_minus) / (2 * eps)
        np.testing.assert_allclose(numeric, jacobian, atol=1e-6)

    def test_matches_finite_differences(self):
        self._check(make_test_humanoid(), 1)

    def test_matches_finite_differences_with_hands(self):
        self._check(make_test_humanoid(with_hands=True), 2)

    def test_pack_unpack(self):
        model = make_test_humanoid(with_hands=True)
        params = random_params(model, np.random.default_rng(3))
        restored = unpack_free_parameters(
            model, pack_free_parameters(params), params.shape)
        np.testing.assert_array_equal(params.pose, restored.pose)
        np.testing.assert_array_equal(params.hand_pose, restored.hand_pose)
        np.testing.assert_array_equal(params.global_translation,
                                      restored.global_translation)


class TestBodyParams(unittest.TestCase):

    def setUp(self):
        self.model = make_test_humanoid()

    def test_wrong_pose_length(self):
        params = BodyParams(np.zeros(3), np.zeros(5), np.zeros(2))
        with self.assertRaises(DimensionMismatch) as cm:
            params.validate(self.model)
        self.assertEqual('pose', cm.exception.field)

    def test_non_finite(self):
        params = BodyParams.zeros(self.model)
        params.shape[0] = np.nan
        with self.assertRaises(ValueError):
            params.validate(self.model)

    def test_dict(self):
        params = random_params(self.model, np.random.default_rng(4))
        restored = BodyParams.from_dict(params.to_dict())
        np.testing.assert_array_equal(params.pose, restored.pose)
        np.testing.assert_array_equal(params.shape, restored.shape)


class TestModelValidation(unittest.TestCase):

    def _build(self, **overrides):
        args = dict(template_vertices=np.eye(3), faces=[[0, 1, 2]],
                    parents=[-1, 0], joint_regressor=np.full((2, 3), 1 / 3),
                    skin_weights=[[1, 0], [0, 1], [0.5, 0.5]],
                    shape_dirs=np.zeros((3, 3, 1)), regions={},
                    topology_name='tiny')
        args.update(overrides)
        return BodyModel(**args)

    def test_valid(self):
        self.assertEqual(2, self._build().n_joints)

    def test_parent_after_child(self):
        with self.assertRaises(ValueError):
            self._build(parents=[-1, 1])

    def test_regressor_rows(self):
        with self.assertRaises(ValueError):
            self._build(joint_regressor=np.full((2, 3), 0.5))

    def test_regressor_shape(self):
        with self.assertRaises(DimensionMismatch):
            self._build(joint_regressor=np.full((3, 3), 1 / 3))

    def test_region_out_of_range(self):
        with self.assertRaises(ValueError):
            self._build(regions={'a': [7]})


class TestModelIO(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.mkdtemp(suffix='_test_body_model_')

    def tearDown(self):
        shutil.rmtree(self.folder)

    def test_save_and_load(self):
        model = make_test_humanoid(with_hands=True)
        path = os.path.join(self.folder, 'model.json')
        save_model(model, path)
        loaded = load_model(path)
        self.assertEqual(model.topology_name, loaded.topology_name)
        self.assertEqual(model.joint_names, loaded.joint_names)
        params = random_params(model, np.random.default_rng(5))
        np.testing.assert_allclose(pose_body(model, params)[0],
                                   pose_body(loaded, params)[0], atol=1e-12)

    def test_save_and_load_without_hands(self):
        model = make_test_humanoid()
        path = os.path.join(self.folder, 'model.json')
        save_model(model, path)
        loaded = load_model(path)
        self.assertEqual((0, 0), loaded.hand_basis.shape)
        self.assertEqual(0, loaded.n_hand)
        self.assertFalse(loaded.has_hands)
        params = random_params(loaded, np.random.default_rng(8))
        np.testing.assert_allclose(pose_body(model, params)[1],
                                   pose_body(loaded, params)[1], atol=1e-12)

    def test_missing_keys(self):
        d = model_to_dict(make_test_humanoid())
        del d['regressor']
        with self.assertRaises(DatasetException) as cm:
            model_from_dict(d)
        self.assertIn('regressor', str(cm.exception))

    def test_params_sequence(self):
        model = make_test_humanoid()
        rng = np.random.default_rng(6)
        sequence = {f: random_params(model, rng) for f in (3, 1, 2)}
        path = os.path.join(self.folder, 'params.json')
        save_params_sequence(path, sequence)
        loaded = load_params_sequence(path)
        self.assertEqual([1, 2, 3], sorted(loaded))
        np.testing.assert_array_equal(sequence[2].pose, loaded[2].pose)


class TestRotation(unittest.TestCase):

    def test_left_jacobian(self):
        rng = np.random.default_rng(7)
        for w in (rng.normal(size=3), np.array([1e-8, 0, 0])):
            dw = 1e-6 * rng.normal(size=3)
            moved = Rotation.from_rotvec(w + dw)
            predicted = Rotation.from_rotvec(left_jacobian(w) @ dw) \
                * Rotation.from_rotvec(w)
            np.testing.assert_allclose(moved.as_matrix(),
                                       predicted.as_matrix(), atol=1e-10)

    def test_angle_between(self):
        a = rotation_about([0, 0, 1], 10)
        b = rotation_about([0, 0, 1], 55)
        self.assertAlmostEqual(45.0, angle_between(a, b))
        self.assertAlmostEqual(0.0, angle_between(a, a))


class TestTopology(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.mkdtemp(suffix='_test_topology_')

    def tearDown(self):
        shutil.rmtree(self.folder)

    def test_map_labels(self):
        topology_map = TopologyMap([[0, 2], [1, 0], [3, 1]], 'a', 'b', 4, 3)
        mapped = map_contact_labels(
            ContactVector([1, 0, 1, 1], 'a', frame=5), topology_map)
        self.assertEqual('b', mapped.topology)
        self.assertEqual(5, mapped.frame)
        np.testing.assert_array_equal([0, 1, 1], mapped.labels)

    def test_map_rejects_other_topology(self):
        topology_map = TopologyMap.identity('a', 2)
        with self.assertRaises(TopologyMismatch):
            map_contact_labels(ContactVector([1, 0], 'c'), topology_map)
        with self.assertRaises(DimensionMismatch):
            map_contact_labels(ContactVector([1, 0, 0], 'a'), topology_map)

    def test_not_injective(self):
        with self.assertRaises(TopologyMismatch):
            TopologyMap([[0, 1], [1, 1]], 'a', 'b', 2, 2)

    def test_save_and_load(self):
        topology_map = TopologyMap([[0, 2], [1, 0]], 'a', 'b', 2, 3)
        path = os.path.join(self.folder, 'a_to_b.txt')
        topology_map.save(path)
        loaded = TopologyMap.load(path)
        np.testing.assert_array_equal(topology_map.pairs, loaded.pairs)
        self.assertEqual((2, 3), (loaded.src_size, loaded.dst_size))
        np.testing.assert_array_equal(
            [[0, 1], [2, 0]], loaded.inverse().pairs[np.argsort(
                loaded.inverse().pairs[:, 0])])

    def test_load_errors(self):
        path = os.path.join(self.folder, 'bad.txt')
        with open(path, 'w') as f:
            f.write('# src=a dst=b\n0 1\n1 x\n')
        with self.assertRaises(MeshParseError) as cm:
            TopologyMap.load(path)
        self.assertEqual(3, cm.exception.line_number)
        with open(path, 'w') as f:
            f.write('0 1\n')
        with self.assertRaises(MeshParseError):
            TopologyMap.load(path)

    def test_drop_region(self):
        model = make_test_humanoid()
        head = model.regions['head']
        topology_map = drop_region_map(model, ['head'], 'no_head')
        self.assertEqual(model.n_vertices - len(head), topology_map.dst_size)
        labels = np.zeros(model.n_vertices, dtype=np.uint8)
        labels[head] = 1
        mapped = map_contact_labels(ContactVector(labels, TOPOLOGY_NAME),
                                    topology_map)
        self.assertEqual(0, mapped.n_contacts)
