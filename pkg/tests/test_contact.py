import shutil
import tempfile
import unittest

import numpy as np

from hsc_toolbox.exceptions import ConfigException, TopologyMismatch
from hsc_toolbox.body_model.humanoid import make_test_humanoid
from hsc_toolbox.body_model.model import BodyParams
from hsc_toolbox.contact.annotate import (
    annotate_contact, contact_from_fit, normals_compatible, posed_in_scene
)
from hsc_toolbox.contact.baselines import (
    uniform_threshold_contact, joint_contacts_to_vertices
)
from hsc_toolbox.contact.labels import (
    ContactVector, ContactConfig, save_contact_frames, load_contact_frames
)
from hsc_toolbox.fitting.fit import FitResult
from hsc_toolbox.geometry.bvh import Bvh
from hsc_toolbox.geometry.rigid import RigidTransform
from hsc_toolbox.pipeline.scene import (
    box_mesh, ground_mesh, merge_meshes, SEAT_MIN, SEAT_MAX
)
from hsc_toolbox.pipeline.synth import sit_params, walk_params

from oracles import brute_force_contact

MODEL = make_test_humanoid()


def seat_scene():
    return merge_meshes([ground_mesh((-1.0, -1.0), (1.0, 1.0), 2),
                         box_mesh(SEAT_MIN, SEAT_MAX)])


def lifted(height):
    params = BodyParams.zeros(MODEL)
    # clear of the seat, over the open floor
    params.global_translation = np.array([0.0, 0.7, height])
    return params


class TestAnnotate(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.scene = seat_scene()
        cls.bvh = Bvh(cls.scene)

    def _check_against_brute_force(self, params):
        cfg = ContactConfig()
        body = posed_in_scene(MODEL, params, RigidTransform.identity())
        contacts = annotate_contact(body.vertices, body.vertex_normals,
                                    MODEL, self.bvh, cfg)
        thresholds = np.where(MODEL.foot_sole_mask, cfg.threshold_foot,
                              cfg.threshold_body)
        expected, unambiguous = brute_force_contact(
            body.vertices, body.vertex_normals, thresholds, self.scene,
            cfg.normal_max_angle)
        self.assertGreater(unambiguous.mean(), 0.95)
        np.testing.assert_array_equal(expected[unambiguous],
                                      contacts.labels[unambiguous])
        return contacts

    def test_sitting_matches_brute_force(self):
        params = sit_params(MODEL, 0, np.zeros(2), 30)
        contacts = self._check_against_brute_force(params)
        self.assertGreater(contacts.n_contacts, 0)
        self.assertEqual(MODEL.topology_name, contacts.topology)

    def test_walking_matches_brute_force(self):
        params = walk_params(MODEL, 5, np.zeros(2), 30)
        params.global_translation[:2] = 0.0
        self._check_against_brute_force(params)

    def test_foot_sole_threshold(self):
        # 3 cm above the floor: inside the foot threshold only
        contacts = annotate_contact(
            *self._body(lifted(0.03)), MODEL, self.bvh)
        self.assertGreater(contacts.n_contacts, 0)
        self.assertTrue(np.all(MODEL.foot_sole_mask[contacts.mask]))

    def test_nothing_in_contact_far_away(self):
        contacts = annotate_contact(*self._body(lifted(1.0)), MODEL,
                                    self.bvh, frame=4)
        self.assertEqual(0, contacts.n_contacts)
        self.assertEqual(4, contacts.frame)

    def test_normals_must_face_the_scene(self):
        vertices, normals = self._body(lifted(0.03))
        contacts = annotate_contact(vertices, -normals, MODEL, self.bvh)
        self.assertEqual(0, contacts.n_contacts)

    def test_normals_compatible(self):
        up = np.array([[0.0, 0.0, 1.0]])
        self.assertTrue(normals_compatible(-up, up, 90.0)[0])
        self.assertFalse(normals_compatible(up, up, 90.0)[0])
        self.assertTrue(normals_compatible(np.array([[1.0, 0.0, 0.0]]), up,
                                           90.0)[0])
        self.assertFalse(normals_compatible(np.array([[1.0, 0.0, 0.0]]),
                                            up, 60.0)[0])

    def test_wrong_topology(self):
        vertices, normals = self._body(lifted(0.0))
        with self.assertRaises(TopologyMismatch):
            annotate_contact(vertices[:-1], normals[:-1], MODEL, self.bvh)

    def test_contact_from_fit(self):
        fit = FitResult([lifted(0.03), lifted(1.0)], [{}, {}], [None, None],
                        [True, True], [7, 8])
        shift = RigidTransform(np.eye(3), [0.5, 0.0, 0.0])
        contacts = contact_from_fit(fit, MODEL, self.scene, shift)
        self.assertEqual([7, 8], [c.frame for c in contacts])
        self.assertGreater(contacts[0].n_contacts, 0)
        self.assertEqual(0, contacts[1].n_contacts)

    def _body(self, params):
        body = posed_in_scene(MODEL, params, RigidTransform.identity())
        return body.vertices, body.vertex_normals


class TestBaselines(unittest.TestCase):

    def test_uniform_contains_annotated(self):
        bvh = Bvh(seat_scene())
        params = sit_params(MODEL, 3, np.zeros(2), 30)
        body = posed_in_scene(MODEL, params, RigidTransform.identity())
        annotated = annotate_contact(body.vertices, body.vertex_normals,
                                     MODEL, bvh)
        uniform = uniform_threshold_contact(body.vertices, bvh,
                                            topology=MODEL.topology_name)
        self.assertTrue(np.all(uniform.mask[annotated.mask]))
        self.assertGreaterEqual(uniform.n_contacts, annotated.n_contacts)
        with self.assertRaises(ValueError):
            uniform_threshold_contact(body.vertices, bvh, 0.0,
                                      topology=MODEL.topology_name)

    def test_joint_contacts(self):
        joints = np.zeros(MODEL.n_joints)
        joints[MODEL.joint_index('left_ankle')] = 1
        contacts = joint_contacts_to_vertices(joints, MODEL, frame=2)
        dominant = MODEL.dominant_joint()
        np.testing.assert_array_equal(
            dominant == MODEL.joint_index('left_ankle'), contacts.mask)
        self.assertGreater(contacts.n_contacts, 0)
        with self.assertRaises(ValueError):
            joint_contacts_to_vertices([1, 0], MODEL)


class TestContactVector(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(ValueError):
            ContactVector([0, 2], 't')
        with self.assertRaises(ValueError):
            ContactVector([[0, 1]], 't')
        with self.assertRaises(ValueError):
            ContactVector([1, 0], 't', probabilities=[0.2, 0.1])

    def test_from_probabilities(self):
        contacts = ContactVector.from_probabilities([0.1, 0.5, 0.9], 't')
        np.testing.assert_array_equal([0, 1, 1], contacts.labels)
        np.testing.assert_array_equal([1, 2], contacts.indices())

    def test_compatibility(self):
        with self.assertRaises(TopologyMismatch):
            ContactVector([1, 0], 'a').check_compatible(
                ContactVector([1, 0], 'b'))

    def test_frames_directory(self):
        folder = tempfile.mkdtemp(suffix='_test_contact_')
        try:
            contacts = [ContactVector([1, 0, 1], 't', frame=f)
                        for f in (2, 11)]
            save_contact_frames(folder, contacts)
            loaded = load_contact_frames(folder)
            self.assertEqual([2, 11], sorted(loaded))
            self.assertEqual(contacts[1], loaded[11])
            with self.assertRaises(ValueError):
                save_contact_frames(folder, [ContactVector([1], 't')])
        finally:
            shutil.rmtree(folder)

    def test_config(self):
        self.assertEqual(0.05, ContactConfig().validate().threshold_foot)
        with self.assertRaises(ConfigException):
            ContactConfig(threshold_body=0.0).validate()
        with self.assertRaises(ConfigException):
            ContactConfig(normal_max_angle=200.0).validate()
        with self.assertRaises(ConfigException):
            ContactConfig.from_dict({'threshold': 0.1})
