import unittest

import numpy as np
from scipy.spatial.transform import Rotation

from hsc_toolbox.exceptions import (
    DatasetException, GeometryException, TopologyMismatch
)
from hsc_toolbox.body_model.humanoid import make_test_humanoid
from hsc_toolbox.body_model.model import BodyParams
from hsc_toolbox.contact.labels import ContactVector
from hsc_toolbox.geometry.mesh import Mesh
from hsc_toolbox.metrics.aggregate import (
    subset_of, macro_average, aggregate_scores, method_table, FULL_SET
)
from hsc_toolbox.metrics.contact import (
    ContactScore, EmptySetConvention, contact_prf, contact_geodesic_error,
    score_contact, score_sequence
)
from hsc_toolbox.metrics.hps import (
    Alignment, HpsScore, mpjpe, v2v, score_hps, mean_score, hps_by_contact,
    CONTACT_GROUP, NO_CONTACT_GROUP
)


def strip():
    """Five vertices in a row, 1 m apart, triangulated as a strip."""
    vertices = [[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0], [4, 0, 0],
                [0, 1, 0], [1, 1, 0], [2, 1, 0], [3, 1, 0], [4, 1, 0]]
    faces = []
    for i in range(4):
        faces += [[i, i + 1, i + 6], [i, i + 6, i + 5]]
    return Mesh(vertices, faces)


def labels(on, n=10):
    out = np.zeros(n, dtype=np.uint8)
    out[list(on)] = 1
    return ContactVector(out, 'strip')


class TestContactScores(unittest.TestCase):

    def test_prf(self):
        pred = ContactVector([1, 1, 0, 1, 0], 't')
        gt = ContactVector([1, 0, 1, 1, 0], 't')
        np.testing.assert_allclose([2 / 3, 2 / 3, 2 / 3],
                                   contact_prf(pred, gt))

    def test_empty_sets(self):
        empty = ContactVector([0, 0], 't')
        some = ContactVector([1, 0], 't')
        self.assertEqual((1.0, 1.0, 1.0), contact_prf(empty, empty))
        self.assertEqual((0.0, 0.0, 0.0), contact_prf(empty, some))
        self.assertEqual((0.0, 0.0, 0.0), contact_prf(some, empty))
        lenient = EmptySetConvention(gt_empty=(0.0, 1.0, 0.0))
        self.assertEqual((0.0, 1.0, 0.0),
                         contact_prf(some, empty, lenient))

    def test_topology_mismatch(self):
        with self.assertRaises(TopologyMismatch):
            contact_prf(ContactVector([1], 'a'), ContactVector([1], 'b'))

    def test_geodesic_error(self):
        mesh = strip()
        # vertex 4 is 4 m from vertex 0, vertex 0 is a true positive
        self.assertAlmostEqual(
            2.0, contact_geodesic_error(labels([0, 4]), labels([0]), mesh))
        self.assertAlmostEqual(
            1.0, contact_geodesic_error(labels([2]), labels([1, 3]), mesh))
        self.assertIsNone(contact_geodesic_error(labels([]), labels([1]),
                                                 mesh))

    def test_geodesic_errors(self):
        with self.assertRaises(GeometryException):
            contact_geodesic_error(labels([1]), labels([1]),
                                   Mesh(np.zeros((0, 3)), np.zeros((0, 3))))
        with self.assertRaises(GeometryException):
            contact_geodesic_error(labels([1], n=4), labels([1], n=4),
                                   strip())

    def test_score_contact(self):
        score = score_contact(labels([0, 1]), labels([1, 2]), strip())
        self.assertEqual((1, 1, 1), (score.tp, score.fp, score.fn))
        self.assertAlmostEqual(0.5, score.f1)
        self.assertAlmostEqual(0.5, score.geodesic_error)
        self.assertEqual(1, score.geodesic_frames)

    def test_score_sequence(self):
        scores = score_sequence([labels([0]), labels([])],
                                [labels([0]), labels([])], strip())
        self.assertEqual([1.0, 1.0], [s.f1 for s in scores])
        self.assertIsNone(scores[1].geodesic_error)
        with self.assertRaises(ValueError):
            score_sequence([labels([0])], [], strip())


class TestHps(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.model = make_test_humanoid()

    def test_pa_removes_similarity(self):
        rng = np.random.default_rng(0)
        gt = rng.normal(size=(24, 3))
        rotation = Rotation.from_rotvec([0.2, -0.5, 0.1]).as_matrix()
        pred = 1.3 * gt @ rotation.T + [1.0, 2.0, 3.0]
        self.assertAlmostEqual(0.0, mpjpe(pred, gt, Alignment.PA), places=6)
        self.assertGreater(mpjpe(pred, gt, Alignment.TR), 100.0)

    def test_tr_removes_pelvis_offset(self):
        gt = np.random.default_rng(1).normal(size=(24, 3))
        pred = gt + [0.5, 0.0, -0.2]
        self.assertAlmostEqual(0.0, mpjpe(pred, gt, 'TR'))
        pred[3] += [0.0, 0.0, 0.024]
        self.assertAlmostEqual(1.0, mpjpe(pred, gt, 'TR'))

    def test_v2v_tr_needs_pelvis(self):
        with self.assertRaises(ValueError):
            v2v(np.zeros((3, 3)), np.zeros((3, 3)), Alignment.TR)
        self.assertEqual(0.0, v2v(np.ones((3, 3)), np.zeros((3, 3)), 'TR',
                                  np.ones(3), np.zeros(3)))

    def test_score_hps(self):
        params = BodyParams.zeros(self.model)
        score = score_hps(self.model, params, params)
        self.assertAlmostEqual(0.0, score.mpjpe, places=6)
        self.assertAlmostEqual(0.0, score.v2v, places=6)
        moved = params.copy()
        moved.global_translation = np.array([0.0, 0.0, 0.1])
        self.assertAlmostEqual(0.0, score_hps(self.model, moved, params,
                                              Alignment.TR).v2v, places=6)

    def test_mean_score(self):
        scores = [HpsScore(10.0, 20.0, Alignment.PA),
                  HpsScore(30.0, 40.0, Alignment.PA)]
        mean = mean_score(scores)
        self.assertEqual((20.0, 30.0, 2), (mean.mpjpe, mean.v2v,
                                           mean.frames))
        self.assertIsNone(mean_score([]))
        with self.assertRaises(ValueError):
            mean_score(scores + [HpsScore(1.0, 1.0, Alignment.TR)])

    def test_hps_by_contact(self):
        n = self.model.n_vertices
        feet = np.zeros(n, dtype=np.uint8)
        feet[self.model.foot_sole_mask] = 1
        seated = feet.copy()
        seated[self.model.regions['left_thigh']] = 1
        scores = [HpsScore(10.0, 10.0, Alignment.PA),
                  HpsScore(30.0, 30.0, Alignment.PA),
                  HpsScore(50.0, 50.0, Alignment.PA)]
        contacts = [ContactVector(c, self.model.topology_name)
                    for c in (feet, seated, seated)]
        groups = hps_by_contact(scores, contacts, self.model)
        self.assertEqual(40.0, groups[CONTACT_GROUP].mpjpe)
        self.assertEqual(10.0, groups[NO_CONTACT_GROUP].mpjpe)
        groups = hps_by_contact(scores[:1], contacts[:1], self.model)
        self.assertIsNone(groups[CONTACT_GROUP])


class TestAggregate(unittest.TestCase):

    def test_subset_of(self):
        self.assertEqual('h', subset_of((True, True, True)))
        self.assertEqual('d', subset_of((False, True, False)))
        self.assertEqual('b', subset_of([1, 1, 0]))
        with self.assertRaises(DatasetException):
            subset_of((True, True))

    def test_macro_average(self):
        scores = [ContactScore(1.0, 0.5, 2 / 3, 0.02, 1, 0, 1),
                  ContactScore(0.0, 0.0, 0.0, None, 0, 2, 0)]
        mean = macro_average(scores)
        self.assertAlmostEqual(0.5, mean.precision)
        self.assertAlmostEqual(1 / 3, mean.f1)
        self.assertAlmostEqual(0.02, mean.geodesic_error)
        self.assertEqual((2, 1), (mean.frames_evaluated,
                                  mean.geodesic_frames))
        self.assertEqual((1, 2, 1), (mean.tp, mean.fp, mean.fn))
        self.assertIsNone(macro_average([]))

    def test_aggregate_scores(self):
        scores = [ContactScore(1.0, 1.0, 1.0, 0.0),
                  ContactScore(0.5, 0.5, 0.5, 0.01),
                  ContactScore(0.0, 0.0, 0.0, None)]
        tags = [(True, True, True), (True, True, True), (False, True, False)]
        rows = aggregate_scores(scores, tags)
        self.assertEqual(['d', 'h', FULL_SET], [r[0] for r in rows])
        h = rows[1]
        self.assertEqual([True, True, True], h[1:4])
        self.assertAlmostEqual(0.75, h[6])
        self.assertAlmostEqual(0.5, h[7])
        self.assertEqual(2, h[8])
        self.assertIsNone(rows[0][7])
        self.assertEqual(3, rows[-1][8])
        with self.assertRaises(ValueError):
            aggregate_scores(scores, tags[:1])

    def test_method_table(self):
        rows = method_table({'annotated': [ContactScore(1.0, 1.0, 1.0)],
                             'uniform': []})
        self.assertEqual(['annotated', 1.0, 1.0, 1.0, None, 1], rows[0])
        self.assertEqual(['uniform', None, None, None, None, 0], rows[1])


if __name__ == '__main__':
    unittest.main()
