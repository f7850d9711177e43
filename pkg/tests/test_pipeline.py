import os
import shutil
import tempfile
import unittest

from hsc_toolbox.contact.labels import load_contact_frames
from hsc_toolbox.geometry.mesh_io import load_mesh
from hsc_toolbox.pipeline.cli import main, build_parser
from hsc_toolbox.pipeline.commands import SUMMARY_FILE, CLASSIFIER_FILE
from hsc_toolbox.pipeline.fileio import read_json, read_csv, write_json

N_FRAMES = 4


class TestPipeline(unittest.TestCase):
    """synth -> fit -> annotate -> evaluate through the command line."""

    @classmethod
    def setUpClass(cls):
        cls.folder = tempfile.mkdtemp(suffix='_test_pipeline_')
        cls.out = os.path.join(cls.folder, 'out')
        cls.data = os.path.join(cls.folder, 'data')
        cls.config = os.path.join(cls.folder, 'config.json')
        write_json(cls.config, {'output_dir': cls.out,
                                'predictor': {'epochs': 2,
                                              'hidden_units': 4}})
        cls.manifest = os.path.join(cls.data, 'manifest.json')
        cls.codes = {}
        cls.codes['synth'] = main(['synth', '--config', cls.config,
                                   '--output', cls.data,
                                   '--frames', str(N_FRAMES)])
        for command in ('fit', 'annotate', 'evaluate'):
            cls.codes[command] = main(cls._args(command, '--split', 'test'))
        # later tests run more commands into the same output directory
        cls.summary = read_json(os.path.join(cls.out, SUMMARY_FILE))
        scores = os.path.join(cls.out, 'scores')
        cls.subsets = read_csv(os.path.join(scores, 'contact_subsets.csv'))
        cls.hps = read_csv(os.path.join(scores, 'hps_scores.csv'))

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.folder)

    @classmethod
    def _args(cls, command, *args):
        return [command, '--config', cls.config,
                '--manifest', cls.manifest] + list(args)

    def _summary(self):
        return read_json(os.path.join(self.out, SUMMARY_FILE))

    def test_exit_codes(self):
        self.assertEqual({'synth': 0, 'fit': 0, 'annotate': 0,
                          'evaluate': 0}, self.codes)

    def test_summary(self):
        summary = self.summary
        self.assertEqual(3 * N_FRAMES, summary['fit']['states']['completed'])
        self.assertEqual(0, summary['annotate']['failed'])
        self.assertIn('annotated', summary['evaluate']['methods'])

    def test_noiseless_contacts_match_ground_truth(self):
        header, rows = self.subsets
        self.assertEqual(['method', 'subset', 'scene', 'hsi', 'subject',
                          'precision', 'recall', 'f1', 'geodesic_cm',
                          'frames'], header)
        by_subset = {row[1]: row for row in rows if row[0] == 'annotated'}
        # test_walk and test_sit, both without keypoint noise
        for subset in ('d', 'h'):
            row = by_subset[subset]
            self.assertGreaterEqual(float(row[7]), 0.95)
            self.assertLessEqual(float(row[8]), 2.0)
            self.assertEqual(N_FRAMES, int(row[9]))
        self.assertEqual(3 * N_FRAMES, int(by_subset['g'][9]))

    def test_score_files(self):
        scores = os.path.join(self.out, 'scores')
        for name in ('contact_scores.csv', 'contact_methods.csv',
                     'hps_scores.csv', 'hps_by_contact.csv'):
            self.assertTrue(os.path.exists(os.path.join(scores, name)), name)
        _, rows = self.hps
        means = {row[2]: float(row[3]) for row in rows if row[0] == 'all'}
        self.assertEqual({'PA', 'TR'}, set(means))
        self.assertLess(means['PA'], 50.0)

    def test_align(self):
        self.assertEqual(0, main(self._args('align')))
        rms = self._summary()['align']['rms']
        self.assertEqual({'scene_0', 'scene_1'}, set(rms))
        for value in rms.values():
            self.assertLess(value, 1e-6)

    def test_export(self):
        self.assertEqual(0, main(self._args('export', '--split', 'test')))
        path = os.path.join(self.out, 'export', 'test_sit',
                            'frame_000000.ply')
        self.assertGreater(load_mesh(path).n_vertices, 0)

    def test_uniform_baseline(self):
        self.assertEqual(0, main(self._args('annotate', '--split', 'test',
                                            '--baseline', 'uniform')))
        annotated = load_contact_frames(
            os.path.join(self.out, 'contacts', 'test_sit'))
        uniform = load_contact_frames(
            os.path.join(self.out, 'uniform', 'test_sit'))
        for frame, contacts in annotated.items():
            self.assertGreaterEqual(uniform[frame].n_contacts,
                                    contacts.n_contacts)

    def test_predictor_commands(self):
        for command in ('sample', 'train', 'predict'):
            self.assertEqual(0, main(self._args(command)), command)
        self.assertTrue(os.path.exists(
            os.path.join(self.out, 'classifier', CLASSIFIER_FILE)))
        predictions = os.path.join(self.out, 'predictions')
        self.assertEqual(N_FRAMES, len(load_contact_frames(
            os.path.join(predictions, 'test_walk'))))
        self.assertEqual(0, main(self._args(
            'evaluate', '--pred', 'learned=' + predictions,
            '--pred', 'annotated=' + os.path.join(self.out, 'contacts'))))
        methods = self._summary()['evaluate']['methods']
        self.assertEqual({'learned', 'annotated'}, set(methods))

    def test_missing_predictions_exit_with_error(self):
        empty = os.path.join(self.folder, 'empty')
        os.makedirs(empty, exist_ok=True)
        self.assertEqual(1, main(self._args('evaluate', '--pred',
                                            'none=' + empty)))
        self.assertGreater(self._summary()['evaluate']['failed'], 0)

    def test_hard_errors(self):
        self.assertEqual(1, main(['fit', '--config', self.config,
                                  '--manifest',
                                  os.path.join(self.folder, 'nothing.json')]))
        bad = os.path.join(self.folder, 'bad_config.json')
        write_json(bad, {'energy': {'lambda_foo': 1.0}})
        self.assertEqual(1, main(['fit', '--config', bad,
                                  '--manifest', self.manifest]))
        self.assertEqual(1, main(self._args('evaluate', '--pred', 'nopath')))

    def test_parser(self):
        with self.assertRaises(SystemExit):
            build_parser().parse_args(['unknown'])
        args = build_parser().parse_args(['fit', '--subset', 'h'])
        self.assertEqual('h', args.subset)
