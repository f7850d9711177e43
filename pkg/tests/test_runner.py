import unittest

from hsc_toolbox.pipeline.runner import StageRunner, serialize_error
from hsc_toolbox.pipeline.tasks import FrameTask
from hsc_toolbox.run_db.model import TaskState

from temp_run_base import TempRunFactory

temp_db = TempRunFactory('test_runner')


class EnergyRunner(StageRunner):
    """Records the frame index as the energy of every frame."""

    def process_task(self, task):
        if task.data.get('fail'):
            raise ValueError('no observations')
        bad = task.data.get('bad_frame')
        if bad is not None:
            task.data['frame_errors'] = {str(bad): 'missing keypoints'}
        task.data['processed'] = True
        return {f: float(f) for f in task.frames}


def _task(sequence_id, frames, **data):
    return FrameTask(sequence_id=sequence_id, frames=frames, tag='fit',
                     data=data)


class TestStageRunner(unittest.TestCase):

    @classmethod
    def tearDownClass(self):
        temp_db.delete_temp_folder()

    def setUp(self):
        self.run_db = temp_db.get_temp_run_db()
        self.runner = EnergyRunner(self.run_db, 'fit')

    def tearDown(self):
        self.run_db.close()

    def _states(self, sequence_id):
        return [(r.frame, r.task_state, r.energy)
                for r in self.run_db.records_for(sequence_id, 'fit')]

    def test_run_once(self):
        task = self.runner.run_once(_task('seq', [0, 1]))
        self.assertIsNone(task.error)
        self.assertTrue(task.data['processed'])
        self.assertEqual([(0, TaskState.completed, 0.0),
                          (1, TaskState.completed, 1.0)],
                         self._states('seq'))

    def test_failure_is_recorded(self):
        task = self.runner.run_once(_task('seq', [0, 1], fail=True))
        self.assertIn('no observations', task.error)
        self.assertIn('-->', task.error)
        for record in self.run_db.records_for('seq', 'fit'):
            self.assertEqual(TaskState.failed, record.task_state)
            self.assertIn('no observations', record.error)

    def test_single_frame_errors(self):
        self.runner.run_once(_task('seq', [0, 1, 2], bad_frame=1))
        states = [s for _, s, _ in self._states('seq')]
        self.assertEqual([TaskState.completed, TaskState.failed,
                          TaskState.completed], states)
        self.assertEqual('missing keypoints',
                         self.run_db.records_for('seq', 'fit')[1].error)

    def test_run_keeps_order_and_continues_after_failure(self):
        tasks = [_task('a', [0]), _task('b', [0], fail=True),
                 _task('c', [0])]
        done = self.runner.run(tasks)
        self.assertEqual(['a', 'b', 'c'], [t.sequence_id for t in done])
        self.assertIsNone(done[2].error)
        self.assertIsNotNone(done[1].error)
        summary = self.run_db.summary('fit')
        self.assertEqual(2, summary['completed'])
        self.assertEqual(1, summary['failed'])

    def test_process_pool(self):
        tasks = [_task('seq_{}'.format(i), [0, 1], fail=(i == 1))
                 for i in range(3)]
        done = self.runner.run(tasks, jobs=2)
        self.assertEqual([t.sequence_id for t in tasks],
                         [t.sequence_id for t in done])
        # results come back from the worker copies
        self.assertTrue(done[0].data['processed'])
        self.assertIsNotNone(done[1].error)
        self.assertEqual([(0, TaskState.completed, 0.0),
                          (1, TaskState.completed, 1.0)],
                         self._states('seq_2'))
        self.assertIs(self.run_db, self.runner.run_db)

    def test_stopped_runner_skips_tasks(self):
        self.runner.stop()
        done = self.runner.run([_task('seq', [0, 1])])
        self.assertNotIn('processed', done[0].data)
        self.assertEqual(2, self.run_db.summary('fit')['skipped'])

    def test_exit_gracefully(self):
        self.runner.exit_gracefully(None, None)
        self.assertTrue(self.runner.stopped)

    def test_workers_do_not_carry_the_ledger(self):
        self.assertIsNone(self.runner.__getstate__()['run_db'])

    def test_serialize_error(self):
        self.assertTrue(serialize_error(ValueError('x'), 'tb')
                        .startswith("x --> in '"))
