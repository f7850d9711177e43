import signal
import logging
import traceback

from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor

logger = logging.getLogger(__name__)


"""
Common interface of the pipeline stages. A stage turns its work into
FrameTasks, processes them sequentially or in a process pool and keeps the
state of every frame in the run ledger.
"""


def serialize_error(e, tb):
    return "{} --> in '{}': {}".format(e, __file__, tb)


def _execute(runner, task):
    """Worker side of a task: never raises, returns the result or the
    serialized error."""
    try:
        return task, runner.process_task(task), None
    except Exception as e:
        logger.exception("sequence={} Error processing task in {}".format(
            task.sequence_id, runner.stage))
        return task, None, serialize_error(e, traceback.format_exc())


class StageRunner(ABC):

    def __init__(self, run_db, stage: str, config=None):
        """
        Parameters
        ----------
        run_db: RunDB
            ledger receiving the state of every processed frame
        stage: str
            ledger stage name of the processed frames
        config:
            stage configuration, available to process_task
        """
        self.run_db = run_db
        self.stage = stage
        self.config = config
        self.stopped = False

    def __getstate__(self):
        # workers only run process_task, the ledger stays in the parent
        state = dict(self.__dict__)
        state['run_db'] = None
        return state

    @abstractmethod
    def process_task(self, task):
        """
        Business logic of the stage. Returns an optional dict mapping frame
        indices to the energy recorded in the ledger.
        """
        pass

    def _start(self, task):
        ids = {}
        for frame in task.frames:
            id_ = self.run_db.create_record(task.sequence_id, frame,
                                            self.stage)
            self.run_db.set_processing(id_)
            ids[str(frame)] = id_
        task.data['record_ids'] = ids

    def _finish(self, task, result, error):
        ids = task.data.get('record_ids', {})
        if error is not None:
            task.error = error
            for id_ in ids.values():
                self.run_db.set_failed(id_, error)
            return task
        result = result or {}
        frame_errors = task.frame_errors
        for frame in task.frames:
            if frame in frame_errors:
                self.run_db.set_failed(ids[str(frame)], frame_errors[frame])
            else:
                self.run_db.set_completed(ids[str(frame)],
                                          energy=result.get(frame))
        return task

    def _skip(self, task):
        for frame in task.frames:
            id_ = self.run_db.create_record(task.sequence_id, frame,
                                            self.stage)
            self.run_db.set_skipped(id_)
        return task

    def run_once(self, task):
        self._start(task)
        return self._finish(*_execute(self, task))

    def run(self, tasks, jobs=1):
        """Process all tasks and return them in the given order, failed
        tasks carrying their serialized error."""
        previous = self._install_signal_handlers()
        try:
            return self._run(tasks, jobs)
        finally:
            for signum, handler in previous.items():
                signal.signal(signum, handler)

    def _run(self, tasks, jobs):
        if jobs <= 1:
            done = []
            for task in tasks:
                done.append(self._skip(task) if self.stopped
                            else self.run_once(task))
            return done

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = []
            for task in tasks:
                self._start(task)
                futures.append(pool.submit(_execute, self, task))
            done = []
            for task, future in zip(tasks, futures):
                if self.stopped and future.cancel():
                    for id_ in task.data['record_ids'].values():
                        self.run_db.set_skipped(id_)
                    done.append(task)
                    continue
                # the worker returns its own copy of the task
                done.append(self._finish(*future.result()))
            return done

    def _install_signal_handlers(self):
        previous = {}
        try:
            for signum in (signal.SIGINT, signal.SIGTERM):
                previous[signum] = signal.signal(signum,
                                                 self.exit_gracefully)
        except ValueError:
            # not in the main thread
            logger.debug("Signal handlers not installed")
        return previous

    def exit_gracefully(self, _, __):
        logger.info("Stopping {} after the current task, remaining tasks "
                    "are skipped.".format(self.stage))
        self.stop()

    def stop(self):
        self.stopped = True
