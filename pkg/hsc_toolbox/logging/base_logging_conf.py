import functools
import os
import logging
import time

from hsc_toolbox.constants import RUN_LOG_FILE
from hsc_toolbox.pipeline.tasks import FrameTask

"""
Logging conventions shared by the pipeline stages: one process wide format,
per-sequence loggers that stamp every record with the sequence id, and a run
log file kept next to the outputs of a command.
"""

LOG_FORMAT = '%(asctime)s %(levelname)s %(module)s:%(lineno)s %(message)s'
SEQUENCE_LOG_FORMAT = ('%(asctime)s %(levelname)s sequence=%(sequence_id)s '
                       '%(module)s:%(lineno)s %(message)s')


def basic_logging_conf():
    """Will set up a basic logging configuration using basicConfig().
    Set HSC_DEBUG in the environment for debug output."""
    return basic_logging_conf_with_level(
        logging.DEBUG if "HSC_DEBUG" in os.environ else logging.INFO)


def basic_logging_conf_with_level(level):
    logging.basicConfig(format=LOG_FORMAT, level=level)


class SequenceFilter(logging.Filter):
    """Adds `sequence_id` to every record passing through."""

    def __init__(self, sequence_id):
        super().__init__()
        self.sequence_id = str(sequence_id)

    def filter(self, record):
        record.sequence_id = self.sequence_id
        return True


class RunLogHandler(logging.FileHandler):
    pass


def logger_for_sequence(name: str, sequence_id: str):
    """Provide a specific logger for a sequence. The provided sequence id
    will always be logged with every message.

    Asking twice for the same sequence returns the same logger with a single
    filter and the handlers it already had.

    Parameters
    ----------
        name: str
            The logger ID
        sequence_id: str
            The sequence id
    """
    logger = logging.getLogger('{}_{}'.format(name, sequence_id))
    for f in [f for f in logger.filters if isinstance(f, SequenceFilter)]:
        logger.removeFilter(f)
    logger.addFilter(SequenceFilter(sequence_id))
    logger.propagate = False

    if not logger.handlers:
        logger.addHandler(logging.StreamHandler())
    formatter = logging.Formatter(SEQUENCE_LOG_FORMAT)
    for handler in logger.handlers:
        handler.setFormatter(formatter)
    return logger


def attach_run_log(output_dir, level=logging.INFO):
    """Copy the root logger's records to `<output_dir>/run.log`.

    A previously attached run log is closed first, so repeated commands in
    one process each write to their own output directory only.
    """
    root = logging.getLogger()
    for handler in [h for h in root.handlers
                    if isinstance(h, RunLogHandler)]:
        root.removeHandler(handler)
        handler.close()
    os.makedirs(output_dir, exist_ok=True)
    handler = RunLogHandler(os.path.join(output_dir, RUN_LOG_FILE))
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    return handler


def log_task_runtime(f):
    """Decorator logging how long a pipeline stage took on a FrameTask.

    The runtime is also appended to `task.data['runtime']` as
    `[tag, seconds]`, one entry per call, so a task handed through several
    stages carries all of them.

    Usage:
    @log_task_runtime
    def fit_sequence(task):
        ...
    """
    @functools.wraps(f)
    def wrapper(task, *args, **kwargs):
        if not isinstance(task, FrameTask):
            raise TypeError(
                "First argument of {} must be a FrameTask, got {}".format(
                    f.__name__, type(task).__name__))

        start_time = time.time()
        result = f(task, *args, **kwargs)
        runtime = round(time.time() - start_time, 4)

        logger_for_sequence('runtime_logger', task.sequence_id).info(
            "Finished {} on {} frames in {} seconds.".format(
                task.tag, len(task.frames), runtime))
        task.data.setdefault('runtime', []).append([task.tag, runtime])
        return result
    return wrapper
