import logging

from tenacity.retry import retry_if_exception_type
from tenacity import retry, stop_after_attempt, wait_fixed

from hsc_toolbox.constants import RETRY_FILE_OP_SECONDS, RETRY_FILE_OP_TIMES

default_logger = logging.getLogger(__name__)


"""
Fixed wait retries of operations that fail transiently, such as a run ledger
locked by a parallel stage worker or a file write on a busy network share.
Only the given exception types are retried; the last one is re-raised once
the attempts are used up.
"""


def before_sleep_log(retry_state):
    default_logger.warning(
        'Retrying {}: attempt {} ended with: {}'
        .format(getattr(retry_state.fn, '__qualname__', retry_state.fn),
                retry_state.attempt_number,
                retry_state.outcome.exception()))


def retrying(exception_types, times, seconds):
    """Decorator factory, e.g. `retrying((OSError,), 5, 1)(write)`."""
    condition = None
    for exception_type in exception_types:
        this = retry_if_exception_type(exception_type)
        condition = this if condition is None else condition | this

    def decorator(f):
        return retry(
            retry=condition,
            stop=stop_after_attempt(times),
            wait=wait_fixed(seconds),
            reraise=True,
            before_sleep=before_sleep_log)(f)
    return decorator


def file_retry(f):
    return retrying((OSError,), RETRY_FILE_OP_TIMES,
                    RETRY_FILE_OP_SECONDS)(f)
