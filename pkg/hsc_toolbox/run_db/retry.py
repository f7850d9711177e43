from sqlite3 import OperationalError as Sqlite3OperationalError
from sqlalchemy.exc import OperationalError

from hsc_toolbox.constants import (
    RETRY_DATABASE_OP_SECONDS,
    RETRY_DATABASE_OP_TIMES
)
from hsc_toolbox.retry import retrying


def run_db_retry(f):
    """Parallel stage workers share one SQLite file; a locked database is
    retried for about a minute."""
    return retrying((OperationalError, Sqlite3OperationalError),
                    RETRY_DATABASE_OP_TIMES, RETRY_DATABASE_OP_SECONDS)(f)
