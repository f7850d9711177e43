import datetime
import logging
import os
import threading

from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker, scoped_session

from hsc_toolbox.constants import RUN_DB_SCHEMA_NAME, RUN_DB_FILE
from hsc_toolbox.exceptions import HscToolboxException
from hsc_toolbox.run_db.model import (
    FrameRecord, SchemaVersion, TaskState, create_all, STAGES
)
from hsc_toolbox.run_db.retry import run_db_retry

logger = logging.getLogger(__name__)


class RunDBException(HscToolboxException):
    pass


def lock(func):
    """Decorator for lock management"""

    def wrapper(self, *args, **kwargs):
        try:
            self.lock.acquire()
            return func(self, *args, **kwargs)
        finally:
            self.lock.release()
    return wrapper


def utcnow():
    """Aware current time in UTC, as required by the TZDateTime columns."""
    return datetime.datetime.now(datetime.timezone.utc)


def engine_for(output_dir):
    """SQLite engine of the run ledger in an output directory."""
    os.makedirs(output_dir, exist_ok=True)
    return create_engine('sqlite:///{}?check_same_thread=False'.format(
        os.path.join(os.path.abspath(output_dir), RUN_DB_FILE)))


class RunDB:
    """Ledger of per-frame processing state across pipeline stages."""

    def __init__(self, engine, create_db=True):
        """
        Parameters
        ----------
        engine: SQLAlchemy engine
        create_db: bool
            If true, the tables are created when missing
        """
        # lock for atomic operations
        self.lock = threading.RLock()
        self.session = scoped_session(sessionmaker(bind=engine))
        if create_db:
            create_all(engine)
            if not self.session.query(SchemaVersion).get(RUN_DB_SCHEMA_NAME):
                self.session.add(SchemaVersion())
            self.session.commit()

    def _get_record_or_raise_exception(self, id_):
        record = self.session.query(FrameRecord).get(id_)
        if record:
            return record
        raise RunDBException("record doesn't exist in DB ({})".format(id_))

    def _update(self, id_, **changes):
        try:
            record = self._get_record_or_raise_exception(id_)
            for key, value in changes.items():
                setattr(record, key, value)
            self.session.commit()
        except Exception:
            self.session.rollback()
            raise

    @run_db_retry
    @lock
    def create_record(self, sequence_id, frame, stage):
        """Queue a frame of a stage and return its record id. A frame that
        was processed before is reset, the ledger keeps the latest run."""
        if stage not in STAGES:
            raise RunDBException("unknown stage '{}'".format(stage))
        try:
            record = self.session.query(FrameRecord) \
                .filter(FrameRecord.sequence_id == sequence_id) \
                .filter(FrameRecord.frame == int(frame)) \
                .filter(FrameRecord.stage == stage).first()
            if record is None:
                record = FrameRecord(sequence_id=sequence_id,
                                     frame=int(frame), stage=stage)
                self.session.add(record)
            record.task_state = TaskState.queued
            record.energy = None
            record.error = None
            record.start_date = None
            record.end_date = None
            self.session.commit()
            return record.record_id
        except Exception:
            self.session.rollback()
            raise

    @run_db_retry
    @lock
    def get_record(self, id_):
        try:
            return self._get_record_or_raise_exception(id_)
        finally:
            self.session.commit()

    @run_db_retry
    @lock
    def set_processing(self, id_):
        self._update(id_, task_state=TaskState.processing,
                     start_date=utcnow())

    @run_db_retry
    @lock
    def set_completed(self, id_, energy=None):
        changes = {'task_state': TaskState.completed, 'end_date': utcnow(),
                   'error': None}
        if energy is not None:
            changes['energy'] = float(energy)
        self._update(id_, **changes)

    @run_db_retry
    @lock
    def set_failed(self, id_, error):
        self._update(id_, task_state=TaskState.failed, end_date=utcnow(),
                     error=str(error))

    @run_db_retry
    @lock
    def set_skipped(self, id_):
        self._update(id_, task_state=TaskState.skipped, end_date=utcnow())

    @run_db_retry
    @lock
    def records_for(self, sequence_id, stage):
        try:
            return self.session.query(FrameRecord) \
                .filter(FrameRecord.sequence_id == sequence_id) \
                .filter(FrameRecord.stage == stage) \
                .order_by(FrameRecord.frame.asc(),
                          FrameRecord.record_id.asc()).all()
        finally:
            self.session.commit()

    @run_db_retry
    @lock
    def summary(self, stage):
        """Number of records per task state of a stage."""
        try:
            counts = {state.name: 0 for state in TaskState}
            for (state,) in self.session.query(FrameRecord.task_state) \
                    .filter(FrameRecord.stage == stage):
                counts[state.name] += 1
            return counts
        finally:
            self.session.commit()

    def close(self):
        self.session.remove()
