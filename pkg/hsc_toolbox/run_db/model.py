import datetime
import enum

from sqlalchemy import (
    Column, Integer, String, Sequence, DateTime, Enum, Float, TypeDecorator
)
from sqlalchemy.ext.declarative import declarative_base

from hsc_toolbox import constants

Base = declarative_base()

STAGES = ('fit', 'annotate', 'evaluate', 'export')


class TaskState(enum.Enum):
    queued = 1
    processing = 2
    failed = 3
    completed = 4
    # never started because the run was stopped
    skipped = 5


class TZDateTime(TypeDecorator):
    """A sqlalchemy column type that enforces UTC on datetime objects."""
    impl = DateTime

    def process_bind_param(self, value, dialect):  # noqa: D
        if value is not None:
            if not value.tzinfo:
                raise TypeError("tzinfo is required")
            value = \
                value.astimezone(datetime.timezone.utc).replace(tzinfo=None)
        return value

    def process_result_value(self, value, dialect):  # noqa: D
        if value is not None:
            value = value.replace(tzinfo=datetime.timezone.utc)
        return value


class FrameRecord(Base):

    __tablename__ = 'frame_records'

    """Processing state of one frame in one pipeline stage"""
    record_id = Column(Integer, Sequence('record_id'), primary_key=True)

    sequence_id = Column(String(255), nullable=False)
    frame = Column(Integer, nullable=False)
    # one of STAGES
    stage = Column(String(31), nullable=False)

    # Transition of states: queued -> processing -> completed/failed,
    # queued -> skipped when the run is interrupted
    task_state = Column(Enum(TaskState))
    # final energy of a fitted frame
    energy = Column(Float)
    # serialized error message, if it failed
    error = Column(String())

    start_date = Column(TZDateTime)
    end_date = Column(TZDateTime)

    @staticmethod
    def _datetime_to_str(dt):
        return dt.strftime("%Y-%m-%d %H:%M:%S") if dt else None

    def to_dict(self):
        return {
            'record_id': self.record_id,
            'sequence_id': self.sequence_id,
            'frame': self.frame,
            'stage': self.stage,
            'task_state': self.task_state.name if self.task_state else None,
            'energy': self.energy,
            'error': self.error,
            'start_date': self._datetime_to_str(self.start_date),
            'end_date': self._datetime_to_str(self.end_date),
        }

    def __repr__(self):
        return "<FrameRecord(sequence_id='{}', frame={}, stage='{}', " \
               "task_state='{}')>".format(self.sequence_id, self.frame,
                                          self.stage, self.task_state)


class SchemaVersion(Base):

    __tablename__ = 'schema_version'

    schema = Column(String(255), primary_key=True,
                    default=constants.RUN_DB_SCHEMA_NAME)
    schema_version = Column(Integer,
                            default=constants.RUN_DB_SCHEMA_VERSION)


def create_all(engine):
    Base.metadata.create_all(bind=engine)
