from dataclasses import dataclass, field
from typing import Dict, List, Optional


@dataclass
class FrameTask:
    """Unit of work of a pipeline stage: some frames of one sequence.

    Attributes
    ----------
    sequence_id
        sequence the frames belong to
    frames
        frame indices handled by this task, in order
    tag
        the pipeline stage name
    data
        stage specific inputs and outputs. Stages report frames they could
        not process under 'frame_errors' (frame as str -> message)
    error
        serialized error in case the whole task failed
    """
    sequence_id: str
    frames: List[int] = field(default_factory=list)
    tag: Optional[str] = None
    data: dict = field(default_factory=dict)
    error: Optional[str] = None

    def __post_init__(self):
        self.frames = [int(f) for f in self.frames]

    @property
    def frame_errors(self) -> Dict[int, str]:
        return {int(f): message for f, message
                in self.data.get('frame_errors', {}).items()}

    @property
    def failed(self):
        return self.error is not None or bool(self.frame_errors)
