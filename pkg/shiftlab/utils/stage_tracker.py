"""
Stage tracking for multi-step pipeline runs.
"""
import logging
from contextlib import contextmanager
from datetime import datetime
from enum import Enum
from typing import Dict, Iterator, List, Union

logger = logging.getLogger(__name__)


class StageStatus(Enum):
    """Stage entry status options."""
    SUCCESS = "success"
    ERROR = "error"
    IN_PROGRESS = "in_progress"
    SKIPPED = "skipped"


class PipelineStage(Enum):
    """Stages of the coexistence pipeline."""
    EIGENPROBLEM = "Eigenproblem"
    EXPANSIVE_POINT = "Expansive Fixed Point"
    CONJUGACY = "Koenigs Conjugacy"
    PANTOGRAPH_FORM = "Pantograph Form"
    W_SEQUENCE = "W Sequence"
    OMEGA_BOUND = "Omega Bound"
    CONTRACTIVE_POINT = "Contractive Point"
    ORBIT_LABELS = "Orbit Labels"
    ANALYTIC_CONTROL = "Analytic Control"
    PROCESS_COMPLETE = "Process Complete"


StageLike = Union[PipelineStage, str]


class StageTracker:
    """Records the status of each stage of one run, in order."""

    def __init__(self, run_id: str):
        """
        Args:
            run_id: label of the run, used only in log messages
        """
        self.run_id = run_id
        self.start_time = datetime.now()
        self._entries: List[Dict[str, str]] = []

    def add_entry(self, stage: StageLike, status: StageStatus, error_message: str = "") -> None:
        stage_name = stage.value if isinstance(stage, PipelineStage) else str(stage)
        self._entries.append({
            "stage": stage_name,
            "status": status.value,
            "errorMessage": error_message,
        })
        if status is StageStatus.ERROR:
            logger.error(f"[{self.run_id}] {stage_name} failed: {error_message}")
        else:
            logger.info(f"[{self.run_id}] {stage_name} - {status.value}")

    def mark_stage_in_progress(self, stage: StageLike) -> None:
        self.add_entry(stage, StageStatus.IN_PROGRESS)

    def mark_stage_success(self, stage: StageLike, message: str = "") -> None:
        self.add_entry(stage, StageStatus.SUCCESS, message)

    def mark_stage_error(self, stage: StageLike, error_message: str) -> None:
        self.add_entry(stage, StageStatus.ERROR, error_message)

    def mark_stage_skipped(self, stage: StageLike, reason: str) -> None:
        self.add_entry(stage, StageStatus.SKIPPED, reason)

    @contextmanager
    def stage(self, stage: StageLike) -> Iterator[None]:
        """Mark `stage` in progress, then success, or error if the block raises."""
        self.mark_stage_in_progress(stage)
        try:
            yield
        except Exception as e:
            self.mark_stage_error(stage, f"{type(e).__name__}: {e}")
            raise
        self.mark_stage_success(stage)

    def get_current_timeline(self) -> List[Dict[str, str]]:
        """Entries without the in-progress markers that were later resolved."""
        resolved = []
        for i, entry in enumerate(self._entries):
            if entry["status"] == StageStatus.IN_PROGRESS.value and any(
                later["stage"] == entry["stage"] for later in self._entries[i + 1:]
            ):
                continue
            resolved.append(dict(entry))
        return resolved

    def get_processing_duration(self) -> float:
        """Total processing duration in seconds."""
        return (datetime.now() - self.start_time).total_seconds()

    def complete_processing(self, success: bool = True, final_message: str = "") -> None:
        status = StageStatus.SUCCESS if success else StageStatus.ERROR
        self.add_entry(PipelineStage.PROCESS_COMPLETE, status, final_message)
        logger.info(f"Run {self.run_id} completed in {self.get_processing_duration():.2f} seconds")
