"""Output and stage-tracking helpers."""
from .output_handler import OutputHandler
from .stage_tracker import PipelineStage, StageStatus, StageTracker

__all__ = ["OutputHandler", "PipelineStage", "StageStatus", "StageTracker"]
