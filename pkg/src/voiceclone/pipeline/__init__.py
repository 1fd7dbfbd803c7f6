"""Three-stage orchestration: multi-speaker training, target-speaker
adaptation, and synthesis, plus configuration and checkpointing."""

from voiceclone.pipeline.checkpoint import (
    CheckpointPayload,
    load_checkpoint,
    load_model,
    save_checkpoint,
)
from voiceclone.pipeline.config import PipelineConfig, load_config
from voiceclone.pipeline.records import RunRecord
from voiceclone.pipeline.stages import (
    run_stage1_train,
    run_stage2_adapt,
    run_stage3_synthesize,
)

__all__ = [
    "CheckpointPayload",
    "PipelineConfig",
    "RunRecord",
    "load_checkpoint",
    "load_config",
    "load_model",
    "run_stage1_train",
    "run_stage2_adapt",
    "run_stage3_synthesize",
    "save_checkpoint",
]
