"""File-based pipeline: config parsing, stage runners and manifests."""

from .config import ConfigError, PipelineConfig
from .manifest import StaleArtifactError
from .stages import STAGES, StageError, run_all, run_stage
