"""Skeleton-based action recognition with jointly learned spatial and
temporal attention over a stacked LSTM, trained by a staged schedule.

Everything runs on plain float64 numpy through a small reverse-mode
autodiff engine; no deep-learning framework is involved.
"""

from .autodiff import Tensor, backward, grad_check
from .config import RunConfig, make_config, parse_config_file
from .data import (
    SkeletonSequence,
    center_normalize,
    gen_synthetic,
    load_generic,
    load_sbu,
    save_generic,
    smooth,
    split_folds,
)
from .errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    CorruptionError,
    DataError,
    DimensionError,
    LayoutError,
    NumericError,
    ParseError,
    StaLstmError,
    VersionError,
)
from .losses import LossConfig, cross_entropy, l1_penalty, spatial_reg, temporal_reg, total_loss
from .checkpoint import load_checkpoint, save_checkpoint
from .model import AttentionTrace, ModelShape, STAModel, forward, predict, zero_model
from .training import (
    AdamState,
    StageSpec,
    TrainPlan,
    TrainResult,
    adam_step,
    build_plan,
    init_params,
    joint_train,
    run_stage,
)

__version__ = "0.1.0"

__all__ = [
    "Tensor",
    "backward",
    "grad_check",
    "RunConfig",
    "make_config",
    "parse_config_file",
    "SkeletonSequence",
    "center_normalize",
    "gen_synthetic",
    "load_generic",
    "load_sbu",
    "save_generic",
    "smooth",
    "split_folds",
    "StaLstmError",
    "ContractError",
    "DimensionError",
    "NumericError",
    "ParseError",
    "DataError",
    "LayoutError",
    "ConfigError",
    "CheckpointError",
    "CorruptionError",
    "VersionError",
    "LossConfig",
    "cross_entropy",
    "spatial_reg",
    "temporal_reg",
    "l1_penalty",
    "total_loss",
    "load_checkpoint",
    "save_checkpoint",
    "AttentionTrace",
    "ModelShape",
    "STAModel",
    "forward",
    "predict",
    "zero_model",
    "AdamState",
    "StageSpec",
    "TrainPlan",
    "TrainResult",
    "adam_step",
    "build_plan",
    "init_params",
    "joint_train",
    "run_stage",
    "__version__",
]
