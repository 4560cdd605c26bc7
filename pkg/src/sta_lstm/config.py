"""Run configuration: dataclass, key=value file parsing, profiles.

Config files hold one ``key = value`` pair per line; ``#`` starts a comment.
Unknown keys are errors. A ``profile`` key (sbu or ntu) applies that
dataset's term weights, batch size, and smoothing defaults before the file's
explicit keys, which in turn are overridden by command-line flags.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .losses import LossConfig

__all__ = ["RunConfig", "VARIANTS", "PROFILES", "parse_config_file", "make_config"]

VARIANTS = ("lstm", "sa", "ta", "sta")
FORMATS = ("generic", "sbu")

PROFILES = {
    "sbu": {"lambda1": 0.001, "lambda2": 0.0001, "lambda3": 0.0005, "batch_size": 8, "smooth_window": 5},
    "ntu": {"lambda1": 0.01, "lambda2": 0.001, "lambda3": 0.00005, "batch_size": 256, "smooth_window": 1},
}


@dataclass
class RunConfig:
    """Everything a training or evaluation run needs."""

    variant: str = "sta"
    spatial_reg: bool = True
    temporal_reg: bool = True
    l1_reg: bool = True
    lambda1: float = 0.001
    lambda2: float = 0.0001
    lambda3: float = 0.0005
    hidden: int = 100
    attn_hidden: int | None = None
    main_layers: int = 3
    dropout: float = 0.5
    batch_size: int = 8
    n1: int = 1000
    n2: int = 500
    seed: int = 0
    data: str = ""
    format: str = "generic"
    fold: str = "none"  # "none", "all", or a fold index
    out: str = "out"
    smooth_window: int = 1
    center: bool = False
    clip_norm: float = 5.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got '{self.variant}'")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got '{self.format}'")
        if self.hidden < 1 or self.main_layers < 1 or self.batch_size < 1:
            raise ConfigError("hidden, main_layers, and batch_size must be positive")
        if self.attn_hidden is not None and self.attn_hidden < 1:
            raise ConfigError("attn_hidden must be positive when given")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        if self.n1 < 0 or self.n2 < 0:
            raise ConfigError("stage budgets must be non-negative")
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ConfigError("term weights must be non-negative")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ConfigError("smooth_window must be odd and positive")
        if self.clip_norm < 0:
            raise ConfigError("clip_norm must be non-negative (0 disables clipping)")
        self.fold = str(self.fold)
        if self.fold not in ("none", "all") and not self.fold.isdigit():
            raise ConfigError(f"fold must be 'none', 'all', or a fold index, got '{self.fold}'")

    # The variant pins the bypass switches; they are not independently settable.
    @property
    def spatial_bypass(self) -> bool:
        return self.variant in ("lstm", "ta")

    @property
    def temporal_bypass(self) -> bool:
        return self.variant in ("lstm", "sa")

    def fold_index(self) -> int | None:
        return int(self.fold) if self.fold.isdigit() else None

    def loss_config(self) -> LossConfig:
        """Regularizers on bypassed gates are dropped along with the gate."""
        return LossConfig(
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            lambda3=self.lambda3,
            spatial_term=self.spatial_reg and not self.spatial_bypass,
            temporal_term=self.temporal_reg and not self.temporal_bypass,
            l1_term=self.l1_reg,
        )


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_BOOL_WORDS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _convert(key: str, raw: str):
    f = _FIELDS[key]
    raw = raw.strip()
    if f.type in ("bool",):
        if raw.lower() not in _BOOL_WORDS:
            raise ConfigError(f"{key}: expected a boolean, got '{raw}'")
        return _BOOL_WORDS[raw.lower()]
    if f.type in ("int",):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got '{raw}'") from None
    if f.type in ("int | None",):
        if raw.lower() == "none":
            return None
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer or 'none', got '{raw}'") from None
    if f.type in ("float",):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got '{raw}'") from None
    return raw


def parse_config_file(path) -> dict:
    """Read a key=value file into typed values; unknown keys are errors."""
    path = Path(path)
    values: dict = {}
    profile = None
    for ln, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value', got '{line}'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key == "profile":
            if raw not in PROFILES:
                raise ConfigError(f"{path}:{ln}: unknown profile '{raw}' (choose from {sorted(PROFILES)})")
            profile = raw
            continue
        if key not in _FIELDS:
            raise ConfigError(f"{path}:{ln}: unknown configuration key '{key}'")
        try:
            values[key] = _convert(key, raw)
        except ConfigError as e:
            raise ConfigError(f"{path}:{ln}: {e}") from None
    if profile is not None:
        merged = dict(PROFILES[profile])
        merged.update(values)
        values = merged
    return values


def make_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the config file, then explicit overrides."""
    values: dict = {}
    if path is not None:
        values.update(parse_config_file(path))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown configuration key '{key}'")
        values[key] = val
    return RunConfig(**values)
