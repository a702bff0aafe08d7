"""Run configuration: thresholds, ranges, weights, paths, and seeding.

A config is a single JSON or TOML file; unknown keys are rejected so typos
fail loudly. All stochastic ranges live here and are logged per image via
the manifest, so a config plus a global seed pins an entire run.
"""

import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field

from .errors import ConfigError
from .filtering import DEFAULT_PROMPTS, DEFAULT_THRESHOLD
from .intrinsic import MsrConfig
from .relight import DEFAULT_AMBIENT_RANGE, DEFAULT_GRADIENT_SCALE
from .shadowgen import (
    DEFAULT_BLUR_SIGMA_RANGE,
    DEFAULT_OPACITY_RANGE,
    PatternKind,
)

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml


def _default_pattern_weights() -> dict:
    return {kind.value: 1.0 for kind in PatternKind}


@dataclass(frozen=True)
class PipelineConfig:
    images_dir: str = "images"
    scores_path: str = "sidecars/scores.jsonl"
    masks_dir: str = "sidecars/masks"
    depth_dir: str = "sidecars/depth"
    instructions_path: str = "sidecars/instructions.jsonl"
    output_dir: str = "out"

    threshold: float = DEFAULT_THRESHOLD
    target_resolution: int = 512
    prompts: tuple = DEFAULT_PROMPTS
    msr: MsrConfig = field(default_factory=MsrConfig)
    ambient_range: tuple = DEFAULT_AMBIENT_RANGE
    gradient_scale: float = DEFAULT_GRADIENT_SCALE
    pattern_weights: dict = field(default_factory=_default_pattern_weights)
    opacity_range: tuple = DEFAULT_OPACITY_RANGE
    blur_sigma_range: tuple = DEFAULT_BLUR_SIGMA_RANGE
    gray_level: float = 0.5
    split_counts: tuple = (10000, 1000, 1000)
    global_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "prompts", tuple(str(p) for p in self.prompts))
        object.__setattr__(self, "ambient_range", _pair(self.ambient_range, "ambient_range"))
        object.__setattr__(self, "opacity_range", _pair(self.opacity_range, "opacity_range"))
        object.__setattr__(
            self, "blur_sigma_range", _pair(self.blur_sigma_range, "blur_sigma_range")
        )
        object.__setattr__(self, "split_counts", tuple(int(c) for c in self.split_counts))
        object.__setattr__(self, "pattern_weights", dict(self.pattern_weights))
        self.validate()

    def validate(self) -> None:
        if not math.isfinite(self.threshold):
            raise ConfigError("threshold must be finite")
        if self.target_resolution < 64:
            raise ConfigError("target_resolution must be >= 64")
        if not self.prompts:
            raise ConfigError("prompts must be non-empty")
        for name, rng_pair, bound in (
            ("ambient_range", self.ambient_range, 1.0),
            ("opacity_range", self.opacity_range, 1.0),
        ):
            lo, hi = rng_pair
            if not (0.0 <= lo <= hi <= bound):
                raise ConfigError(f"{name} must satisfy 0 <= lo <= hi <= {bound}")
        lo, hi = self.blur_sigma_range
        if not (0.0 <= lo <= hi):
            raise ConfigError("blur_sigma_range must satisfy 0 <= lo <= hi")
        if not 0.0 <= self.gray_level <= 1.0:
            raise ConfigError("gray_level must be in [0, 1]")
        if self.gradient_scale <= 0.0:
            raise ConfigError("gradient_scale must be > 0")
        if len(self.split_counts) != 3 or min(self.split_counts) < 0:
            raise ConfigError("split_counts must be three non-negative integers")
        known = {kind.value for kind in PatternKind}
        unknown = set(self.pattern_weights) - known
        if unknown:
            raise ConfigError(f"unknown pattern kinds in weights: {sorted(unknown)}")
        if any(w < 0 for w in self.pattern_weights.values()):
            raise ConfigError("pattern weights must be non-negative")
        if sum(self.pattern_weights.values()) <= 0:
            raise ConfigError("pattern weights must have a positive sum")

    def pattern_weights_by_kind(self) -> dict:
        return {PatternKind(name): float(w) for name, w in self.pattern_weights.items()}

    def scaled_blur_sigma_range(self) -> tuple:
        """Blur range is specified at 512 px and scales with resolution."""
        factor = self.target_resolution / 512.0
        lo, hi = self.blur_sigma_range
        return (lo * factor, hi * factor)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["prompts"] = list(self.prompts)
        out["ambient_range"] = list(self.ambient_range)
        out["opacity_range"] = list(self.opacity_range)
        out["blur_sigma_range"] = list(self.blur_sigma_range)
        out["split_counts"] = list(self.split_counts)
        out["msr"] = {
            "scales": list(self.msr.scales),
            "weights": list(self.msr.weights),
            "epsilon": self.msr.epsilon,
            "norm_percentiles": list(self.msr.norm_percentiles),
            "blend_range": list(self.msr.blend_range),
        }
        return out


def _pair(value, name: str) -> tuple:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a (lo, hi) pair") from exc
    return (lo, hi)


_TOP_LEVEL_KEYS = {f.name for f in dataclasses.fields(PipelineConfig)}
_MSR_KEYS = {"scales", "weights", "epsilon", "norm_percentiles", "blend_range"}


def config_from_dict(raw: dict) -> PipelineConfig:
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(raw)
    if "msr" in kwargs:
        msr_raw = kwargs["msr"]
        if not isinstance(msr_raw, dict):
            raise ConfigError("msr must be a table/object")
        bad = set(msr_raw) - _MSR_KEYS
        if bad:
            raise ConfigError(f"unknown msr keys: {sorted(bad)}")
        try:
            kwargs["msr"] = MsrConfig(**msr_raw)
        except ValueError as exc:
            raise ConfigError(f"invalid msr config: {exc}") from exc
    try:
        return PipelineConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path: str) -> PipelineConfig:
    """Load a config file; format chosen by extension (.json or .toml)."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    ext = os.path.splitext(path)[1].lower()
    if ext == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    elif ext == ".toml":
        with open(path, "rb") as fh:
            raw = _toml.load(fh)
    else:
        raise ConfigError(f"config must be .json or .toml, got {ext!r}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table/object")
    return config_from_dict(raw)
