"""Triplet records, stage errors, and the line-delimited JSON sidecar formats.

Every inter-process artifact is line-delimited JSON with canonical
serialization (sorted keys, compact separators), so manifests written by
any worker count compare byte-for-byte after the final id-sorted rewrite.

Schema version history:
  1 - initial manifest layout (image_id, input_path, output_path,
      instruction, split, clip_score, seed, params{alpha, light_direction,
      ambient, pattern_kind, opacity, blur_sigma}, schema_version).
"""

import json
import math
import os
from dataclasses import dataclass

from .errors import SidecarFormatError

SCHEMA_VERSION = 1

STAGES = ("load", "filter", "mask", "albedo", "degrade", "instruction", "write")

SPLITS_WITH_UNASSIGNED = ("train", "val", "test", "unassigned")


@dataclass(frozen=True)
class DegradationParams:
    """Sampled degradation knobs for one image, logged for reproducibility."""

    alpha: float
    light_direction: tuple
    ambient: float
    pattern_kind: str
    opacity: float
    blur_sigma: float

    def __post_init__(self):
        direction = tuple(float(c) for c in self.light_direction)
        if len(direction) != 3:
            raise ValueError("light_direction must be a 3-vector")
        object.__setattr__(self, "light_direction", direction)

    def to_json_obj(self) -> dict:
        return {
            "alpha": self.alpha,
            "light_direction": list(self.light_direction),
            "ambient": self.ambient,
            "pattern_kind": self.pattern_kind,
            "opacity": self.opacity,
            "blur_sigma": self.blur_sigma,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "DegradationParams":
        return cls(
            alpha=float(obj["alpha"]),
            light_direction=tuple(obj["light_direction"]),
            ambient=float(obj["ambient"]),
            pattern_kind=str(obj["pattern_kind"]),
            opacity=float(obj["opacity"]),
            blur_sigma=float(obj["blur_sigma"]),
        )


@dataclass(frozen=True)
class TripletRecord:
    """One manifest row binding degraded input, instruction, and ground truth."""

    image_id: str
    input_path: str
    output_path: str
    instruction: str
    split: str
    clip_score: float
    seed: int
    params: DegradationParams

    def __post_init__(self):
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        if not self.instruction or "\n" in self.instruction:
            raise ValueError("instruction must be a non-empty single line")
        if not math.isfinite(self.clip_score):
            raise ValueError("clip_score must be finite")

    def to_json_obj(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "image_id": self.image_id,
            "input_path": self.input_path,
            "output_path": self.output_path,
            "instruction": self.instruction,
            "split": self.split,
            "clip_score": self.clip_score,
            "seed": self.seed,
            "params": self.params.to_json_obj(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TripletRecord":
        version = obj.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SidecarFormatError(f"unsupported manifest schema_version {version!r}")
        try:
            return cls(
                image_id=str(obj["image_id"]),
                input_path=str(obj["input_path"]),
                output_path=str(obj["output_path"]),
                instruction=str(obj["instruction"]),
                split=str(obj["split"]),
                clip_score=float(obj["clip_score"]),
                seed=int(obj["seed"]),
                params=DegradationParams.from_json_obj(obj["params"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SidecarFormatError(f"malformed manifest row: {exc}") from exc


@dataclass(frozen=True)
class StageError:
    """A per-image failure, tagged with the pipeline stage that raised it."""

    image_id: str
    stage: str
    message: str

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")

    def to_json_obj(self) -> dict:
        return {"image_id": self.image_id, "stage": self.stage, "message": self.message}


def dumps_canonical(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_ldjson(path: str, objs) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(dumps_canonical(obj))
            fh.write("\n")
    os.replace(tmp, path)


def read_ldjson(path: str, skip_partial_tail: bool = False):
    """Parse line-delimited JSON; optionally tolerate a truncated last line."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    for i, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            if skip_partial_tail and i == len(lines) - 1:
                continue
            raise SidecarFormatError(f"{path}:{i + 1}: invalid JSON: {exc}") from exc
    return rows


def write_manifest(records, path: str) -> None:
    """Write the finalized manifest, sorted by image_id, atomically."""
    ordered = sorted(records, key=lambda r: r.image_id)
    write_ldjson(path, (r.to_json_obj() for r in ordered))


def read_manifest(path: str, skip_partial_tail: bool = False):
    records = []
    for obj in read_ldjson(path, skip_partial_tail=skip_partial_tail):
        try:
            records.append(TripletRecord.from_json_obj(obj))
        except SidecarFormatError:
            if skip_partial_tail:
                continue
            raise
    return records


def read_instructions(path: str) -> dict:
    """Sidecar rows {image_id, instruction} -> id -> instruction map."""
    out = {}
    for obj in read_ldjson(path):
        try:
            out[str(obj["image_id"])] = str(obj["instruction"])
        except (KeyError, TypeError) as exc:
            raise SidecarFormatError(f"{path}: malformed instruction row: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# JSON Schemas for every sidecar surface (draft 2020-12). Adapters validate
# their outputs against these; they are the documented wire contract.
# ---------------------------------------------------------------------------

SCORES_ROW_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "lighting score row",
    "type": "object",
    "required": ["image_id", "prompt_scores"],
    "properties": {
        "image_id": {"type": "string", "minLength": 1},
        "prompt_scores": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 1,
        },
    },
    "additionalProperties": True,
}

SPLITS_ROW_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "split assignment row",
    "type": "object",
    "required": ["image_id", "split"],
    "properties": {
        "image_id": {"type": "string", "minLength": 1},
        "split": {"enum": list(SPLITS_WITH_UNASSIGNED)},
    },
    "additionalProperties": False,
}

INSTRUCTIONS_ROW_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "instruction row",
    "type": "object",
    "required": ["image_id", "instruction"],
    "properties": {
        "image_id": {"type": "string", "minLength": 1},
        "instruction": {"type": "string", "minLength": 1, "maxLength": 300},
    },
    "additionalProperties": True,
}

METRIC_VALUE_ROW_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "external metric value row",
    "type": "object",
    "required": ["image_id", "value"],
    "properties": {
        "image_id": {"type": "string", "minLength": 1},
        "value": {"type": "number"},
    },
    "additionalProperties": True,
}

MANIFEST_ROW_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "triplet manifest row",
    "type": "object",
    "required": [
        "schema_version",
        "image_id",
        "input_path",
        "output_path",
        "instruction",
        "split",
        "clip_score",
        "seed",
        "params",
    ],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "image_id": {"type": "string", "minLength": 1},
        "input_path": {"type": "string"},
        "output_path": {"type": "string"},
        "instruction": {"type": "string", "minLength": 1, "maxLength": 300},
        "split": {"enum": ["train", "val", "test"]},
        "clip_score": {"type": "number"},
        "seed": {"type": "integer", "minimum": 0},
        "params": {
            "type": "object",
            "required": [
                "alpha",
                "light_direction",
                "ambient",
                "pattern_kind",
                "opacity",
                "blur_sigma",
            ],
            "properties": {
                "alpha": {"type": "number"},
                "light_direction": {
                    "type": "array",
                    "items": {"type": "number"},
                    "minItems": 3,
                    "maxItems": 3,
                },
                "ambient": {"type": "number"},
                "pattern_kind": {"type": "string"},
                "opacity": {"type": "number"},
                "blur_sigma": {"type": "number"},
            },
        },
    },
    "additionalProperties": False,
}
