"""Lighting-quality gating and deterministic dataset splits.

Scores arrive as per-image lists of prompt similarities (produced upstream
by the scoring adapter); this module averages them, applies the strict
keep threshold, and partitions the kept ids into train/val/test with a
seeded, platform-independent shuffle.
"""

import math
from dataclasses import dataclass, field

from .errors import SidecarFormatError
from .rng import PortableRng

DEFAULT_THRESHOLD = 0.21

# The first four prompts are the classic lighting-quality phrasings; the
# last three are engine defaults in the same register (see README). All
# seven are configuration data and can be overridden.
DEFAULT_PROMPTS = (
    "beautiful lighting",
    "professional lighting",
    "well lit face",
    "bright and clear lighting",
    "soft studio lighting",
    "evenly lit portrait",
    "clear natural light",
)

SPLIT_NAMES = ("train", "val", "test")
UNASSIGNED = "unassigned"


def average_scores(prompt_scores) -> float:
    """Arithmetic mean of per-prompt similarity scores."""
    scores = [float(s) for s in prompt_scores]
    if not scores:
        raise ValueError("prompt_scores must be non-empty")
    if not all(math.isfinite(s) for s in scores):
        raise ValueError("prompt_scores must be finite")
    return sum(scores) / len(scores)


def passes_threshold(mean_score: float, threshold: float = DEFAULT_THRESHOLD) -> bool:
    """Strictly-greater-than comparison against the keep threshold."""
    return mean_score > threshold


@dataclass(frozen=True)
class FilterScore:
    """Per-image prompt similarities and their mean."""

    image_id: str
    prompt_scores: tuple
    mean_score: float = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "prompt_scores", tuple(float(s) for s in self.prompt_scores))
        if self.mean_score is None:
            object.__setattr__(self, "mean_score", average_scores(self.prompt_scores))

    def keep(self, threshold: float = DEFAULT_THRESHOLD) -> bool:
        return passes_threshold(self.mean_score, threshold)


@dataclass(frozen=True)
class SplitAssignment:
    image_id: str
    split: str

    def __post_init__(self):
        if self.split not in SPLIT_NAMES:
            raise ValueError(f"unknown split {self.split!r}")


def split_dataset(kept_ids, counts, seed: int):
    """Partition kept ids into train/val/test.

    The ids are sorted, shuffled with a Fisher-Yates pass driven by
    ``PortableRng(seed)``, and assigned to the three splits in order, so
    the result depends only on (seed, set of ids) - never on input order,
    platform, or worker count. Ids beyond the requested counts are left
    unassigned (see :func:`unassigned_ids`).
    """
    n_train, n_val, n_test = (int(c) for c in counts)
    if min(n_train, n_val, n_test) < 0:
        raise ValueError("split counts must be non-negative")
    ids = sorted(kept_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("kept_ids contains duplicates")
    total = n_train + n_val + n_test
    if total > len(ids):
        raise ValueError(
            f"requested {total} split slots but only {len(ids)} kept ids"
        )
    PortableRng(seed).shuffle(ids)
    out = []
    cursor = 0
    for name, count in zip(SPLIT_NAMES, (n_train, n_val, n_test)):
        for image_id in ids[cursor : cursor + count]:
            out.append(SplitAssignment(image_id, name))
        cursor += count
    return out


def unassigned_ids(kept_ids, assignments):
    """Kept ids that fell outside the requested split counts, sorted."""
    assigned = {a.image_id for a in assignments}
    return sorted(i for i in kept_ids if i not in assigned)


def score_from_row(obj, expected_count: int = None) -> FilterScore:
    """Build a FilterScore from one parsed sidecar row."""
    try:
        image_id = obj["image_id"]
        prompt_scores = obj["prompt_scores"]
    except (TypeError, KeyError) as exc:
        raise SidecarFormatError(f"score row missing field: {exc}") from exc
    if not isinstance(image_id, str) or not image_id:
        raise SidecarFormatError("score row image_id must be a non-empty string")
    if not isinstance(prompt_scores, (list, tuple)) or not prompt_scores:
        raise SidecarFormatError(f"score row for {image_id!r} has no prompt_scores")
    if expected_count is not None and len(prompt_scores) != expected_count:
        raise SidecarFormatError(
            f"score row for {image_id!r} has {len(prompt_scores)} prompt scores, "
            f"expected {expected_count}"
        )
    try:
        return FilterScore(image_id, prompt_scores)
    except (TypeError, ValueError) as exc:
        raise SidecarFormatError(f"score row for {image_id!r}: {exc}") from exc
