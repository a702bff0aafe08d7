"""Relative depth sidecars: 16-bit single-channel PNGs, min-max normalized.

Backends:

* ``monocular`` — a pretrained monocular depth model (loaded lazily via
  torch hub); needs downloadable weights.
* ``heuristic`` — portrait-prior pseudo-depth: a radial dome centered on
  the brightest blob plus smoothed luminance. It satisfies the producer
  contract (full 16-bit range, matching dimensions) so the engine's
  geometry stage has plausible gradients to work with offline.

Contract: every written depth PNG spans the full range (min 0, max 65535).
Images whose depth field degenerates to a constant are flagged instead.
"""

import os

import cv2
import numpy as np

from .common import AdapterError, list_images, luma_of, read_rgb


def heuristic_depth(img: np.ndarray) -> np.ndarray:
    """Pseudo relative depth in [0, 1] (1 = near), portrait prior."""
    h, w = img.shape[:2]
    y = luma_of(img)
    smooth = cv2.GaussianBlur(y, (0, 0), sigmaX=max(2.0, 0.04 * min(h, w)))
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    weights = smooth - smooth.min() + 1e-9
    cx = float((xs * weights).sum() / weights.sum())
    cy = float((ys * weights).sum() / weights.sum())
    r2 = ((xs - cx) / (0.6 * w)) ** 2 + ((ys - cy) / (0.6 * h)) ** 2
    dome = np.clip(1.0 - r2, 0.0, 1.0)
    return 0.65 * dome + 0.35 * (smooth - smooth.min()) / (np.ptp(smooth) + 1e-9)


class MonocularDepth:
    """Lazy wrapper for a pretrained monocular depth checkpoint."""

    def __init__(self, model_name: str):
        self.model_name = model_name
        raise AdapterError(
            f"monocular backend for {model_name!r} requires downloadable "
            "weights; use --backend heuristic in offline environments"
        )


def estimate_depth(images_dir: str, depth_dir: str, backend: str = "heuristic",
                   model_name: str = "midas"):
    """Write one 16-bit depth PNG per image; yield one sidecar row each."""
    if backend == "monocular":
        MonocularDepth(model_name)
    elif backend != "heuristic":
        raise AdapterError(f"unknown depth backend {backend!r}")
    os.makedirs(depth_dir, exist_ok=True)
    for image_id, path in list_images(images_dir):
        img = read_rgb(path)
        depth = heuristic_depth(img)
        span = float(depth.max() - depth.min())
        if span < 1e-9:
            yield {
                "image_id": image_id,
                "depth_path": None,
                "failed": True,
                "backend": "heuristic-portrait-prior/v1",
            }
            continue
        normalized = (depth - depth.min()) / span
        u16 = np.round(normalized * 65535.0).astype(np.uint16)
        depth_path = os.path.join(depth_dir, image_id + ".png")
        cv2.imwrite(depth_path, u16)
        yield {
            "image_id": image_id,
            "depth_path": depth_path,
            "failed": False,
            "backend": "heuristic-portrait-prior/v1",
        }
