"""Fixtures: synthetic well-lit and degraded portraits written to disk."""

import os

import cv2
import numpy as np
import pytest


def portrait_array(seed: int, size: int = 128, well_lit: bool = True) -> np.ndarray:
    """A portrait-like RGB uint8 image; dark/occluded variant when not well lit."""
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:size, 0:size] / size
    cx = 0.5 + rng.uniform(-0.04, 0.04)
    cy = 0.45 + rng.uniform(-0.04, 0.04)
    d2 = ((xs - cx) / 0.27) ** 2 + ((ys - cy) / 0.37) ** 2
    face = d2 < 1.0
    skin = np.array([0.85, 0.66, 0.52]) * rng.uniform(0.9, 1.05)
    background = np.array([0.32, 0.4, 0.52]) + 0.15 * xs[..., None]
    img = background * np.ones((size, size, 3))
    shading = 0.75 + 0.25 * np.clip(1.0 - d2, 0.0, 1.0)
    img = np.where(face[..., None], skin * shading[..., None], img)
    img += rng.normal(0.0, 0.01, img.shape)
    if not well_lit:
        img *= rng.uniform(0.12, 0.3)  # heavy underexposure
        x0, y0 = rng.integers(0, size // 2, 2)
        img[y0 : y0 + size // 2, x0 : x0 + size // 2] *= 0.25  # occluding block
    img = np.clip(img, 0.0, 1.0)
    return (img * 255.0).astype(np.uint8)


def write_portraits(root, count=5, well_lit=True, prefix="img", size=128):
    os.makedirs(root, exist_ok=True)
    ids = []
    for i in range(count):
        image_id = f"{prefix}_{i:03d}"
        arr = portrait_array(seed=i + (0 if well_lit else 5000), size=size, well_lit=well_lit)
        cv2.imwrite(os.path.join(root, image_id + ".png"), arr[:, :, ::-1])
        ids.append(image_id)
    return ids


@pytest.fixture()
def sample_images(tmp_path):
    root = str(tmp_path / "images")
    ids = write_portraits(root, count=5, well_lit=True)
    return root, ids
