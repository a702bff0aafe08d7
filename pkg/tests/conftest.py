"""Shared fixtures: synthetic portraits and an on-disk dataset builder.

All fixture content is generated deterministically from fixed seeds, so
every test (including byte-identity checks) is reproducible without any
committed binary assets or neural models.
"""

import json
import os

import numpy as np
import pytest

from relight_engine import DepthMap, ImageRGB, Mask, MsrConfig, PipelineConfig
from relight_engine.imagecore import save_depth, save_image, save_mask


def synth_portrait(seed: int, size: int = 128):
    """A well-lit portrait-like image with matching mask and depth dome."""
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:size, 0:size] / size
    cx = 0.5 + rng.uniform(-0.05, 0.05)
    cy = 0.45 + rng.uniform(-0.05, 0.05)
    rx = rng.uniform(0.24, 0.3)
    ry = rng.uniform(0.33, 0.4)
    d2 = ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2
    face = d2 < 1.0
    skin = np.array([0.85, 0.65, 0.52]) * rng.uniform(0.8, 1.05)
    background = np.array([0.3, 0.38, 0.5]) * rng.uniform(0.7, 1.1) + 0.2 * xs[..., None]
    img = background * np.ones((size, size, 3))
    shading = 0.7 + 0.3 * np.clip(1.0 - d2, 0.0, 1.0)
    img = np.where(face[..., None], skin * shading[..., None], img)
    img += rng.normal(0.0, 0.012, img.shape)
    img = np.clip(img, 0.0, 1.0).astype(np.float32)
    mask = face.astype(np.float32)
    depth = np.clip(1.0 - 0.5 * d2, 0.0, 1.0) * mask + 0.15 * (1.0 - mask)
    return ImageRGB(img), Mask(mask), DepthMap(depth.astype(np.float32))


def grayscale_image(value: float, size: int = 64) -> ImageRGB:
    return ImageRGB(np.full((size, size, 3), value, dtype=np.float32))


def full_mask(size: int = 64) -> Mask:
    return Mask(np.ones((size, size), dtype=np.float32))


FAST_MSR = MsrConfig(scales=(1.5, 4.0, 10.0))

INSTRUCTION_TEMPLATES = (
    "soft natural daylight illuminating the face from the front-left",
    "dramatic side lighting casting deep shadows across half the face",
    "warm golden hour glow lighting the subject evenly",
    "bright studio lighting with gentle falloff toward the edges",
    "cool overcast light wrapping softly around the face",
)


def write_fixture_dataset(root, image_ids, reject_ids=(), size=128, score_seed=7):
    """Write images plus all sidecars for the given ids under ``root``.

    ``image_ids`` get mean scores strictly above 0.21; ``reject_ids`` get
    scores at or below it (one exactly at the threshold when possible).
    """
    images_dir = os.path.join(root, "images")
    masks_dir = os.path.join(root, "sidecars", "masks")
    depth_dir = os.path.join(root, "sidecars", "depth")
    os.makedirs(images_dir, exist_ok=True)
    os.makedirs(masks_dir, exist_ok=True)
    os.makedirs(depth_dir, exist_ok=True)

    rng = np.random.default_rng(score_seed)
    score_rows = []
    instruction_rows = []
    for i, image_id in enumerate(sorted(image_ids)):
        img, mask, depth = synth_portrait(1000 + i, size=size)
        save_image(img, os.path.join(images_dir, image_id + ".png"))
        save_mask(mask, os.path.join(masks_dir, image_id + ".png"))
        save_depth(depth, os.path.join(depth_dir, image_id + ".png"))
        base = rng.uniform(0.215, 0.3)
        scores = np.clip(base + rng.normal(0.0, 0.004, 7), 0.211, 0.4)
        score_rows.append({"image_id": image_id, "prompt_scores": [float(s) for s in scores]})
        instruction_rows.append(
            {
                "image_id": image_id,
                "instruction": INSTRUCTION_TEMPLATES[i % len(INSTRUCTION_TEMPLATES)],
            }
        )
    for j, image_id in enumerate(sorted(reject_ids)):
        value = 0.21 if j == 0 else float(rng.uniform(0.05, 0.2))
        score_rows.append({"image_id": image_id, "prompt_scores": [value] * 7})

    with open(os.path.join(root, "sidecars", "scores.jsonl"), "w") as fh:
        for row in score_rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    with open(os.path.join(root, "sidecars", "instructions.jsonl"), "w") as fh:
        for row in instruction_rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return root


def fixture_config(root, out_name="out", **overrides) -> PipelineConfig:
    defaults = dict(
        images_dir=os.path.join(root, "images"),
        scores_path=os.path.join(root, "sidecars", "scores.jsonl"),
        masks_dir=os.path.join(root, "sidecars", "masks"),
        depth_dir=os.path.join(root, "sidecars", "depth"),
        instructions_path=os.path.join(root, "sidecars", "instructions.jsonl"),
        output_dir=os.path.join(root, out_name),
        target_resolution=128,
        split_counts=(40, 5, 5),
        global_seed=1234,
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults)


@pytest.fixture(scope="session")
def fixture_dataset(tmp_path_factory):
    """50 kept + 10 rejected synthetic portraits with committed-style sidecars."""
    root = str(tmp_path_factory.mktemp("dataset"))
    kept = [f"img_{i:04d}" for i in range(50)]
    rejected = [f"rej_{i:04d}" for i in range(10)]
    write_fixture_dataset(root, kept, rejected, size=128)
    return root
