"""Shared plumbing for the sidecar adapters.

Adapters are pure producers: they read images, write sidecar files in the
engine's documented line-delimited JSON formats, and never mutate their
inputs. Every row carries backend metadata so a sidecar always records
what produced it.
"""

import json
import os

import cv2
import numpy as np

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")

LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


class AdapterError(Exception):
    pass


def list_images(images_dir: str):
    """Sorted (image_id, path) pairs for every supported image in a dir."""
    if not os.path.isdir(images_dir):
        raise AdapterError(f"not a directory: {images_dir}")
    out = []
    for name in sorted(os.listdir(images_dir)):
        stem, ext = os.path.splitext(name)
        if ext.lower() in IMAGE_EXTENSIONS:
            out.append((stem, os.path.join(images_dir, name)))
    return out


def read_rgb(path: str) -> np.ndarray:
    """Image as (H, W, 3) float64 RGB in [0, 1]."""
    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise AdapterError(f"cannot read image: {path}")
    if raw.dtype == np.uint16:
        data = raw.astype(np.float64) / 65535.0
    else:
        data = raw.astype(np.float64) / 255.0
    if data.ndim == 2:
        data = np.repeat(data[:, :, None], 3, axis=2)
    elif data.shape[2] == 4:
        data = data[:, :, :3]
    return data[:, :, ::-1].copy()


def luma_of(img: np.ndarray) -> np.ndarray:
    return img @ LUMA


def write_rows(path: str, rows) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")
    os.replace(tmp, path)


def read_rows(path: str):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def stable_hash64(data: bytes) -> int:
    """FNV-1a 64-bit; used to derive deterministic per-image choices."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h
