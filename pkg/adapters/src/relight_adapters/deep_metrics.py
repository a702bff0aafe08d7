"""Per-image evaluation metric sidecars: LPIPS, text-image score, identity.

Backends:

* ``neural`` — the real metric networks (perceptual distance, image-text
  encoder, face-recognition embeddings); all need downloadable weights.
* ``proxy`` — deterministic classical stand-ins with the same signatures
  and identity behavior (equal images give distance 0 / similarity 1):

  - lpips proxy: mean absolute difference of luma across a blur pyramid
    plus a gradient-difference term, in [0, ~1].
  - clip proxy: cosine similarity between coarse image statistics and a
    bag-of-words hash of the instruction; only ordering-free smoke value.
  - identity proxy: cosine similarity of mean-centered 32x32 grayscale
    thumbnails, in [-1, 1].

Proxy rows are labeled in metadata; they exercise the engine's metric
ingestion surfaces, not the reported metric semantics.
"""

import os

import cv2
import numpy as np

from .common import AdapterError, luma_of, read_rgb, stable_hash64


def lpips_proxy(a: np.ndarray, b: np.ndarray) -> float:
    ya, yb = luma_of(a), luma_of(b)
    total = np.abs(ya - yb).mean()
    for sigma in (2.0, 8.0):
        total += np.abs(
            cv2.GaussianBlur(ya, (0, 0), sigma) - cv2.GaussianBlur(yb, (0, 0), sigma)
        ).mean()
    ga = np.abs(np.gradient(ya, axis=0)) + np.abs(np.gradient(ya, axis=1))
    gb = np.abs(np.gradient(yb, axis=0)) + np.abs(np.gradient(yb, axis=1))
    total += np.abs(ga - gb).mean()
    return float(total / 4.0)


def identity_proxy(a: np.ndarray, b: np.ndarray) -> float:
    def embed(img):
        thumb = cv2.resize(luma_of(img), (32, 32), interpolation=cv2.INTER_AREA).ravel()
        thumb = thumb - thumb.mean()
        norm = np.linalg.norm(thumb)
        return thumb / norm if norm > 1e-12 else thumb
    ea, eb = embed(a), embed(b)
    return float(np.clip(ea @ eb, -1.0, 1.0))


def clip_score_proxy(img: np.ndarray, text: str) -> float:
    stats = np.array(
        [img.mean(), img.std(), luma_of(img).mean(), luma_of(img).std()] +
        [img[:, :, c].mean() for c in range(3)]
    )
    h = stable_hash64(text.lower().encode("utf-8"))
    text_vec = np.array([((h >> (8 * i)) & 0xFF) / 255.0 for i in range(7)])
    sa = stats - stats.mean()
    sb = text_vec - text_vec.mean()
    denom = np.linalg.norm(sa) * np.linalg.norm(sb)
    return float(sa @ sb / denom) if denom > 1e-12 else 0.0


def _load_manifest_rows(manifest_path: str):
    import json

    rows = []
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def deep_metrics(manifest_path: str, predictions_dir: str, data_root: str = None,
                 split: str = "test", backend: str = "proxy"):
    """Compute per-image metric rows for every manifest row in the split.

    Returns (metrics, missing): ``metrics`` maps metric name -> list of
    {image_id, value} rows; ``missing`` lists flagged rows for absent
    prediction files.
    """
    if backend == "neural":
        raise AdapterError(
            "neural metric backends require downloadable weights; use --backend proxy"
        )
    if backend != "proxy":
        raise AdapterError(f"unknown metrics backend {backend!r}")
    rows = [r for r in _load_manifest_rows(manifest_path) if r.get("split") == split]
    root = data_root or os.path.dirname(os.path.abspath(manifest_path))
    metrics = {"lpips": [], "clip": [], "identity": []}
    missing = []
    for row in rows:
        image_id = row["image_id"]
        pred_path = os.path.join(predictions_dir, image_id + ".png")
        if not os.path.isfile(pred_path):
            missing.append({"image_id": image_id, "missing": True})
            continue
        gt = read_rgb(os.path.join(root, row["output_path"]))
        pred = read_rgb(pred_path)
        if pred.shape != gt.shape:
            pred = cv2.resize(pred, (gt.shape[1], gt.shape[0]), interpolation=cv2.INTER_LINEAR)
        meta = {"backend": "proxy/v1"}
        metrics["lpips"].append(
            {"image_id": image_id, "value": lpips_proxy(gt, pred), **meta}
        )
        metrics["clip"].append(
            {"image_id": image_id, "value": clip_score_proxy(pred, row["instruction"]), **meta}
        )
        metrics["identity"].append(
            {"image_id": image_id, "value": identity_proxy(gt, pred), **meta}
        )
    return metrics, missing
