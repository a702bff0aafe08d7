"""Lighting-quality scoring: one row of per-prompt similarities per image.

Two backends:

* ``clip`` — cosine similarities from a pretrained image-text encoder
  (ViT-B/32 class by default). Needs downloadable weights.
* ``heuristic`` — a dependency-free stand-in that scores exposure quality
  from luminance statistics and maps it into the similarity range the
  engine's threshold expects. Useful for offline runs and fixtures; the
  absolute threshold is only meaningful for the encoder a threshold was
  calibrated against, so the backend is always recorded in the row.
"""

import numpy as np

from .common import AdapterError, list_images, luma_of, read_rgb, stable_hash64

DEFAULT_PROMPTS = (
    "beautiful lighting",
    "professional lighting",
    "well lit face",
    "bright and clear lighting",
    "soft studio lighting",
    "evenly lit portrait",
    "clear natural light",
)

DEFAULT_CLIP_MODEL = "openai/clip-vit-base-patch32"


def heuristic_quality(img: np.ndarray) -> float:
    """Exposure quality in [0, 1] from luminance statistics.

    Rewards a bright, centered exposure with few crushed shadows or blown
    highlights; penalizes dark and low-contrast frames. Deterministic.
    """
    y = luma_of(img)
    mean = float(y.mean())
    shadow_clip = float((y < 0.08).mean())
    highlight_clip = float((y > 0.97).mean())
    contrast = float(y.std())
    brightness_term = np.exp(-(((mean - 0.55) / 0.25) ** 2))
    contrast_term = np.clip(contrast / 0.18, 0.0, 1.0)
    clip_penalty = np.clip(1.0 - 2.5 * shadow_clip - 2.5 * highlight_clip, 0.0, 1.0)
    return float(np.clip(0.6 * brightness_term + 0.4 * contrast_term, 0.0, 1.0) * clip_penalty)


def heuristic_prompt_scores(img: np.ndarray, prompts) -> list:
    """Map quality into a per-prompt similarity-like vector.

    The mean equals the quality-mapped base score; per-prompt offsets are
    deterministic in the prompt text and sum to zero.
    """
    base = 0.14 + 0.16 * heuristic_quality(img)
    offsets = []
    for prompt in prompts:
        h = stable_hash64(prompt.encode("utf-8"))
        offsets.append(((h >> 16) % 1000) / 1000.0 - 0.5)
    mean_off = sum(offsets) / len(offsets)
    return [round(base + 0.004 * (o - mean_off), 6) for o in offsets]


class ClipScorer:
    """Lazy wrapper around a pretrained image-text encoder."""

    def __init__(self, model_name: str = DEFAULT_CLIP_MODEL):
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise AdapterError(
                "clip backend needs torch + transformers; use --backend heuristic"
            ) from exc
        try:
            self.model = CLIPModel.from_pretrained(model_name)
            self.processor = CLIPProcessor.from_pretrained(model_name)
        except Exception as exc:
            raise AdapterError(
                f"cannot load weights for {model_name!r} (offline?); "
                "use --backend heuristic"
            ) from exc
        self.model.eval()
        self.model_name = model_name

    def prompt_scores(self, img: np.ndarray, prompts) -> list:
        import torch
        from PIL import Image

        pil = Image.fromarray((img * 255.0).astype(np.uint8))
        inputs = self.processor(
            text=list(prompts), images=pil, return_tensors="pt", padding=True
        )
        with torch.no_grad():
            out = self.model(**inputs)
        image_emb = out.image_embeds / out.image_embeds.norm(dim=-1, keepdim=True)
        text_emb = out.text_embeds / out.text_embeds.norm(dim=-1, keepdim=True)
        sims = (image_emb @ text_emb.T).squeeze(0)
        return [float(s) for s in sims]


def score_lighting(images_dir: str, prompts=DEFAULT_PROMPTS, backend: str = "heuristic",
                   model_name: str = DEFAULT_CLIP_MODEL):
    """Yield one score row per image in the directory."""
    prompts = tuple(prompts)
    if not prompts:
        raise AdapterError("at least one prompt required")
    scorer = None
    if backend == "clip":
        scorer = ClipScorer(model_name)
    elif backend != "heuristic":
        raise AdapterError(f"unknown score backend {backend!r}")
    for image_id, path in list_images(images_dir):
        img = read_rgb(path)
        if scorer is not None:
            scores = scorer.prompt_scores(img, prompts)
            meta = {"backend": "clip", "model": scorer.model_name}
        else:
            scores = heuristic_prompt_scores(img, prompts)
            meta = {"backend": "heuristic-luminance/v1", "model": None}
        yield {"image_id": image_id, "prompt_scores": scores, **meta}
