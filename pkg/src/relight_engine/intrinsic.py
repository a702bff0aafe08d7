"""Multi-Scale Retinex albedo extraction on the segmented foreground.

Reflectance is estimated per channel as a weighted sum of log-domain
differences between the masked image and its Gaussian-blurred versions at
several spatial scales, then mapped to [0, 1] with a robust per-channel
percentile normalization and blended with the original image at a randomly
sampled ratio. All arithmetic runs in float64 and is rounded to float32
once at each stage boundary.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMaskError
from .imagecore import ImageRGB, Mask, blur_plane, require_same_size
from .rng import PortableRng

DEFAULT_SCALES = (15.0, 80.0, 250.0)


@dataclass(frozen=True)
class MsrConfig:
    """Parameters of the Retinex stage.

    scales/weights: blur sigmas and their weights (uniform by default).
    epsilon: log-domain guard added inside both logarithms.
    norm_percentiles: robust low/high percentiles for channel normalization.
    blend_range: sampling range for the weight of the original image.
    """

    scales: tuple = DEFAULT_SCALES
    weights: tuple = None
    epsilon: float = 1e-4
    norm_percentiles: tuple = (1.0, 99.0)
    blend_range: tuple = (0.15, 0.25)

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scales)
        if not scales or any(s <= 0 for s in scales):
            raise ValueError("scales must be positive and non-empty")
        if self.weights is None:
            weights = tuple(1.0 / len(scales) for _ in scales)
        else:
            weights = tuple(float(w) for w in self.weights)
        if len(weights) != len(scales):
            raise ValueError("scales and weights must have the same length")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        lo, hi = (float(p) for p in self.norm_percentiles)
        if not (0.0 <= lo < hi <= 100.0):
            raise ValueError("norm_percentiles must satisfy 0 <= low < high <= 100")
        blo, bhi = (float(b) for b in self.blend_range)
        if not (0.0 <= blo <= bhi <= 1.0):
            raise ValueError("blend_range must satisfy 0 <= lo <= hi <= 1")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "norm_percentiles", (lo, hi))
        object.__setattr__(self, "blend_range", (blo, bhi))


def msr_reflectance(img: ImageRGB, mask: Mask, cfg: MsrConfig) -> ImageRGB:
    """Log-domain multi-scale reflectance of the masked foreground.

    Per channel: sum_i w_i * (log(I + eps) - log(blur(I, sigma_i) + eps)),
    with background pixels zeroed before blurring. The result is an
    unbounded log-domain intermediate, not clamped to [0, 1].
    """
    require_same_size(img, mask, "image and mask")
    eps = float(cfg.epsilon)
    m = mask.data.astype(np.float64)
    out = np.zeros((img.height, img.width, 3), dtype=np.float64)
    for c in range(3):
        fg = img.data[:, :, c].astype(np.float64) * m
        log_fg = np.log(fg + eps)
        for sigma, w in zip(cfg.scales, cfg.weights):
            out[:, :, c] += w * (log_fg - np.log(blur_plane(fg, sigma) + eps))
    return ImageRGB(out.astype(np.float32))


def color_normalize(reflectance: ImageRGB, mask: Mask, percentiles) -> ImageRGB:
    """Map each channel's masked [p_low, p_high] range onto [0, 1].

    Percentiles are taken over masked pixels only; values outside the range
    clamp. A near-zero range (constant input) degenerates to flat 0.5.
    """
    require_same_size(reflectance, mask, "reflectance and mask")
    selected = mask.data > 0.5
    if not selected.any():
        raise EmptyMaskError("mask selects no pixels")
    lo_p, hi_p = (float(p) for p in percentiles)
    out = np.empty_like(reflectance.data, dtype=np.float64)
    for c in range(3):
        channel = reflectance.data[:, :, c].astype(np.float64)
        lo, hi = np.percentile(channel[selected], [lo_p, hi_p])
        if hi - lo < 1e-6:
            out[:, :, c] = 0.5
        else:
            out[:, :, c] = np.clip((channel - lo) / (hi - lo), 0.0, 1.0)
    return ImageRGB(out.astype(np.float32))


def blend_albedo(albedo: ImageRGB, original: ImageRGB, alpha: float) -> ImageRGB:
    """Convex blend: alpha weights the original image, 1 - alpha the albedo."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    require_same_size(albedo, original, "albedo and original")
    out = alpha * original.data.astype(np.float64) + (1.0 - alpha) * albedo.data.astype(np.float64)
    return ImageRGB(np.clip(out, 0.0, 1.0).astype(np.float32))


def extract_albedo(img: ImageRGB, mask: Mask, cfg: MsrConfig, rng: PortableRng):
    """Full albedo stage: reflectance -> normalize -> blend -> re-mask.

    The blend ratio is drawn uniformly from cfg.blend_range at entry and
    returned for manifest logging. Background pixels are zeroed in the
    output. Deterministic given (inputs, rng seed).
    """
    alpha = rng.uniform(*cfg.blend_range)
    reflectance = msr_reflectance(img, mask, cfg)
    normalized = color_normalize(reflectance, mask, cfg.norm_percentiles)
    masked_original = ImageRGB(img.data * mask.data[:, :, None])
    blended = blend_albedo(normalized, masked_original, alpha)
    out = ImageRGB(blended.data * mask.data[:, :, None])
    return out, alpha
