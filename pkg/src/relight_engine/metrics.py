"""Native SSIM plus mean/std aggregation of externally computed metrics.

SSIM follows the reference single-scale definition: luma conversion,
11x11 Gaussian window with sigma 1.5, stabilizers C1 = (0.01 L)^2 and
C2 = (0.03 L)^2 with L = 1, and the mean of the per-pixel SSIM map over
window positions fully inside the image. Deep-network metrics (LPIPS,
CLIP score, identity) arrive as sidecar files and are only aggregated
here.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import DimensionMismatchError, SidecarFormatError
from .imagecore import ImageRGB, gaussian_kernel1d
from .manifest import read_ldjson

HIGHER_BETTER = "higher_better"
LOWER_BETTER = "lower_better"

_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)
_K1 = 0.01
_K2 = 0.03
_WINDOW_SIZE = 11
_WINDOW_SIGMA = 1.5


@dataclass(frozen=True)
class MetricReport:
    name: str
    mean: float
    std: float
    n: int
    direction: str

    def __post_init__(self):
        if self.std < 0.0 or self.n < 1:
            raise ValueError("std must be >= 0 and n >= 1")
        if self.direction not in (HIGHER_BETTER, LOWER_BETTER):
            raise ValueError(f"unknown direction {self.direction!r}")

    def format_mean_std(self) -> str:
        return f"{self.mean:.4f} ± {self.std:.4f}"


def _ssim_window() -> np.ndarray:
    k = gaussian_kernel1d(_WINDOW_SIGMA)
    r = (len(k) - 1) // 2
    half = _WINDOW_SIZE // 2
    k = k[r - half : r + half + 1]
    k = k / k.sum()
    return np.outer(k, k)


_WINDOW = _ssim_window()


def luma(img: ImageRGB) -> np.ndarray:
    """Rec.601 luma in float64."""
    return img.data.astype(np.float64) @ _LUMA


def ssim(a: ImageRGB, b: ImageRGB) -> float:
    """Single-scale SSIM between two images in [0, 1]."""
    if (a.height, a.width) != (b.height, b.width):
        raise DimensionMismatchError(
            f"ssim inputs disagree on size: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    if a.height < _WINDOW_SIZE or a.width < _WINDOW_SIZE:
        raise ValueError(f"images must be at least {_WINDOW_SIZE}px on each side")
    x = luma(a)
    y = luma(b)
    c1 = _K1 * _K1
    c2 = _K2 * _K2

    def win_mean(z):
        return fftconvolve(z, _WINDOW, mode="valid")

    mu_x = win_mean(x)
    mu_y = win_mean(y)
    xx = win_mean(x * x) - mu_x * mu_x
    yy = win_mean(y * y) - mu_y * mu_y
    xy = win_mean(x * y) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * xy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (xx + yy + c2)
    return float(np.mean(num / den))


def aggregate(values, name: str, direction: str) -> MetricReport:
    """Mean and population standard deviation of per-image metric values."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("cannot aggregate an empty list")
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("metric values must be finite")
    mean = sum(vals) / len(vals)
    var = sum((v - mean) ** 2 for v in vals) / len(vals)
    return MetricReport(name=name, mean=mean, std=math.sqrt(var), n=len(vals), direction=direction)


def collect_external(path: str, known_ids) -> list:
    """Parse a {image_id, value} sidecar, validating ids against the manifest."""
    known = set(known_ids)
    out = []
    for obj in read_ldjson(path):
        try:
            image_id = str(obj["image_id"])
            value = float(obj["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SidecarFormatError(f"{path}: malformed metric row: {exc}") from exc
        if image_id not in known:
            raise SidecarFormatError(f"{path}: unknown image id {image_id!r}")
        out.append((image_id, value))
    return out
