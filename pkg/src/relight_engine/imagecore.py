"""Image, mask, and depth containers plus the shared resampling/blur primitives.

Images are stored as row-major float32 arrays: ``(H, W, 3)`` interleaved RGB
for :class:`ImageRGB`, ``(H, W)`` for :class:`Mask` and :class:`DepthMap`.
Nominal sample range is [0, 1]; log-domain intermediates (Retinex output)
are the documented exception. All containers are immutable after
construction and safe to share across workers.

File formats: 8/16-bit PNG and JPEG reads, 8-bit PNG writes, masks as 8-bit
single-channel PNG, depth as 16-bit single-channel PNG (min-max normalized
by its producer).
"""

import os
from dataclasses import dataclass

import cv2
import numpy as np
import scipy.fft

from .errors import (
    CorruptImageError,
    DimensionMismatchError,
    ImageWriteError,
    MissingImageError,
    UnsupportedImageFormatError,
)

_READ_EXTENSIONS = {".png", ".jpg", ".jpeg"}


def _validate_plane(data: np.ndarray, channels: int) -> np.ndarray:
    expected_ndim = 3 if channels == 3 else 2
    if data.ndim != expected_ndim or (channels == 3 and data.shape[2] != 3):
        raise ValueError(f"expected {expected_ndim}-d array, got shape {data.shape}")
    if data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError(f"degenerate size {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("samples must be finite")
    out = np.ascontiguousarray(data, dtype=np.float32)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ImageRGB:
    """Float RGB image plane, (H, W, 3) float32."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _validate_plane(self.data, 3))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class Mask:
    """Subject mask, (H, W) float32 in [0, 1]; 1 = subject."""

    data: np.ndarray

    def __post_init__(self):
        data = _validate_plane(self.data, 1)
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("mask samples must lie in [0, 1]")
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class DepthMap:
    """Relative (inverse) depth, (H, W) float32, finite."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _validate_plane(self.data, 1))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def require_same_size(a, b, what: str = "planes") -> None:
    if (a.height, a.width) != (b.height, b.width):
        raise DimensionMismatchError(
            f"{what} disagree on size: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------


def _decode(path: str, flags: int) -> np.ndarray:
    if not os.path.isfile(path):
        raise MissingImageError(f"no such file: {path}")
    ext = os.path.splitext(path)[1].lower()
    if ext not in _READ_EXTENSIONS:
        raise UnsupportedImageFormatError(f"unsupported image format {ext!r}: {path}")
    try:
        raw = np.fromfile(path, dtype=np.uint8)
    except OSError as exc:
        raise CorruptImageError(f"cannot read {path}: {exc}") from exc
    decoded = cv2.imdecode(raw, flags) if raw.size else None
    if decoded is None:
        raise CorruptImageError(f"cannot decode image data: {path}")
    return decoded


def _to_unit_float(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == np.uint8:
        return arr.astype(np.float32) / 255.0
    if arr.dtype == np.uint16:
        return arr.astype(np.float32) / 65535.0
    raise CorruptImageError(f"unsupported sample type {arr.dtype}")


def load_image(path: str) -> ImageRGB:
    """Read an 8/16-bit PNG or JPEG as float RGB in [0, 1].

    Grayscale inputs are replicated to three channels; alpha is dropped.
    """
    arr = _decode(path, cv2.IMREAD_UNCHANGED)
    data = _to_unit_float(arr)
    if data.ndim == 2:
        data = np.repeat(data[:, :, None], 3, axis=2)
    elif data.shape[2] == 4:
        data = data[:, :, :3][:, :, ::-1]  # BGRA -> RGB
    else:
        data = data[:, :, ::-1]  # BGR -> RGB
    return ImageRGB(np.ascontiguousarray(data))


def save_image(img: ImageRGB, path: str) -> None:
    """Write an 8-bit PNG; samples quantized with round-half-up."""
    data = np.clip(img.data, 0.0, 1.0)
    u8 = np.floor(data * 255.0 + 0.5).astype(np.uint8)
    _encode_png(u8[:, :, ::-1], path)


def load_mask(path: str) -> Mask:
    """Read an 8-bit single-channel PNG mask; 255 maps to 1."""
    arr = _decode(path, cv2.IMREAD_GRAYSCALE)
    return Mask(arr.astype(np.float32) / 255.0)


def save_mask(mask: Mask, path: str) -> None:
    u8 = np.floor(np.clip(mask.data, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    _encode_png(u8, path)


def load_depth(path: str) -> DepthMap:
    """Read a 16-bit single-channel PNG depth sidecar, scaled to [0, 1]."""
    arr = _decode(path, cv2.IMREAD_UNCHANGED)
    if arr.ndim != 2:
        arr = arr[:, :, 0]
    return DepthMap(_to_unit_float(arr))


def save_depth(depth: DepthMap, path: str) -> None:
    """Write depth as 16-bit grayscale PNG (values clipped to [0, 1])."""
    u16 = np.floor(np.clip(depth.data, 0.0, 1.0) * 65535.0 + 0.5).astype(np.uint16)
    _encode_png(u16, path)


def _encode_png(arr: np.ndarray, path: str) -> None:
    ok, buf = cv2.imencode(".png", arr, [cv2.IMWRITE_PNG_COMPRESSION, 3])
    if not ok:
        raise ImageWriteError(f"PNG encoding failed for {path}")
    try:
        with open(path, "wb") as fh:
            fh.write(buf.tobytes())
    except OSError as exc:
        raise ImageWriteError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------


def resize(img, w: int, h: int):
    """Bilinear resample to exactly (w, h); same container type out.

    Identical target dimensions return the input unchanged. Output is
    clamped to the input's [min, max] envelope, so [0, 1] data stays there.
    """
    if w < 1 or h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {w}x{h}")
    if (w, h) == (img.width, img.height):
        return img
    src = img.data
    out = cv2.resize(src, (w, h), interpolation=cv2.INTER_LINEAR)
    out = np.clip(out, float(src.min()), float(src.max()))
    return type(img)(out)


# ---------------------------------------------------------------------------
# Gaussian blur
# ---------------------------------------------------------------------------
#
# Contract: separable convolution with a sampled Gaussian, kernel radius
# ceil(3*sigma), kernel normalized to sum 1, replicate-edge boundaries.
# The implementation is FFT-based but exact: with replicate padding the
# out-of-image signal is constant, so each 1-d pass splits into a
# zero-padded linear convolution plus two analytic edge terms weighted by
# the kernel's cumulative tails. This matches a direct padded convolution
# to ~1e-15 while staying fast for sigma=250 kernels (3001 taps).


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Sampled Gaussian, radius ceil(3*sigma), normalized to sum 1."""
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


class _RowBlur:
    """Replicate-edge Gaussian blur along the last axis of a 2-d array."""

    def __init__(self, n: int, sigma: float):
        k = gaussian_kernel1d(sigma)
        self.n = n
        self.taps = len(k)
        self.radius = (self.taps - 1) // 2
        self.nfft = scipy.fft.next_fast_len(n + self.taps - 1, real=True)
        self.kernel_f = scipy.fft.rfft(k, self.nfft)
        csum = np.cumsum(k)
        i = np.arange(n)
        r = self.radius
        # Weight of the constant left pad on output i: sum_{t=0}^{r-i-1} k[t].
        self.left = np.where(i < r, csum[np.clip(r - i - 1, 0, self.taps - 1)], 0.0)
        # Weight of the constant right pad: sum_{t=n+r-i}^{2r} k[t].
        tail = csum[-1] - csum
        t0 = n + r - i
        self.right = np.where(
            t0 <= 2 * r,
            np.where(t0 >= 1, tail[np.clip(t0 - 1, 0, self.taps - 1)], csum[-1]),
            0.0,
        )
        # Edge terms only touch the first/last min(r, n) outputs.
        self.left_n = min(r, n)
        self.right_n = min(r, n)

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        spec = scipy.fft.rfft(rows, self.nfft, axis=1)
        spec *= self.kernel_f
        core = scipy.fft.irfft(spec, self.nfft, axis=1, overwrite_x=True)
        out = core[:, self.radius : self.radius + self.n]
        if self.left_n:
            out[:, : self.left_n] += rows[:, 0, None] * self.left[: self.left_n]
        if self.right_n:
            out[:, self.n - self.right_n :] += (
                rows[:, -1, None] * self.right[self.n - self.right_n :]
            )
        return out


_ROW_BLUR_CACHE: dict = {}
_ROW_BLUR_CACHE_MAX = 64


def _row_blur(n: int, sigma: float) -> _RowBlur:
    key = (n, float(sigma))
    rb = _ROW_BLUR_CACHE.get(key)
    if rb is None:
        if len(_ROW_BLUR_CACHE) >= _ROW_BLUR_CACHE_MAX:
            _ROW_BLUR_CACHE.clear()
        rb = _ROW_BLUR_CACHE[key] = _RowBlur(n, sigma)
    return rb


def blur_plane(plane: np.ndarray, sigma: float) -> np.ndarray:
    """Blur a 2-d float64 plane; returns float64."""
    plane = np.ascontiguousarray(plane, dtype=np.float64)
    if sigma == 0.0:
        return plane.copy()
    rows = _row_blur(plane.shape[1], sigma)
    cols = _row_blur(plane.shape[0], sigma)
    out = rows(plane)
    out = cols(np.ascontiguousarray(out.T))
    return np.ascontiguousarray(out.T)


def blur_array(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Blur a (H, W) or (H, W, C) array in float64; returns float64."""
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if arr.ndim == 2:
        return blur_plane(arr, sigma)
    out = np.empty(arr.shape, dtype=np.float64)
    for c in range(arr.shape[2]):
        out[:, :, c] = blur_plane(arr[:, :, c], sigma)
    return out


def gaussian_blur(img, sigma: float):
    """Gaussian-blur any image container; sigma = 0 is the identity.

    The output is clamped to the input's [min, max] envelope: the blur is
    a convex combination, so any excursion is FFT roundoff (~1e-15) and
    clamping keeps range-constrained containers (masks, patterns) valid.
    """
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return img
    out = blur_array(img.data, sigma)
    np.clip(out, float(img.data.min()), float(img.data.max()), out=out)
    return type(img)(out.astype(np.float32))
