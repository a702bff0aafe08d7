"""Geometry-aware directional shading of the extracted albedo.

Surface normals come from central-difference gradients of the relative
depth sidecar; light directions are sampled area-uniformly over the upper
hemisphere; shading is Lambertian with a constant ambient floor so shadowed
regions keep a minimum of visibility.
"""

import math
from dataclasses import dataclass

import numpy as np

from .imagecore import DepthMap, ImageRGB, Mask, require_same_size
from .rng import PortableRng

DEFAULT_AMBIENT_RANGE = (0.25, 0.45)
DEFAULT_GRADIENT_SCALE = 4.0


@dataclass(frozen=True)
class NormalMap:
    """Unit, camera-facing normals, (H, W, 3) float32 with z > 0."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) normals, got {data.shape}")
        norms = np.linalg.norm(data.astype(np.float64), axis=-1)
        if np.abs(norms - 1.0).max() > 1e-5:
            raise ValueError("normals must be unit length (within 1e-5)")
        if data[:, :, 2].min() <= 0.0:
            raise ValueError("normals must be camera-facing (z > 0)")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class LightSample:
    """Unit light direction (z >= 0) plus ambient level in [0, 1]."""

    direction: tuple
    ambient: float

    def __post_init__(self):
        d = tuple(float(c) for c in self.direction)
        if len(d) != 3:
            raise ValueError("direction must be a 3-vector")
        norm = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"direction must be unit length, |d| = {norm}")
        if d[2] < 0.0:
            raise ValueError("direction must lie in the upper hemisphere")
        if not 0.0 <= self.ambient <= 1.0:
            raise ValueError("ambient must be in [0, 1]")
        object.__setattr__(self, "direction", d)


def depth_to_normals(depth: DepthMap, gradient_scale: float = DEFAULT_GRADIENT_SCALE) -> NormalMap:
    """Normals from scaled central-difference depth gradients.

    n = normalize((-k * dd/dx, -k * dd/dy, 1)) with replicate boundaries,
    so the map is unit-length and strictly camera-facing everywhere.
    """
    if gradient_scale <= 0.0:
        raise ValueError("gradient_scale must be > 0")
    if depth.height < 2 or depth.width < 2:
        raise ValueError("depth map must be at least 2x2 for gradients")
    d = depth.data.astype(np.float64)
    padded = np.pad(d, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) * 0.5
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) * 0.5
    v = np.stack([-gradient_scale * gx, -gradient_scale * gy, np.ones_like(gx)], axis=-1)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    return NormalMap(v.astype(np.float32))


def hemisphere_point(u1: float, u2: float) -> tuple:
    """Area-uniform point on the upper hemisphere from two unit uniforms."""
    z = float(u1)
    phi = 2.0 * math.pi * float(u2)
    s = math.sqrt(max(0.0, 1.0 - z * z))
    return (s * math.cos(phi), s * math.sin(phi), z)


def sample_light(rng: PortableRng, ambient_range=DEFAULT_AMBIENT_RANGE) -> LightSample:
    """Draw light direction (area-uniform upper hemisphere) and ambient level.

    Consumes exactly three uniforms from the stream, in the order
    (z, azimuth, ambient).
    """
    u1 = rng.random()
    u2 = rng.random()
    direction = hemisphere_point(u1, u2)
    ambient = rng.uniform(*ambient_range)
    return LightSample(direction, ambient)


def lambertian_shade(albedo: ImageRGB, normals: NormalMap, light: LightSample, mask: Mask) -> ImageRGB:
    """Apply S = ambient + (1 - ambient) * max(0, n.l) on masked pixels.

    The shading factor lies in [ambient, 1], so the output never exceeds
    the albedo; unmasked pixels pass through unchanged (soft masks
    interpolate).
    """
    require_same_size(albedo, normals, "albedo and normals")
    require_same_size(albedo, mask, "albedo and mask")
    l = np.asarray(light.direction, dtype=np.float32)
    ndl = normals.data @ l
    shade = np.float32(light.ambient) + np.float32(1.0 - light.ambient) * np.maximum(
        ndl, np.float32(0.0)
    )
    # fp rounding must not push S outside its contractual [ambient, 1] band
    np.clip(shade, np.float32(light.ambient), np.float32(1.0), out=shade)
    a = albedo.data
    m = mask.data[:, :, None]
    out = m * (a * shade[:, :, None]) + (1.0 - m) * a
    return ImageRGB(np.clip(out, 0.0, 1.0))
