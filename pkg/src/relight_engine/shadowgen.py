"""Procedural cast-shadow patterns and their compositing.

A pattern field is an (H, W) float plane in [0, 1] where 1 means fully
occluded. Ten generators cover blinds, window frames, foliage, branches,
curtains, fences, architectural screens, lattices, palm fronds, and cloud
noise; each is a pure function of (kind, size, seed). The first seven are
the classic cast-shadow repertoire; lattice, palm fronds, and cloud noise
are engine additions in the same family (documented in the README).

Feature sizes are parameterized against a 512 px reference so fields look
the same at any resolution.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .imagecore import ImageRGB, Mask, blur_plane, require_same_size
from .rng import PortableRng, hash_lattice

DEFAULT_OPACITY_RANGE = (0.35, 0.6)
DEFAULT_BLUR_SIGMA_RANGE = (2.0, 8.0)
REFERENCE_SIZE = 512.0


class PatternKind(enum.Enum):
    VENETIAN_BLINDS = "venetian_blinds"
    WINDOW_FRAME = "window_frame"
    FOLIAGE_FBM = "foliage_fbm"
    BRANCHES = "branches"
    CURTAINS = "curtains"
    FENCE = "fence"
    ARCH_SCREEN = "arch_screen"
    LATTICE = "lattice"
    PALM_FRONDS = "palm_fronds"
    CLOUD_NOISE = "cloud_noise"


# Kinds the engine added beyond the classic seven.
ENGINE_ADDED_KINDS = frozenset(
    {PatternKind.LATTICE, PatternKind.PALM_FRONDS, PatternKind.CLOUD_NOISE}
)


def uniform_weights() -> dict:
    return {kind: 1.0 for kind in PatternKind}


@dataclass(frozen=True)
class ShadowParams:
    kind: PatternKind
    opacity: float
    blur_sigma: float
    pattern_seed: int

    def __post_init__(self):
        if not 0.0 <= self.opacity <= 1.0:
            raise ValueError("opacity must be in [0, 1]")
        if self.blur_sigma < 0.0:
            raise ValueError("blur_sigma must be >= 0")


@dataclass(frozen=True)
class PatternField:
    """Occlusion field, (H, W) float32 in [0, 1]; 1 = fully occluded."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise ValueError(f"expected (H, W) field, got {data.shape}")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("pattern samples must lie in [0, 1]")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


# ---------------------------------------------------------------------------
# Value noise / fbm
# ---------------------------------------------------------------------------


def _fade(t):
    # Perlin quintic: 6t^5 - 15t^4 + 10t^3
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def value_noise(x, y, seed: int):
    """Smoothly interpolated lattice noise in [-1, 1], stateless in seed."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xi = np.floor(x).astype(np.int64)
    yi = np.floor(y).astype(np.int64)
    tx = _fade(x - xi)
    ty = _fade(y - yi)
    v00 = hash_lattice(xi, yi, seed)
    v10 = hash_lattice(xi + 1, yi, seed)
    v01 = hash_lattice(xi, yi + 1, seed)
    v11 = hash_lattice(xi + 1, yi + 1, seed)
    a = v00 + tx * (v10 - v00)
    b = v01 + tx * (v11 - v01)
    out = a + ty * (b - a)
    return out if out.ndim else float(out)


def fbm(x, y, octaves: int, lacunarity: float, gain: float, seed: int):
    """Fractal sum of value noise octaves.

    sum_{i < octaves} gain^i * noise(x * lacunarity^i, y * lacunarity^i,
    seed xor i); each octave's base noise lies in [-1, 1], so the total is
    bounded by sum_i gain^i.
    """
    if octaves < 1:
        raise ValueError("octaves must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    out = np.zeros(np.broadcast(x, y).shape, dtype=np.float64)
    amp = 1.0
    freq = 1.0
    for i in range(octaves):
        out = out + amp * value_noise(x * freq, y * freq, seed ^ i)
        amp *= gain
        freq *= lacunarity
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Pattern geometry helpers
# ---------------------------------------------------------------------------


def _grid(w: int, h: int):
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    return xs, ys


def _smoothstep(e0, e1, x):
    t = np.clip((x - e0) / (e1 - e0), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _stripes(xs, ys, angle: float, period: float, duty: float, phase: float):
    """Hard periodic stripes; fraction `duty` of each period is occluded."""
    u = xs * math.cos(angle) + ys * math.sin(angle) + phase
    t = np.mod(u, period) / period
    return (t < duty).astype(np.float64)


def _capsule(field, x0, y0, x1, y1, radius):
    """Mark a thick segment into `field`, using a local bounding box."""
    h, w = field.shape
    lo_x = max(0, int(math.floor(min(x0, x1) - radius - 1)))
    hi_x = min(w, int(math.ceil(max(x0, x1) + radius + 2)))
    lo_y = max(0, int(math.floor(min(y0, y1) - radius - 1)))
    hi_y = min(h, int(math.ceil(max(y0, y1) + radius + 2)))
    if lo_x >= hi_x or lo_y >= hi_y:
        return
    ys, xs = np.mgrid[lo_y:hi_y, lo_x:hi_x].astype(np.float64)
    dx, dy = x1 - x0, y1 - y0
    seg_len2 = dx * dx + dy * dy
    if seg_len2 < 1e-12:
        t = np.zeros_like(xs)
    else:
        t = np.clip(((xs - x0) * dx + (ys - y0) * dy) / seg_len2, 0.0, 1.0)
    dist2 = (xs - (x0 + t * dx)) ** 2 + (ys - (y0 + t * dy)) ** 2
    hit = dist2 <= radius * radius
    region = field[lo_y:hi_y, lo_x:hi_x]
    np.maximum(region, hit.astype(np.float64), out=region)


# ---------------------------------------------------------------------------
# The ten generators
# ---------------------------------------------------------------------------


def venetian_blinds_field(w, h, period, angle, duty, phase) -> np.ndarray:
    xs, ys = _grid(w, h)
    return _stripes(xs, ys, angle, period, duty, phase)


def _venetian_blinds(w, h, s, rng):
    period = max(2.0, rng.uniform(22.0, 56.0) * s)
    angle = math.pi / 2.0 + rng.uniform(-0.5, 0.5)  # near-horizontal slats
    duty = rng.uniform(0.4, 0.6)
    phase = rng.uniform(0.0, period)
    return venetian_blinds_field(w, h, period, angle, duty, phase)

def _window_frame(w, h, s, rng):
    xs, ys = _grid(w, h)
    # window rectangle; everything outside it is occluded
    cx = w * rng.uniform(0.4, 0.6)
    cy = h * rng.uniform(0.4, 0.6)
    half_w = w * rng.uniform(0.32, 0.46)
    half_h = h * rng.uniform(0.32, 0.46)
    outside = (np.abs(xs - cx) > half_w) | (np.abs(ys - cy) > half_h)
    field = outside.astype(np.float64)
    bar = max(1.5, rng.uniform(8.0, 16.0) * s)
    # mullions split the window into 2-4 panes
    n_v = rng.randint(0, 1)
    n_h = rng.randint(0, 1)
    if n_v == 0 and n_h == 0:
        n_v = 1
    for i in range(1, n_v + 1):
        x_bar = cx - half_w + 2.0 * half_w * i / (n_v + 1)
        field[np.abs(xs - x_bar) <= bar / 2.0] = 1.0
    for i in range(1, n_h + 1):
        y_bar = cy - half_h + 2.0 * half_h * i / (n_h + 1)
        field[np.abs(ys - y_bar) <= bar / 2.0] = 1.0
    return field

def _foliage_fbm(w, h, s, rng):
    xs, ys = _grid(w, h)
    seed = rng.next_u64()
    cell = max(4.0, rng.uniform(36.0, 90.0) * s)
    f = fbm(xs / cell, ys / cell, octaves=4, lacunarity=2.0, gain=0.5, seed=seed)
    coverage = rng.uniform(0.35, 0.65)
    threshold = np.quantile(f, 1.0 - coverage)
    return (f > threshold).astype(np.float64)

def _branches(w, h, s, rng):
    field = np.zeros((h, w), dtype=np.float64)
    n_branches = rng.randint(5, 8)
    for _ in range(n_branches):
        edge = rng.randrange(4)
        if edge == 0:
            x, y = rng.uniform(0, w), 0.0
        elif edge == 1:
            x, y = rng.uniform(0, w), float(h)
        elif edge == 2:
            x, y = 0.0, rng.uniform(0, h)
        else:
            x, y = float(w), rng.uniform(0, h)
        heading = math.atan2(h / 2.0 - y, w / 2.0 - x) + rng.uniform(-0.5, 0.5)
        width = rng.uniform(14.0, 22.0) * s
        step = max(6.0, 0.09 * min(w, h))
        n_steps = rng.randint(12, 18)
        for i in range(n_steps):
            heading += rng.uniform(-0.45, 0.45)
            nx = x + step * math.cos(heading)
            ny = y + step * math.sin(heading)
            taper = 1.0 - 0.75 * i / max(1, n_steps - 1)
            _capsule(field, x, y, nx, ny, max(0.8, width * taper / 2.0))
            x, y = nx, ny
    return field

def _curtains(w, h, s, rng):
    xs, ys = _grid(w, h)
    period = max(6.0, rng.uniform(70.0, 150.0) * s)
    wobble = rng.uniform(6.0, 18.0) * s
    wobble_period = max(8.0, rng.uniform(120.0, 260.0) * s)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    u = xs + wobble * np.sin(2.0 * math.pi * ys / wobble_period + phase)
    t = 0.5 + 0.5 * np.sin(2.0 * math.pi * u / period + rng.uniform(0.0, 2.0 * math.pi))
    lo = rng.uniform(0.25, 0.4)
    return _smoothstep(lo, 1.0 - lo, t)

def _fence(w, h, s, rng):
    xs, ys = _grid(w, h)
    period = max(3.0, rng.uniform(30.0, 64.0) * s)
    duty = rng.uniform(0.3, 0.5)
    phase = rng.uniform(0.0, period)
    slats = _stripes(xs, ys, rng.uniform(-0.08, 0.08), period, duty, phase)
    field = slats
    rail_h = max(1.5, rng.uniform(10.0, 18.0) * s)
    for _ in range(rng.randint(1, 2)):
        y_rail = h * rng.uniform(0.15, 0.85)
        field = np.maximum(field, (np.abs(ys - y_rail) <= rail_h / 2.0).astype(np.float64))
    return field

def _arch_screen(w, h, s, rng):
    xs, ys = _grid(w, h)
    tile = max(6.0, rng.uniform(52.0, 110.0) * s)
    hole = rng.uniform(0.3, 0.42) * tile
    soft = 0.08 * tile
    row = np.floor(ys / tile)
    x_off = np.where(np.mod(row, 2) == 0, 0.0, tile / 2.0)  # staggered rows
    dx = np.mod(xs + x_off, tile) - tile / 2.0
    dy = np.mod(ys, tile) - tile / 2.0
    dist = np.sqrt(dx * dx + dy * dy)
    return _smoothstep(hole - soft, hole + soft, dist)

def _lattice(w, h, s, rng):
    xs, ys = _grid(w, h)
    period = max(3.0, rng.uniform(34.0, 70.0) * s)
    duty = rng.uniform(0.22, 0.34)
    angle = rng.uniform(0.3, math.pi / 2.0 - 0.3)
    cross = angle + math.pi / 2.0 + rng.uniform(-0.12, 0.12)
    a = _stripes(xs, ys, angle, period, duty, rng.uniform(0.0, period))
    b = _stripes(xs, ys, cross, period, duty, rng.uniform(0.0, period))
    return np.maximum(a, b)

def _palm_fronds(w, h, s, rng):
    field = np.zeros((h, w), dtype=np.float64)
    cx = w * rng.uniform(0.3, 0.7)
    cy = h * rng.uniform(0.05, 0.3)
    n_fronds = rng.randint(7, 10)
    base = rng.uniform(0.0, 2.0 * math.pi)
    reach = 0.95 * max(w, h)
    for i in range(n_fronds):
        theta = base + 2.0 * math.pi * i / n_fronds + rng.uniform(-0.2, 0.2)
        length = reach * rng.uniform(0.7, 1.0)
        width = rng.uniform(22.0, 34.0) * s
        segments = 6
        x, y = cx, cy
        droop = rng.uniform(0.12, 0.3)
        for j in range(segments):
            t0, t1 = j / segments, (j + 1) / segments
            theta_j = theta + droop * t0
            nx = cx + length * t1 * math.cos(theta_j)
            ny = cy + length * t1 * math.sin(theta_j)
            taper = width * (1.0 - 0.8 * t0) / 2.0
            _capsule(field, x, y, nx, ny, max(0.9, taper))
            x, y = nx, ny
    return field

def _cloud_noise(w, h, s, rng):
    xs, ys = _grid(w, h)
    seed = rng.next_u64()
    cell = max(8.0, rng.uniform(110.0, 230.0) * s)
    f = fbm(xs / cell, ys / cell, octaves=3, lacunarity=2.0, gain=0.5, seed=seed)
    center = np.quantile(f, rng.uniform(0.35, 0.65))
    halfwidth = rng.uniform(0.35, 0.6)
    return _smoothstep(center - halfwidth, center + halfwidth, f)


_GENERATORS = {
    PatternKind.VENETIAN_BLINDS: _venetian_blinds,
    PatternKind.WINDOW_FRAME: _window_frame,
    PatternKind.FOLIAGE_FBM: _foliage_fbm,
    PatternKind.BRANCHES: _branches,
    PatternKind.CURTAINS: _curtains,
    PatternKind.FENCE: _fence,
    PatternKind.ARCH_SCREEN: _arch_screen,
    PatternKind.LATTICE: _lattice,
    PatternKind.PALM_FRONDS: _palm_fronds,
    PatternKind.CLOUD_NOISE: _cloud_noise,
}


def generate_pattern(kind: PatternKind, w: int, h: int, seed: int) -> PatternField:
    """Deterministic occlusion field for (kind, size, seed)."""
    if w < 16 or h < 16:
        raise ValueError(f"pattern size must be at least 16x16, got {w}x{h}")
    rng = PortableRng(seed)
    scale = min(w, h) / REFERENCE_SIZE
    field = _GENERATORS[PatternKind(kind)](w, h, scale, rng)
    return PatternField(np.clip(field, 0.0, 1.0).astype(np.float32))


def select_pattern(weights: dict, rng: PortableRng) -> PatternKind:
    """Weighted categorical choice over pattern kinds (enum order)."""
    kinds = [k for k in PatternKind if k in weights]
    if not kinds:
        raise ValueError("no pattern weights given")
    values = [float(weights[k]) for k in kinds]
    return rng.weighted_choice(kinds, values)


def composite_shadow(img: ImageRGB, pattern: PatternField, mask: Mask, params: ShadowParams) -> ImageRGB:
    """Blur the pattern and darken masked pixels by opacity * pattern.

    out = img * (1 - opacity * blurred_pattern) inside the mask; unmasked
    pixels are unchanged. The multiplier stays in [1 - opacity, 1].
    """
    require_same_size(img, pattern, "image and pattern")
    require_same_size(img, mask, "image and mask")
    p = pattern.data.astype(np.float64)
    if params.blur_sigma > 0.0:
        p = np.clip(blur_plane(p, params.blur_sigma), 0.0, 1.0)
    mult = (1.0 - params.opacity * p).astype(np.float32)
    m = mask.data[:, :, None]
    base = img.data
    out = m * (base * mult[:, :, None]) + (1.0 - m) * base
    return ImageRGB(np.clip(out, 0.0, 1.0))


def place_on_gray(img: ImageRGB, mask: Mask, gray: float = 0.5) -> ImageRGB:
    """Linear blend toward a constant gray background outside the mask."""
    if not 0.0 <= gray <= 1.0:
        raise ValueError("gray must be in [0, 1]")
    require_same_size(img, mask, "image and mask")
    m = mask.data[:, :, None]
    out = m * img.data + (1.0 - m) * np.float32(gray)
    return ImageRGB(np.clip(out, 0.0, 1.0))
