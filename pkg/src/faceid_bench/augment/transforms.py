"""Pixel-level image transforms.

Every transform maps an 8-bit RGB image (H, W, 3) to one of identical
dimensions, so chains compose freely. Transforms are deterministic given
their parameters; the two stochastic ones (``GaussNoise``, ``GridDistortion``)
draw from the chain generator passed to ``apply``. Geometric warps resample
with bilinear interpolation and treat samples outside the source as black.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.ndimage
from PIL import Image as PILImage

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def check_image(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) uint8 image, got dtype {arr.dtype}, shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"image has empty dimensions {arr.shape}")
    return arr


def _to_uint8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(values), 0.0, 255.0).astype(np.uint8)


def _require_rng(rng, name: str) -> np.random.Generator:
    if rng is None:
        raise ValueError(f"{name} needs the chain random generator")
    return rng


def _check_range(name: str, value: float, lo: float | None = None, hi: float | None = None,
                 lo_open: bool = False, hi_open: bool = False) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if lo is not None and (value <= lo if lo_open else value < lo):
        raise ValueError(f"{name} must be {'>' if lo_open else '>='} {lo}, got {value!r}")
    if hi is not None and (value >= hi if hi_open else value > hi):
        raise ValueError(f"{name} must be {'<' if hi_open else '<='} {hi}, got {value!r}")


@dataclass(frozen=True)
class HFlip:
    """Mirror around the vertical axis."""


@dataclass(frozen=True)
class Occlusion:
    """Black out a rectangle; parts outside the image are clipped away."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"occlusion rectangle must have positive size, got {self.w}x{self.h}")


@dataclass(frozen=True)
class ColorJitter:
    """Scale brightness, contrast, and saturation, in that order.

    Each stage multiplies the distance to its anchor (zero, the per-channel
    mean, and the per-pixel luma respectively) and clamps to [0, 255]. A
    factor of 1 leaves its stage untouched, so (1, 1, 1) is the identity.
    """

    brightness: float = 1.0
    contrast: float = 1.0
    saturation: float = 1.0

    def __post_init__(self):
        for name in ("brightness", "contrast", "saturation"):
            _check_range(name, getattr(self, name), lo=0.0, lo_open=True)


@dataclass(frozen=True)
class Clahe:
    """Contrast-limited adaptive histogram equalization on the luma channel."""

    clip_limit: float = 2.0
    tiles: int = 8

    def __post_init__(self):
        _check_range("clip_limit", self.clip_limit, lo=0.0, lo_open=True)
        if self.tiles < 1:
            raise ValueError(f"tiles must be >= 1, got {self.tiles}")


@dataclass(frozen=True)
class GaussianBlur:
    """Gaussian convolution per channel with reflected borders."""

    sigma: float

    def __post_init__(self):
        _check_range("sigma", self.sigma, lo=0.0, lo_open=True)


@dataclass(frozen=True)
class Downscale:
    """Box-filter downscale by ``factor`` then bilinear upscale back."""

    factor: float

    def __post_init__(self):
        _check_range("factor", self.factor, lo=0.0, hi=1.0, lo_open=True, hi_open=True)


@dataclass(frozen=True)
class GaussNoise:
    """Add Gaussian noise in 8-bit units from the chain generator."""

    std: float

    def __post_init__(self):
        _check_range("std", self.std, lo=0.0)


@dataclass(frozen=True)
class OpticalDistortion:
    """Radial distortion: source offsets scale by 1 + k*r^2 about the center.

    r is the distance to the image center normalized by the half-diagonal,
    so k = 0 is the identity and moderate |k| stays within the frame.
    """

    k: float

    def __post_init__(self):
        _check_range("k", self.k)


@dataclass(frozen=True)
class GridDistortion:
    """Perturb a (cells+1)^2 node grid and remap piecewise-bilinearly.

    Interior nodes move by uniform(+-limit * cell size) per axis, drawn from
    the chain generator; border nodes stay fixed. limit = 0 is the identity.
    """

    cells: int = 4
    limit: float = 0.1

    def __post_init__(self):
        if self.cells < 2:
            raise ValueError(f"cells must be >= 2, got {self.cells}")
        _check_range("limit", self.limit, lo=0.0, hi=1.0, hi_open=True)


TransformSpec = (
    HFlip
    | Occlusion
    | ColorJitter
    | Clahe
    | GaussianBlur
    | Downscale
    | GaussNoise
    | OpticalDistortion
    | GridDistortion
)

_OP_NAMES: dict[type, str] = {
    HFlip: "hflip",
    Occlusion: "occlusion",
    ColorJitter: "color_jitter",
    Clahe: "clahe",
    GaussianBlur: "gaussian_blur",
    Downscale: "downscale",
    GaussNoise: "gauss_noise",
    OpticalDistortion: "optical_distortion",
    GridDistortion: "grid_distortion",
}
_OP_TYPES = {name: cls for cls, name in _OP_NAMES.items()}


def spec_to_dict(spec: TransformSpec) -> dict:
    """JSON-ready description; ``spec_from_dict`` inverts it exactly."""
    cls = type(spec)
    if cls not in _OP_NAMES:
        raise TypeError(f"not a transform spec: {spec!r}")
    return {"op": _OP_NAMES[cls], **asdict(spec)}


def spec_from_dict(payload: dict) -> TransformSpec:
    data = dict(payload)
    op = data.pop("op", None)
    if op not in _OP_TYPES:
        raise ValueError(f"unknown transform op {op!r}")
    try:
        return _OP_TYPES[op](**data)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {op!r}: {exc}") from exc


# -- resampling helpers ----------------------------------------------------------


def bilinear_sample(values: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Sample (H, W, 3) ``values`` at source coords; outside is black.

    Exact integer coordinates reproduce source pixels exactly. Interpolation
    runs in float32: 24 mantissa bits dwarf the 8-bit output precision.
    """
    height, width = values.shape[:2]
    vals = np.asarray(values, dtype=np.float32)
    sx = np.asarray(sx, dtype=np.float32)
    sy = np.asarray(sy, dtype=np.float32)
    x0f = np.floor(sx)
    y0f = np.floor(sy)
    tx = sx - x0f
    ty = sy - y0f
    x0 = x0f.astype(np.int64)
    y0 = y0f.astype(np.int64)
    out = np.zeros(sx.shape + (vals.shape[2],), dtype=np.float32)
    for dy, wy in ((0, 1.0 - ty), (1, ty)):
        yi = y0 + dy
        inside_y = (yi >= 0) & (yi < height)
        yc = np.clip(yi, 0, height - 1)
        for dx, wx in ((0, 1.0 - tx), (1, tx)):
            xi = x0 + dx
            weight = wy * wx
            weight *= (xi >= 0) & (xi < width) & inside_y  # zero outside: black
            if not weight.any():
                continue
            xc = np.clip(xi, 0, width - 1)
            out += weight[..., None] * vals[yc, xc]
    return out


# -- individual transforms ---------------------------------------------------------


def _apply_hflip(img: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(img[:, ::-1])


def _apply_occlusion(img: np.ndarray, t: Occlusion) -> np.ndarray:
    height, width = img.shape[:2]
    x0, y0 = max(0, t.x), max(0, t.y)
    x1, y1 = min(width, t.x + t.w), min(height, t.y + t.h)
    out = img.copy()
    if x1 > x0 and y1 > y0:
        out[y0:y1, x0:x1] = 0
    return out


def _apply_color_jitter(img: np.ndarray, t: ColorJitter) -> np.ndarray:
    f = img.astype(np.float64)
    if t.brightness != 1.0:
        f = np.clip(t.brightness * f, 0.0, 255.0)
    if t.contrast != 1.0:
        anchor = f.mean(axis=(0, 1), keepdims=True)
        f = np.clip(anchor + t.contrast * (f - anchor), 0.0, 255.0)
    if t.saturation != 1.0:
        luma = f @ LUMA_WEIGHTS
        f = np.clip(luma[..., None] + t.saturation * (f - luma[..., None]), 0.0, 255.0)
    return _to_uint8(f)


def clip_histogram(hist: np.ndarray, limit: int) -> np.ndarray:
    """Cap bins at ``limit`` and spread the excess; the total count is kept."""
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    hist = np.asarray(hist, dtype=np.int64)
    excess = int(np.clip(hist - limit, 0, None).sum())
    clipped = np.minimum(hist, limit)
    if excess:
        base, rem = divmod(excess, clipped.size)
        clipped = clipped + base
        clipped[:rem] += 1
    return clipped


def _clahe_axis(coords: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = np.searchsorted(centers, coords)
    hi = np.clip(idx, 0, centers.size - 1)
    lo = np.clip(idx - 1, 0, centers.size - 1)
    span = centers[hi] - centers[lo]
    weight = np.where(span > 0, (coords - centers[lo]) / np.where(span > 0, span, 1.0), 0.0)
    return lo, hi, np.clip(weight, 0.0, 1.0)


def _apply_clahe(img: np.ndarray, t: Clahe) -> np.ndarray:
    height, width = img.shape[:2]
    f = img.astype(np.float64)
    luma8 = np.clip(np.rint(f @ LUMA_WEIGHTS), 0, 255).astype(np.int64)
    tiles = max(1, min(t.tiles, height, width))
    edges_y = np.round(np.linspace(0, height, tiles + 1)).astype(int)
    edges_x = np.round(np.linspace(0, width, tiles + 1)).astype(int)
    luts = np.empty((tiles, tiles, 256), dtype=np.float64)
    centers_y = np.empty(tiles)
    centers_x = np.empty(tiles)
    for i in range(tiles):
        centers_y[i] = (edges_y[i] + edges_y[i + 1] - 1) / 2.0
        for j in range(tiles):
            block = luma8[edges_y[i] : edges_y[i + 1], edges_x[j] : edges_x[j + 1]]
            npix = block.size
            hist = np.bincount(block.ravel(), minlength=256)
            limit = max(1, int(t.clip_limit * npix / 256.0))
            cdf = np.cumsum(clip_histogram(hist, limit))
            luts[i, j] = np.clip(np.rint(cdf * (255.0 / npix)), 0.0, 255.0)
    for j in range(tiles):
        centers_x[j] = (edges_x[j] + edges_x[j + 1] - 1) / 2.0
    row_lo, row_hi, wy = _clahe_axis(np.arange(height, dtype=np.float64), centers_y)
    col_lo, col_hi, wx = _clahe_axis(np.arange(width, dtype=np.float64), centers_x)
    v00 = luts[row_lo[:, None], col_lo[None, :], luma8]
    v01 = luts[row_lo[:, None], col_hi[None, :], luma8]
    v10 = luts[row_hi[:, None], col_lo[None, :], luma8]
    v11 = luts[row_hi[:, None], col_hi[None, :], luma8]
    wy = wy[:, None]
    wx = wx[None, :]
    new_luma = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) + wy * ((1.0 - wx) * v10 + wx * v11)
    return _to_uint8(f + (new_luma - luma8)[..., None])


def _apply_gaussian_blur(img: np.ndarray, t: GaussianBlur) -> np.ndarray:
    f = img.astype(np.float64)
    return _to_uint8(scipy.ndimage.gaussian_filter(f, sigma=(t.sigma, t.sigma, 0.0), mode="reflect"))


def _apply_downscale(img: np.ndarray, t: Downscale) -> np.ndarray:
    height, width = img.shape[:2]
    small_w = max(1, round(width * t.factor))
    small_h = max(1, round(height * t.factor))
    pil = PILImage.fromarray(img)
    small = pil.resize((small_w, small_h), PILImage.Resampling.BOX)
    return np.array(small.resize((width, height), PILImage.Resampling.BILINEAR))


def _apply_gauss_noise(img: np.ndarray, t: GaussNoise, rng) -> np.ndarray:
    rng = _require_rng(rng, "GaussNoise")
    if t.std == 0.0:
        return img.copy()
    noise = rng.standard_normal(img.shape) * t.std
    return _to_uint8(img.astype(np.float64) + noise)


def _apply_optical_distortion(img: np.ndarray, t: OpticalDistortion) -> np.ndarray:
    height, width = img.shape[:2]
    cx = (width - 1) / 2.0
    cy = (height - 1) / 2.0
    r2_norm = cx * cx + cy * cy
    if r2_norm == 0.0:
        return img.copy()
    dx = np.arange(width, dtype=np.float64) - cx
    dy = np.arange(height, dtype=np.float64) - cy
    scale = 1.0 + t.k * ((dy[:, None] ** 2 + dx[None, :] ** 2) / r2_norm)
    sx = cx + dx[None, :] * scale
    sy = cy + dy[:, None] * scale
    return _to_uint8(bilinear_sample(img, sx, sy))


def _apply_grid_distortion(img: np.ndarray, t: GridDistortion, rng) -> np.ndarray:
    rng = _require_rng(rng, "GridDistortion")
    height, width = img.shape[:2]
    if height < 2 or width < 2:
        return img.copy()
    cell_w = (width - 1) / t.cells
    cell_h = (height - 1) / t.cells
    nodes = t.cells + 1
    disp_x = rng.uniform(-t.limit * cell_w, t.limit * cell_w, size=(nodes, nodes))
    disp_y = rng.uniform(-t.limit * cell_h, t.limit * cell_h, size=(nodes, nodes))
    for disp in (disp_x, disp_y):
        disp[0, :] = 0.0
        disp[-1, :] = 0.0
        disp[:, 0] = 0.0
        disp[:, -1] = 0.0
    gx = np.arange(width, dtype=np.float64) / cell_w
    gy = np.arange(height, dtype=np.float64) / cell_h
    col = np.minimum(gx.astype(np.int64), t.cells - 1)
    row = np.minimum(gy.astype(np.int64), t.cells - 1)
    tx = (gx - col)[None, :]
    ty = (gy - row)[:, None]

    def interp(disp: np.ndarray) -> np.ndarray:
        d00 = disp[row[:, None], col[None, :]]
        d01 = disp[row[:, None], col[None, :] + 1]
        d10 = disp[row[:, None] + 1, col[None, :]]
        d11 = disp[row[:, None] + 1, col[None, :] + 1]
        return (1.0 - ty) * ((1.0 - tx) * d00 + tx * d01) + ty * ((1.0 - tx) * d10 + tx * d11)

    sx = np.arange(width, dtype=np.float64)[None, :] + interp(disp_x)
    sy = np.arange(height, dtype=np.float64)[:, None] + interp(disp_y)
    return _to_uint8(bilinear_sample(img, sx, sy))


def apply(img, spec: TransformSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Apply one transform; the output keeps the input's dimensions."""
    img = check_image(img)
    if isinstance(spec, HFlip):
        return _apply_hflip(img)
    if isinstance(spec, Occlusion):
        return _apply_occlusion(img, spec)
    if isinstance(spec, ColorJitter):
        return _apply_color_jitter(img, spec)
    if isinstance(spec, Clahe):
        return _apply_clahe(img, spec)
    if isinstance(spec, GaussianBlur):
        return _apply_gaussian_blur(img, spec)
    if isinstance(spec, Downscale):
        return _apply_downscale(img, spec)
    if isinstance(spec, GaussNoise):
        return _apply_gauss_noise(img, spec, rng)
    if isinstance(spec, OpticalDistortion):
        return _apply_optical_distortion(img, spec)
    if isinstance(spec, GridDistortion):
        return _apply_grid_distortion(img, spec, rng)
    raise TypeError(f"not a transform spec: {spec!r}")


def apply_chain(img, chain, rng: np.random.Generator | None = None) -> np.ndarray:
    """Apply transforms in order; an empty chain returns a copy."""
    out = check_image(img)
    for spec in chain:
        out = apply(out, spec, rng)
    return out.copy() if out is img else out
