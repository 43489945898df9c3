"""Haar analysis/synthesis on power-of-two grids.

The transform uses the averaging convention: the approximation at each
level is the mean of its four children, and the three detail bands are
quarter-sums with the sign pattern

    child(2i,   2j)   = A + a + b + c
    child(2i,   2j+1) = A - a + b - c
    child(2i+1, 2j)   = A + a - b - c
    child(2i+1, 2j+1) = A - a - b + c

where ``a`` responds to variation along columns (horizontal detail),
``b`` along rows (vertical detail), and ``c`` diagonally.  Under this
convention the difference-field recursion below holds with unit weights,
and all dyadic divisions are exact in binary floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, LevelRangeError


def _require_pow2_square(arr: np.ndarray) -> int:
    """Return N for a 2^N x 2^N array, raising DimensionError otherwise."""
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square 2-D grid, got shape {arr.shape}")
    side = arr.shape[0]
    if side < 2 or side & (side - 1):
        raise DimensionError(f"side must be a power of two >= 2, got {side}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError("grid contains non-finite values")
    return side.bit_length() - 1


@dataclass
class DetailBands:
    """Horizontal (a), vertical (b) and diagonal (c) planes of one level."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def copy(self) -> "DetailBands":
        return DetailBands(self.a.copy(), self.b.copy(), self.c.copy())


@dataclass
class HaarPyramid:
    """Global mean plus per-level detail bands; level N-1 is the finest."""

    global_approx: float
    details: list[DetailBands]

    @property
    def levels(self) -> int:
        return len(self.details)

    @property
    def side(self) -> int:
        return 1 << self.levels

    def copy(self) -> "HaarPyramid":
        return HaarPyramid(self.global_approx, [d.copy() for d in self.details])

    def detail_count(self) -> int:
        return sum(3 * d.a.size for d in self.details)


@dataclass
class SparseMask:
    """Per-level boolean planes marking retained detail coefficients."""

    bands: list[tuple[np.ndarray, np.ndarray, np.ndarray]]

    @property
    def retained_count(self) -> int:
        return int(sum(int(m.sum()) for bs in self.bands for m in bs))


@dataclass
class DifferenceField:
    """D^l: per-cell deviation of a level's approximation from the global mean."""

    level: int
    values: np.ndarray


def forward_haar(img: np.ndarray) -> HaarPyramid:
    """Decompose a 2^N x 2^N grid into an N-level Haar pyramid."""
    n_levels = _require_pow2_square(np.asarray(img))
    approx = np.asarray(img, dtype=np.float64)
    details: list[DetailBands] = []
    for _ in range(n_levels):
        p = approx[0::2, 0::2]
        q = approx[0::2, 1::2]
        r = approx[1::2, 0::2]
        s = approx[1::2, 1::2]
        a = (p - q + r - s) / 4.0
        b = (p + q - r - s) / 4.0
        c = (p - q - r + s) / 4.0
        approx = (p + q + r + s) / 4.0
        details.append(DetailBands(a, b, c))
    details.reverse()
    return HaarPyramid(float(approx[0, 0]), details)


def inverse_haar(pyr: HaarPyramid) -> np.ndarray:
    """Exact synthesis back to the spatial grid."""
    approx = np.full((1, 1), pyr.global_approx, dtype=np.float64)
    for level, bands in enumerate(pyr.details):
        size = 1 << level
        for plane in (bands.a, bands.b, bands.c):
            if plane.shape != (size, size):
                raise DimensionError(
                    f"level {level} plane has shape {plane.shape}, expected {(size, size)}"
                )
        a, b, c = bands.a, bands.b, bands.c
        out = np.empty((2 * size, 2 * size), dtype=np.float64)
        out[0::2, 0::2] = approx + a + b + c
        out[0::2, 1::2] = approx - a + b - c
        out[1::2, 0::2] = approx + a - b - c
        out[1::2, 1::2] = approx - a - b + c
        approx = out
    return approx


def compute_difference_field(pyr: HaarPyramid, level: int) -> DifferenceField:
    """Build D^level from detail coefficients alone.

    The recursion never touches approximation planes; ``level`` may equal
    N, in which case the result is the full-resolution difference field
    (pixel value minus global mean).
    """
    if not 0 <= level <= pyr.levels:
        raise LevelRangeError(f"level {level} outside [0, {pyr.levels}]")
    d = np.zeros((1, 1), dtype=np.float64)
    for l in range(1, level + 1):
        bands = pyr.details[l - 1]
        a, b, c = bands.a, bands.b, bands.c
        size = 1 << l
        out = np.empty((size, size), dtype=np.float64)
        out[0::2, 0::2] = d + (a + b + c)
        out[0::2, 1::2] = d + (-a + b - c)
        out[1::2, 0::2] = d + (a - b - c)
        out[1::2, 1::2] = d + (-a - b + c)
        d = out
    return DifferenceField(level, d)


def _stacked_magnitudes(pyr: HaarPyramid) -> np.ndarray:
    return np.concatenate(
        [np.abs(p).ravel() for bs in pyr.details for p in (bs.a, bs.b, bs.c)]
    )


def _apply_bool_masks(pyr: HaarPyramid, flat_mask: np.ndarray):
    """Split a flat keep-mask back into per-plane masks and zero the rest."""
    out = pyr.copy()
    bands: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    pos = 0
    for bs in out.details:
        planes = []
        for plane in (bs.a, bs.b, bs.c):
            m = flat_mask[pos : pos + plane.size].reshape(plane.shape)
            plane[~m] = 0.0
            planes.append(m)
            pos += plane.size
        bands.append((planes[0], planes[1], planes[2]))
    return out, SparseMask(bands)


def universal_threshold(pyr: HaarPyramid) -> float:
    """Donoho universal threshold, noise sigma from the finest diagonal plane."""
    finest_diag = pyr.details[-1].c
    sigma = float(np.median(np.abs(finest_diag))) / 0.6745
    n = pyr.detail_count()
    return sigma * math.sqrt(2.0 * math.log(n))


def top_fraction_mask(pyr: HaarPyramid, fraction: float) -> np.ndarray:
    """Flat keep-mask retaining the ceil(fraction * total) largest magnitudes.

    Ties are broken by coefficient order, so masks nest across fractions.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    mags = _stacked_magnitudes(pyr)
    keep = math.ceil(fraction * mags.size)
    mask = np.zeros(mags.size, dtype=bool)
    if keep:
        order = np.argsort(-mags, kind="stable")
        mask[order[:keep]] = True
    return mask


def hard_threshold(
    pyr: HaarPyramid,
    mode: str = "universal",
    fraction: float | None = None,
    threshold: float | None = None,
) -> tuple[HaarPyramid, SparseMask]:
    """Zero detail coefficients below a magnitude threshold.

    ``mode`` is either ``"universal"`` (Donoho threshold estimated from the
    finest diagonal plane, overridable via ``threshold``) or ``"keep-fraction"``
    (retain the largest ``fraction`` of all detail coefficients).  The global
    approximation is never touched.
    """
    if mode == "keep-fraction":
        if fraction is None:
            raise ValueError("keep-fraction mode requires a fraction")
        flat = top_fraction_mask(pyr, fraction)
    elif mode == "universal":
        lam = universal_threshold(pyr) if threshold is None else float(threshold)
        flat = _stacked_magnitudes(pyr) >= lam
    else:
        raise ValueError(f"unknown threshold mode {mode!r}")
    return _apply_bool_masks(pyr, flat)


def extract_pow2_subregion(img: np.ndarray) -> np.ndarray:
    """Centered largest 2^N x 2^N crop of an arbitrary-size grid."""
    img = np.asarray(img)
    if img.ndim != 2 or min(img.shape) < 2:
        raise DimensionError(f"need a 2-D grid with both sides >= 2, got {img.shape}")
    side = 1 << (min(img.shape).bit_length() - 1)
    top = (img.shape[0] - side) // 2
    left = (img.shape[1] - side) // 2
    return img[top : top + side, left : left + side]


def block_mean(img: np.ndarray, factor: int) -> np.ndarray:
    """Downsample by averaging factor x factor blocks."""
    h, w = img.shape
    if h % factor or w % factor:
        raise DimensionError(f"shape {img.shape} not divisible by {factor}")
    return img.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def level_approximations(pyr: HaarPyramid, level: int) -> np.ndarray:
    """A^level reconstructed as global mean + difference field."""
    d = compute_difference_field(pyr, level)
    return pyr.global_approx + d.values
