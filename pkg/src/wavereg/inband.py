"""Detail coefficients of a sub-pixel-shifted image, computed in-band.

A shift of ``s / 2**h`` pixels is modeled as an integer shift of the
image virtually upsampled by ``2**h`` (zero-detail level insertion, which
under the averaging convention is pixel replication).  The detail planes
of the shifted image at any virtual level are then exact block sums of
the full-resolution difference field D^N with circular (periodic) index
wraparound, so everything reduces to O(1) prefix-sum lookups per output
cell.  No spatial-domain resampling happens anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, LevelRangeError
from .haar import DifferenceField

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


@dataclass(frozen=True)
class DyadicShift:
    """A shift of ``numerator / 2**added_levels`` pixels along one axis."""

    numerator: int
    added_levels: int
    axis: str

    def __post_init__(self):
        if self.axis not in (HORIZONTAL, VERTICAL):
            raise ContractError(f"unknown axis {self.axis!r}")
        if self.added_levels < 0:
            raise ContractError("added_levels must be >= 0")

    @property
    def value(self) -> float:
        return self.numerator / (1 << self.added_levels)

    @property
    def even_power(self) -> int:
        """Largest power of two dividing |numerator| (0 for odd or zero shift)."""
        s = abs(self.numerator)
        if s == 0:
            return 0
        return (s & -s).bit_length() - 1

    def at_levels(self, h: int) -> "DyadicShift":
        """Re-express the same shift with ``h`` added levels (h >= current)."""
        if h < self.added_levels:
            raise ContractError("cannot reduce added_levels without re-quantizing")
        return DyadicShift(self.numerator << (h - self.added_levels), h, self.axis)


def quantize_shift(shift: float, h_max: int, axis: str) -> DyadicShift:
    """Round a real pixel shift to the 1/2**h_max lattice, reduced to lowest terms."""
    if h_max < 0:
        raise ContractError("h_max must be >= 0")
    s = round(shift * (1 << h_max))
    h = h_max
    if s == 0:
        return DyadicShift(0, 0, axis)
    while s % 2 == 0 and h > 0:
        s //= 2
        h -= 1
    return DyadicShift(s, h, axis)


def common_levels(shift_x: DyadicShift, shift_y: DyadicShift) -> tuple[int, int, int]:
    """(s_x, s_y, h) with both shifts expressed at the larger h."""
    h = max(shift_x.added_levels, shift_y.added_levels)
    return (
        shift_x.numerator << (h - shift_x.added_levels),
        shift_y.numerator << (h - shift_y.added_levels),
        h,
    )


@dataclass
class ShiftedDetailPlane:
    """One detail plane of the shifted image at virtual level N + h - k."""

    reduction_level: int
    values: np.ndarray


class InbandShifter:
    """Caches prefix sums of D^N so repeated shift evaluations are cheap."""

    def __init__(self, dfield: DifferenceField):
        values = np.asarray(dfield.values, dtype=np.float64)
        side = values.shape[0]
        if values.ndim != 2 or values.shape[1] != side or side & (side - 1):
            raise ContractError(f"difference field must be square power-of-two, got {values.shape}")
        self.side = side
        self.levels = side.bit_length() - 1  # N
        pad = side + 1
        self._pp = np.zeros((pad, pad))
        self._pp[1:, 1:] = values.cumsum(axis=0).cumsum(axis=1)
        self._rowp = np.zeros((pad, pad))
        self._rowp[:side, 1:] = values.cumsum(axis=1)
        self._colp = np.zeros((pad, pad))
        self._colp[1:, :side] = values.cumsum(axis=0)
        self._dpad = np.zeros((pad, pad))
        self._dpad[:side, :side] = values

    def _prefix(self, y, x, h: int):
        """Sum of the replicated field over [0, y) x [0, x) in virtual coords."""
        cy, ry = np.divmod(y, 1 << h)
        cx, rx = np.divmod(x, 1 << h)
        return (
            (4**h) * self._pp[cy, cx]
            + float(1 << h) * (rx * self._colp[cy, cx] + ry * self._rowp[cy, cx])
            + ry * rx * self._dpad[cy, cx]
        )

    def _wrapped(self, y, x, h: int):
        """Prefix sum extended periodically to coords in [0, 2 * side * 2**h]."""
        period = self.side << h
        qy, ry = np.divmod(y, period)
        qx, rx = np.divmod(x, period)
        total = (4**h) * self._pp[self.side, self.side]
        edge_y = self._prefix(np.asarray(period), rx, h)
        edge_x = self._prefix(ry, np.asarray(period), h)
        return qy * qx * total + qy * edge_y + qx * edge_x + self._prefix(ry, rx, h)

    def _rect(self, y0, y1, x0, x1, h: int):
        return (
            self._wrapped(y1, x1, h)
            - self._wrapped(y0, x1, h)
            - self._wrapped(y1, x0, h)
            + self._wrapped(y0, x0, h)
        )

    def planes(self, s_x: int, s_y: int, h: int, k: int) -> tuple[np.ndarray, np.ndarray]:
        """(a, b) detail planes at virtual level N + h - k after shifting
        the image by (s_x / 2**h, s_y / 2**h) pixels with circular wraparound."""
        n_virtual = self.levels + h
        if not 1 <= k <= n_virtual:
            raise LevelRangeError(f"reduction level {k} outside [1, {n_virtual}]")
        period = self.side << h
        out_side = 1 << (n_virtual - k)
        block = 1 << k
        half = block >> 1
        idx = np.arange(out_side, dtype=np.int64)
        y0 = ((idx * block - s_y) % period)[:, None]
        x0 = ((idx * block - s_x) % period)[None, :]
        norm = 4.0**k
        a = (
            self._rect(y0, y0 + block, x0, x0 + half, h)
            - self._rect(y0, y0 + block, x0 + half, x0 + block, h)
        ) / norm
        b = (
            self._rect(y0, y0 + half, x0, x0 + block, h)
            - self._rect(y0 + half, y0 + block, x0, x0 + block, h)
        ) / norm
        return a, b


def lift_dfield(dfield: DifferenceField, h0: int) -> DifferenceField:
    """Replicate each entry into a 2**h0 x 2**h0 block (virtual level addition)."""
    if h0 < 0:
        raise ContractError("h0 must be >= 0")
    values = np.repeat(np.repeat(dfield.values, 1 << h0, axis=0), 1 << h0, axis=1)
    return DifferenceField(dfield.level + h0, values)


def shifted_detail_plane(
    dfield: DifferenceField, shift: DyadicShift, k: int
) -> ShiftedDetailPlane:
    """Single-axis shift: the a-plane for a horizontal shift, b-plane for vertical."""
    shifter = InbandShifter(dfield)
    if shift.axis == HORIZONTAL:
        a, _ = shifter.planes(shift.numerator, 0, shift.added_levels, k)
        return ShiftedDetailPlane(k, a)
    _, b = shifter.planes(0, shift.numerator, shift.added_levels, k)
    return ShiftedDetailPlane(k, b)


def shifted_detail_pair(
    dfield: DifferenceField, shift_x: DyadicShift, shift_y: DyadicShift, k: int
) -> tuple[ShiftedDetailPlane, ShiftedDetailPlane]:
    """Both detail planes under a 2-D shift (horizontal then vertical pass)."""
    if shift_x.axis != HORIZONTAL or shift_y.axis != VERTICAL:
        raise ContractError("shift_x must be horizontal and shift_y vertical")
    s_x, s_y, h = common_levels(shift_x, shift_y)
    a, b = InbandShifter(dfield).planes(s_x, s_y, h, k)
    return ShiftedDetailPlane(k, a), ShiftedDetailPlane(k, b)
