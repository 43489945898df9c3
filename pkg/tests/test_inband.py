"""In-band shifted detail planes against the replicate-and-roll oracle."""

import numpy as np
import pytest

from wavereg import (
    ContractError,
    DyadicShift,
    HORIZONTAL,
    InbandShifter,
    LevelRangeError,
    VERTICAL,
    common_levels,
    compute_difference_field,
    forward_haar,
    lift_dfield,
    quantize_shift,
    shifted_detail_pair,
    shifted_detail_plane,
)

RNG = np.random.default_rng(77)


def dfield_of(img):
    pyr = forward_haar(img)
    return compute_difference_field(pyr, pyr.levels)


def oracle_planes(img, s_x, s_y, h, k):
    """Detail planes of the replicated, integer-rolled image: the slow path."""
    rep = np.repeat(np.repeat(img, 1 << h, axis=0), 1 << h, axis=1)
    rolled = np.roll(rep, (s_y, s_x), axis=(0, 1))
    pyr = forward_haar(rolled)
    bands = pyr.details[pyr.levels - k]
    return bands.a, bands.b


def test_quantize_shift_reduces_to_lowest_terms():
    q = quantize_shift(0.5, 6, HORIZONTAL)
    assert (q.numerator, q.added_levels) == (1, 1)
    q = quantize_shift(-0.25, 6, VERTICAL)
    assert (q.numerator, q.added_levels) == (-1, 2)
    q = quantize_shift(0.33, 6, HORIZONTAL)
    assert (q.numerator, q.added_levels) == (21, 6)
    assert q.value == 21 / 64
    q = quantize_shift(0.0, 6, HORIZONTAL)
    assert (q.numerator, q.added_levels) == (0, 0)


def test_dyadic_shift_relabeling():
    q = DyadicShift(3, 2, HORIZONTAL)
    lifted = q.at_levels(5)
    assert (lifted.numerator, lifted.added_levels) == (24, 5)
    assert lifted.value == q.value
    with pytest.raises(ContractError):
        q.at_levels(1)


def test_common_levels_aligns_on_larger_h():
    s_x, s_y, h = common_levels(
        quantize_shift(0.5, 6, HORIZONTAL), quantize_shift(0.75, 6, VERTICAL)
    )
    assert (s_x, s_y, h) == (2, 3, 2)


def test_axis_validation():
    with pytest.raises(ContractError):
        DyadicShift(1, 1, "diagonal")


def test_plane_equivalence_exhaustive_small_grids():
    """All dyadic shifts with h <= 4, all k, on 20 random 8x8 images."""
    worst = 0.0
    for _ in range(20):
        img = RNG.uniform(0.0, 255.0, (8, 8))
        shifter = InbandShifter(dfield_of(img))
        for h in range(5):
            period = 8 << h
            for s_x, s_y in [
                (0, 0),
                (1, 0),
                (0, 1),
                (3, 5),
                (period - 1, 1),
                (7, period - 3),
                (-1, -5),
            ]:
                for k in range(1, 3 + h + 1):
                    a, b = shifter.planes(s_x, s_y, h, k)
                    oa, ob = oracle_planes(img, s_x, s_y, h, k)
                    worst = max(
                        worst,
                        float(np.max(np.abs(a - oa))),
                        float(np.max(np.abs(b - ob))),
                    )
    assert worst < 1e-9


def test_periodicity_full_turn_is_identity():
    img = RNG.uniform(0.0, 255.0, (16, 16))
    shifter = InbandShifter(dfield_of(img))
    base = shifter.planes(0, 0, 2, 2)
    wrapped = shifter.planes(16 << 2, 16 << 2, 2, 2)
    assert np.max(np.abs(base[0] - wrapped[0])) < 1e-9
    assert np.max(np.abs(base[1] - wrapped[1])) < 1e-9


def test_integer_shift_matches_rolled_planes():
    img = RNG.uniform(0.0, 255.0, (16, 16))
    shifter = InbandShifter(dfield_of(img))
    a0, b0 = shifter.planes(0, 0, 0, 1)
    a2, b2 = shifter.planes(2, 4, 0, 1)
    assert np.max(np.abs(a2 - np.roll(a0, (2, 1), axis=(0, 1)))) < 1e-9
    assert np.max(np.abs(b2 - np.roll(b0, (2, 1), axis=(0, 1)))) < 1e-9


def test_brightness_invariance_of_planes():
    img = RNG.uniform(0.0, 255.0, (16, 16))
    s0 = InbandShifter(dfield_of(img))
    s1 = InbandShifter(dfield_of(img + 19.0))
    a0, b0 = s0.planes(5, 3, 3, 4)
    a1, b1 = s1.planes(5, 3, 3, 4)
    assert np.max(np.abs(a0 - a1)) < 1e-9
    assert np.max(np.abs(b0 - b1)) < 1e-9


def test_lift_dfield_replicates_blocks():
    img = RNG.uniform(0.0, 255.0, (8, 8))
    d = dfield_of(img)
    lifted = lift_dfield(d, 2)
    assert lifted.level == d.level + 2
    assert lifted.values.shape == (32, 32)
    assert np.array_equal(lifted.values[0:4, 0:4], np.full((4, 4), d.values[0, 0]))


def test_single_axis_helpers_match_general_path():
    img = RNG.uniform(0.0, 255.0, (16, 16))
    d = dfield_of(img)
    qx = quantize_shift(0.375, 6, HORIZONTAL)
    qy = quantize_shift(-0.5, 6, VERTICAL)
    pa, pb = shifted_detail_pair(d, qx, qy, 1)
    s_x, s_y, h = common_levels(qx, qy)
    a, b = InbandShifter(d).planes(s_x, s_y, h, 1)
    assert np.array_equal(pa.values, a)
    assert np.array_equal(pb.values, b)
    solo = shifted_detail_plane(d, qx, 1)
    a_only, _ = InbandShifter(d).planes(qx.numerator, 0, qx.added_levels, 1)
    assert np.array_equal(solo.values, a_only)


def test_level_range_validation():
    img = RNG.uniform(0.0, 255.0, (8, 8))
    shifter = InbandShifter(dfield_of(img))
    with pytest.raises(LevelRangeError):
        shifter.planes(0, 0, 1, 0)
    with pytest.raises(LevelRangeError):
        shifter.planes(0, 0, 1, 5)  # N + h = 4 levels available


def test_non_square_field_rejected():
    from wavereg import DifferenceField

    with pytest.raises(ContractError):
        InbandShifter(DifferenceField(3, np.zeros((8, 4))))
