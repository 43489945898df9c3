"""Decoupled similarity-parameter recovery on Haar detail coefficients.

Scale comes from mean curvature radii of thresholded coefficient planes,
rotation from circular cross-correlation of slope histograms followed by
a residual-norm grid refinement, and translation from normalized
cross-correlation of in-band shifted detail planes maximized by a
rectangle-halving branch-and-bound search.

Rotation convention: an angle of +theta rotates coefficient slope angles
arctan(b/a) by +theta.  Spatial grids follow suit, so
``rotate_coeff_planes(planes_of(I), theta)`` approximates the planes of
the correspondingly rotated image.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace as dc_replace

import numpy as np
from scipy import ndimage

from .errors import (
    ContractError,
    DegenerateInputError,
    DimensionError,
    EstimationError,
)
from .haar import (
    DifferenceField,
    HaarPyramid,
    SparseMask,
    compute_difference_field,
    forward_haar,
    hard_threshold,
    universal_threshold,
)
from .inband import (
    HORIZONTAL,
    VERTICAL,
    InbandShifter,
    common_levels,
    quantize_shift,
)


def normalize_angle(theta: float) -> float:
    """Map an angle in degrees to (-180, 180]."""
    t = math.fmod(theta, 360.0)
    if t <= -180.0:
        t += 360.0
    elif t > 180.0:
        t -= 360.0
    return t


@dataclass
class SimilarityParams:
    """Scale, rotation (degrees), and translation of the similarity model."""

    sigma: float = 1.0
    theta: float = 0.0
    t_x: float = 0.0
    t_y: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ContractError(f"sigma must be positive, got {self.sigma}")
        self.theta = normalize_angle(self.theta)


@dataclass
class SlopeHistogram:
    """Histogram of arctan(b/a) slope angles over a 180-degree period."""

    counts: np.ndarray

    @property
    def bin_count(self) -> int:
        return self.counts.size

    @property
    def bin_width(self) -> float:
        return 180.0 / self.bin_count


@dataclass
class BnBIteration:
    center: tuple[float, float]
    width: float
    best_score: float
    best_point: tuple[float, float]
    top_corners: tuple[tuple[float, float], tuple[float, float]]


@dataclass
class BnBResult:
    t_x: float
    t_y: float
    ncc: float
    converged: bool
    trace: list[BnBIteration]

    @property
    def iterations(self) -> int:
        return len(self.trace)


@dataclass
class RegistrationReport:
    params: SimilarityParams
    ncc: float
    converged: bool
    trace: list[BnBIteration]
    elapsed_s: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.trace)


@dataclass
class RegisterConfig:
    """Knobs for the full pipeline; defaults suit noise-free registration."""

    tau: float = 1.9
    k: int | None = None  # None = auto rule from the recovered scale
    h_max: int = 6
    bins: int = 180
    threshold_mode: str = "universal"  # rotation/scale planes only
    threshold_fraction: float | None = None
    sparsity: float | None = None  # translation-path keep fraction
    magnitude_weighted: bool = False
    eps: float | None = None  # oscillation tolerance; default 2**-(h_max+1)
    refine_step: float = 0.1
    refine_span: float = 5.0
    with_scale: bool = True
    with_rotation: bool = True
    max_iterations: int = 64


# ---------------------------------------------------------------------------
# rotation
# ---------------------------------------------------------------------------


def wavelet_slope_histogram(
    a: np.ndarray,
    b: np.ndarray,
    mask: np.ndarray | None = None,
    bin_count: int = 180,
    magnitude_weighted: bool = False,
) -> SlopeHistogram:
    """Accumulate arctan(b/a) angles of retained coefficients into bins."""
    if a.shape != b.shape:
        raise DimensionError(f"plane shapes differ: {a.shape} vs {b.shape}")
    if bin_count < 2:
        raise ContractError("bin_count must be >= 2")
    av, bv = a.ravel(), b.ravel()
    keep = np.ones(av.size, dtype=bool) if mask is None else mask.ravel().copy()
    keep &= (av != 0) | (bv != 0)
    if not keep.any():
        raise DegenerateInputError("no nonzero retained coefficients for slope histogram")
    ang = np.degrees(np.arctan2(bv[keep], av[keep]))
    ang = (ang + 90.0) % 180.0 - 90.0
    weights = np.hypot(av[keep], bv[keep]) if magnitude_weighted else None
    counts, _ = np.histogram(ang, bins=bin_count, range=(-90.0, 90.0), weights=weights)
    return SlopeHistogram(counts.astype(np.float64))


def estimate_rotation_initial(h_i: SlopeHistogram, h_j: SlopeHistogram) -> float:
    """Circular cross-correlation argmax over the 180-degree period.

    Returns the angle by which ``h_j`` is shifted relative to ``h_i``,
    at bin resolution, mapped to (-90, 90].
    """
    if h_i.bin_count != h_j.bin_count:
        raise ContractError("histograms must share a bin count")
    if not h_i.counts.any() or not h_j.counts.any():
        raise DegenerateInputError("all-zero slope histogram")
    n = h_i.bin_count
    scores = np.array([np.dot(h_i.counts, np.roll(h_j.counts, -lag)) for lag in range(n)])
    lag = int(np.argmax(scores))
    angle = lag * h_i.bin_width
    if angle > 90.0:
        angle -= 180.0
    return angle


def rotate_coeff_planes(
    a: np.ndarray, b: np.ndarray, theta: float, order: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Channel-mix (a, b) by theta and rotate the grids to match.

    theta = 0 is an exact identity; out-of-support samples are zero.
    """
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise DimensionError("expected equal square planes")
    if theta == 0.0:
        return a.copy(), b.copy()
    quarter_turns, remainder = divmod(theta, 90.0)
    if remainder == 0.0:
        # exact on the grid: -theta in ndimage direction = +k quarter turns here
        k = int(quarter_turns) % 4
        a_sp = np.rot90(a, -k)
        b_sp = np.rot90(b, -k)
    else:
        a_sp = ndimage.rotate(a, -theta, reshape=False, order=order, mode="constant")
        b_sp = ndimage.rotate(b, -theta, reshape=False, order=order, mode="constant")
    phi = math.radians(theta)
    c, s = math.cos(phi), math.sin(phi)
    return c * a_sp - s * b_sp, s * a_sp + c * b_sp


def _disk_mask(side: int, margin: int = 3) -> np.ndarray:
    yy, xx = np.mgrid[:side, :side]
    c = (side - 1) / 2.0
    return (yy - c) ** 2 + (xx - c) ** 2 < (side / 2.0 - margin) ** 2


def refine_rotation(
    coeffs_i: tuple[np.ndarray, np.ndarray],
    coeffs_j: tuple[np.ndarray, np.ndarray],
    theta0: float,
    span: float = 5.0,
    step: float = 0.1,
) -> float:
    """Grid search around theta0 minimizing the summed plane residual norms.

    The grid consists of exact multiples of ``step`` so that a zero
    refinement result is exactly 0.0 (identity de-rotation downstream).
    When the minimizer lands on the window edge the search re-centers
    there and continues, so a slightly-off initial estimate still walks
    down to the local minimum.
    """
    a_i, b_i = coeffs_i
    a_j, b_j = coeffs_j
    mask = _disk_mask(a_i.shape[0])
    n_steps = int(round(span / step))
    cache: dict[int, float] = {}

    def cost_at(index: int) -> float:
        if index not in cache:
            a_r, b_r = rotate_coeff_planes(a_i, b_i, index * step)
            cache[index] = float(
                np.linalg.norm((a_r - a_j)[mask]) + np.linalg.norm((b_r - b_j)[mask])
            )
        return cache[index]

    center = round(theta0 / step)
    for _ in range(8):  # allow re-centering when the edge wins
        indices = range(center - n_steps, center + n_steps + 1)
        best = min(indices, key=cost_at)
        if best not in (center - n_steps, center + n_steps):
            return best * step
        center = best
    return center * step


def _rotation_residual(coeffs_i, coeffs_j, theta: float) -> float:
    a_r, b_r = rotate_coeff_planes(coeffs_i[0], coeffs_i[1], theta)
    mask = _disk_mask(a_r.shape[0])
    return float(
        np.linalg.norm((a_r - coeffs_j[0])[mask]) + np.linalg.norm((b_r - coeffs_j[1])[mask])
    )


# ---------------------------------------------------------------------------
# scale
# ---------------------------------------------------------------------------


def mean_curvature_radius(
    plane: np.ndarray,
    mask: np.ndarray | None = None,
    kappa_min: float = 1e-8,
) -> float:
    """Mean level-set curvature radius over retained plane locations.

    kappa = |f_xx f_y^2 - 2 f_x f_y f_xy + f_yy f_x^2| / (f_x^2 + f_y^2)^1.5
    via central differences.  The radius distribution is heavy-tailed
    (near-flat locations have huge radii), so the estimate is the median
    over the strongest-gradient quarter of the retained locations rather
    than a raw mean; locations with curvature below ``kappa_min`` are
    skipped.
    """
    f_y, f_x = np.gradient(plane)
    f_yy, _ = np.gradient(f_y)
    f_xy, f_xx = np.gradient(f_x)
    grad_sq = f_x**2 + f_y**2
    valid = np.zeros(plane.shape, dtype=bool)
    valid[1:-1, 1:-1] = True  # central differences only
    if mask is not None:
        valid &= mask
    valid &= grad_sq > 1e-24
    if valid.any():
        valid &= grad_sq >= np.percentile(grad_sq[valid], 75.0)
    num = np.abs(f_xx * f_y**2 - 2.0 * f_x * f_y * f_xy + f_yy * f_x**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(valid, num / np.maximum(grad_sq, 1e-300) ** 1.5, 0.0)
    valid &= kappa > kappa_min
    if not valid.any():
        raise DegenerateInputError("no locations with usable curvature")
    return float(np.median(1.0 / kappa[valid]))


def estimate_scale(
    pyr_i: HaarPyramid,
    pyr_j: HaarPyramid,
    mask_i: SparseMask | None = None,
    mask_j: SparseMask | None = None,
) -> float:
    """Scale of the sensed image relative to the reference, snapped to 2^p.

    Averages the sensed/reference mean-curvature-radius ratios of the
    finest horizontal and vertical planes: content magnified by sigma has
    level-set radii sigma times larger.
    """
    planes = []
    for pyr, mask in ((pyr_i, mask_i), (pyr_j, mask_j)):
        bands = pyr.details[-1]
        m = mask.bands[-1] if mask is not None else (None, None)
        planes.append(
            (
                mean_curvature_radius(bands.a, m[0]),
                mean_curvature_radius(bands.b, m[1]),
            )
        )
    (ra_i, rb_i), (ra_j, rb_j) = planes
    raw = 0.5 * (ra_j / ra_i + rb_j / rb_i)
    if not math.isfinite(raw) or raw <= 0:
        raise EstimationError(f"scale ratio not estimable (raw={raw})")
    return float(2.0 ** round(math.log2(raw)))


def rescale_coeffs(pyr: HaarPyramid, sigma: float) -> HaarPyramid:
    """Undo a power-of-two content scale by relabeling detail levels.

    sigma > 1: the log2(sigma) finest levels carry sub-reference detail
    and are dropped.  sigma < 1: the output gains zero-filled finest
    levels (detail the sensed image never recorded).
    """
    p = math.log2(sigma)
    if sigma <= 0 or p != int(p):
        raise ContractError(f"sigma must be a power of two, got {sigma}")
    p = int(p)
    out = pyr.copy()
    if p >= pyr.levels:
        raise ContractError(f"cannot drop {p} levels from a {pyr.levels}-level pyramid")
    if p > 0:
        out.details = out.details[:-p]
    else:
        from .haar import DetailBands

        for _ in range(-p):
            size = 1 << out.levels
            zeros = np.zeros((size, size))
            out.details.append(DetailBands(zeros, zeros.copy(), zeros.copy()))
    return out


# ---------------------------------------------------------------------------
# translation
# ---------------------------------------------------------------------------


def ncc_score(a_ref, b_ref, a_sen, b_sen) -> float:
    """Sum of the normalized cross-correlations of the two plane pairs, in [-2, 2]."""
    total = 0.0
    for ref, sen in ((a_ref, a_sen), (b_ref, b_sen)):
        ref = getattr(ref, "values", ref)
        sen = getattr(sen, "values", sen)
        if ref.shape != sen.shape:
            raise DimensionError(f"plane shapes differ: {ref.shape} vs {sen.shape}")
        n_ref = np.linalg.norm(ref)
        n_sen = np.linalg.norm(sen)
        if n_ref == 0.0 or n_sen == 0.0:
            raise DegenerateInputError("zero-norm plane in correlation")
        total += float(np.vdot(ref, sen)) / (n_ref * n_sen)
    return total


def _quantize_pair(t_x: float, t_y: float, h_max: int) -> tuple[int, int, int, float, float]:
    qx = quantize_shift(t_x, h_max, HORIZONTAL)
    qy = quantize_shift(t_y, h_max, VERTICAL)
    s_x, s_y, h = common_levels(qx, qy)
    return s_x, s_y, h, qx.value, qy.value


def _field_detail_planes(values: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(a, b) detail planes at reduction level k of a full-resolution field."""
    f = values
    if k > 1:
        m = 1 << (k - 1)
        f = f.reshape(f.shape[0] // m, m, f.shape[1] // m, m).mean(axis=(1, 3))
    p, q = f[0::2, 0::2], f[0::2, 1::2]
    r, s = f[1::2, 0::2], f[1::2, 1::2]
    return (p - q + r - s) / 4.0, (p + q - r - s) / 4.0


def _rotate_field(values: np.ndarray, angle: float) -> np.ndarray:
    """Grid rotation of a full-resolution field; quarter turns are exact."""
    quarter_turns, remainder = divmod(angle, 90.0)
    if remainder == 0.0:
        return np.rot90(values, int(quarter_turns) % 4).copy()
    return ndimage.rotate(values, angle, reshape=False, order=3, mode="grid-wrap")


def _dyadic_shift_field(values: np.ndarray, t_x: float, t_y: float, h_max: int) -> np.ndarray:
    """Losslessly shift a field on the dyadic lattice (replicate, roll, average)."""
    s_x, s_y, h, _, _ = _quantize_pair(t_x, t_y, h_max)
    if h == 0:
        return np.roll(values, (s_y, s_x), axis=(0, 1))
    m = 1 << h
    up = np.repeat(np.repeat(values, m, axis=0), m, axis=1)
    up = np.roll(up, (s_y, s_x), axis=(0, 1))
    return up.reshape(values.shape[0], m, values.shape[1], m).mean(axis=(1, 3))


def estimate_translation_bnb(
    d_ref: DifferenceField,
    sensed_planes: tuple[np.ndarray, np.ndarray],
    tau: float = 1.9,
    k: int = 1,
    h_max: int = 6,
    eps: float | None = None,
    max_iterations: int = 64,
) -> BnBResult:
    """Branch-and-bound search for the sub-pixel shift maximizing ncc_score.

    Starts from [-1, 1]^2.  Each iteration scores the 3x3 stencil of the
    current rectangle (corners, edge midpoints, center) on the 1/2**h_max
    lattice; the rectangle is replaced by the half-size rectangle spanned
    by the two best candidates.  Terminates when the best score exceeds
    ``tau``, the rectangle width reaches the lattice spacing, or the center
    oscillates (midpoint rule).
    """
    if not 0.0 < tau <= 2.0:
        raise ContractError(f"tau must be in (0, 2], got {tau}")
    if k < 1 or h_max < 1:
        raise ContractError("need k >= 1 and h_max >= 1")
    a_sen, b_sen = sensed_planes
    shifter = InbandShifter(d_ref)
    if eps is None:
        eps = 2.0 ** -(h_max + 1)
    lattice = 2.0**-h_max

    cache: dict[tuple[int, int, int], float] = {}

    def score(t_x: float, t_y: float) -> tuple[float, float, float]:
        s_x, s_y, h, v_x, v_y = _quantize_pair(t_x, t_y, h_max)
        key = (s_x, s_y, h)
        if key not in cache:
            a_ref, b_ref = shifter.planes(s_x, s_y, h, k + h)
            cache[key] = ncc_score(a_ref, b_ref, a_sen, b_sen)
        return cache[key], v_x, v_y

    center = (0.0, 0.0)
    half = 1.0
    best_score = -math.inf
    best_point = (0.0, 0.0)
    trace: list[BnBIteration] = []
    centers: list[tuple[float, float]] = []
    oscillations = 0
    converged = False

    while len(trace) < max_iterations:
        offsets = (-half, 0.0, half)
        candidates = []
        for dy in offsets:
            for dx in offsets:
                t_x = min(1.0, max(-1.0, center[0] + dx))
                t_y = min(1.0, max(-1.0, center[1] + dy))
                s, v_x, v_y = score(t_x, t_y)
                candidates.append((s, (v_x, v_y), (dx != 0.0 and dy != 0.0)))
        candidates.sort(key=lambda c: -c[0])
        top_two = (candidates[0][1], candidates[1][1])
        corners = [c for c in candidates if c[2]]
        if candidates[0][0] > best_score:
            best_score = candidates[0][0]
            best_point = candidates[0][1]
        trace.append(
            BnBIteration(center, 2 * half, candidates[0][0],
                         candidates[0][1], (corners[0][1], corners[1][1]))
        )
        if best_score > tau:
            converged = True
            break
        if 2 * half <= lattice:
            converged = True
            break
        new_center = (
            0.5 * (top_two[0][0] + top_two[1][0]),
            0.5 * (top_two[0][1] + top_two[1][1]),
        )
        centers.append(new_center)
        if len(centers) >= 4:
            c0, c1, c2, c3 = centers[-4:]
            if (
                abs(c0[0] - c2[0]) <= eps and abs(c0[1] - c2[1]) <= eps
                and abs(c1[0] - c3[0]) <= eps and abs(c1[1] - c3[1]) <= eps
                and (abs(c2[0] - c3[0]) > eps or abs(c2[1] - c3[1]) > eps)
            ):
                oscillations += 1
                if oscillations >= 3:
                    mid_x = 0.5 * (c2[0] + c3[0])
                    mid_y = 0.5 * (c2[1] + c3[1])
                    s, v_x, v_y = score(mid_x, mid_y)
                    if s > best_score:
                        best_score, best_point = s, (v_x, v_y)
                    converged = True
                    break
            else:
                oscillations = 0
        center = new_center
        half *= 0.5

    return BnBResult(best_point[0], best_point[1], best_score, converged, trace)


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


def _auto_k(sigma: float) -> int:
    return 1 if sigma < 1.0 else int(round(sigma)) + 1


def _threshold(pyr: HaarPyramid, config: RegisterConfig):
    if config.threshold_mode == "keep-fraction":
        return hard_threshold(pyr, "keep-fraction", fraction=config.threshold_fraction)
    return hard_threshold(pyr, "universal")


def _joint_threshold(
    pyr: HaarPyramid, config: RegisterConfig
) -> tuple[tuple[np.ndarray, np.ndarray], np.ndarray]:
    """Finest (a, b) planes thresholded on their joint magnitude, plus mask."""
    a = pyr.details[-1].a.copy()
    b = pyr.details[-1].b.copy()
    mag = np.hypot(a, b)
    if config.threshold_mode == "keep-fraction":
        keep = math.ceil(config.threshold_fraction * mag.size)
        order = np.argsort(-mag.ravel(), kind="stable")
        mask = np.zeros(mag.size, dtype=bool)
        mask[order[:keep]] = True
        mask = mask.reshape(mag.shape)
    else:
        mask = mag >= universal_threshold(pyr)
        if not mask.any():  # threshold above every coefficient: keep them all
            mask = mag > 0
    a[~mask] = 0.0
    b[~mask] = 0.0
    return (a, b), mask


def register_similarity(
    img_i: np.ndarray, img_j: np.ndarray, config: RegisterConfig | None = None
) -> RegistrationReport:
    """Recover (sigma, theta, t_x, t_y) mapping the reference onto the sensed image.

    Pipeline: Haar transforms -> hard threshold -> scale from curvature
    radii -> level realignment -> rotation from slope histograms plus
    residual refinement -> de-rotation of sensed planes -> translation by
    in-band branch and bound.  When the first translation estimate was
    obtained under a nonzero rotation, the rotation is re-refined against
    the in-band-shifted reference (which removes the translation bias of
    the plain residual) and the translation search repeats once.
    """
    config = config or RegisterConfig()
    started = time.perf_counter()
    pyr_i = forward_haar(img_i)
    pyr_j = forward_haar(img_j)

    sigma = 1.0
    if config.with_scale:
        # Curvature needs intact neighborhoods, so it reads the raw
        # planes; the threshold only selects which locations count.
        _, mask_i = _threshold(pyr_i, config)
        _, mask_j = _threshold(pyr_j, config)
        sigma = estimate_scale(pyr_i, pyr_j, mask_i, mask_j)

    # Align both pyramids onto a common level grid; translation is
    # measured on that grid and converted back to reference pixels.
    unit_scale = 1.0
    if sigma > 1.0:
        pyr_j = rescale_coeffs(pyr_j, sigma)
    elif sigma < 1.0:
        pyr_i = rescale_coeffs(pyr_i, 1.0 / sigma)
        unit_scale = sigma
    if pyr_i.levels != pyr_j.levels:
        raise EstimationError(
            f"level mismatch after rescaling: {pyr_i.levels} vs {pyr_j.levels}"
        )

    if config.sparsity is not None:
        pyr_i, _ = hard_threshold(pyr_i, "keep-fraction", fraction=config.sparsity)
        pyr_j, _ = hard_threshold(pyr_j, "keep-fraction", fraction=config.sparsity)

    # Rotation works on jointly thresholded planes: a location survives
    # only on its combined (a, b) magnitude.  Per-channel thresholding
    # would zero single channels, piling spurious slope mass into the
    # 0/90-degree bins that does not rotate with the content.
    fine_i, mask_i = _joint_threshold(pyr_i, config)
    fine_j, mask_j = _joint_threshold(pyr_j, config)

    theta = 0.0
    if config.with_rotation:
        h_i = wavelet_slope_histogram(
            *fine_i, mask_i, config.bins, config.magnitude_weighted
        )
        h_j = wavelet_slope_histogram(
            *fine_j, mask_j, config.bins, config.magnitude_weighted
        )
        theta0 = estimate_rotation_initial(h_i, h_j)
        theta = refine_rotation(fine_i, fine_j, theta0,
                                config.refine_span, config.refine_step)
        # A weakly oriented pair has a nearly flat slope histogram whose
        # correlation peak is arbitrary; anchor against that by also
        # refining from zero and keeping the lower-residual angle.
        if abs(theta0) > config.refine_span:
            anchored = refine_rotation(fine_i, fine_j, 0.0,
                                       config.refine_span, config.refine_step)
            if _rotation_residual(fine_i, fine_j, anchored) < _rotation_residual(
                fine_i, fine_j, theta
            ):
                theta = anchored
        # the slope histogram is 180-degree periodic; disambiguate by residual
        flipped = normalize_angle(theta + 180.0)
        if _rotation_residual(fine_i, fine_j, flipped) < _rotation_residual(
            fine_i, fine_j, theta
        ):
            theta = flipped

    levels = pyr_i.levels
    k = config.k if config.k is not None else _auto_k(sigma)
    if not 1 <= k <= levels:
        raise ContractError(f"reduction level k={k} outside [1, {levels}]")
    d_ref = compute_difference_field(pyr_i, levels)

    def run_bnb(planes: tuple[np.ndarray, np.ndarray]) -> BnBResult:
        return estimate_translation_bnb(
            d_ref, planes, config.tau, k, config.h_max,
            config.eps, config.max_iterations,
        )

    def translation_pass(theta_est: float) -> BnBResult:
        if theta_est == 0.0:
            bands = pyr_j.details[levels - k]
            return run_bnb((bands.a, bands.b))
        # De-rotate the sensed difference field at full resolution (far
        # less resampling blur than rotating the small coefficient planes)
        # and take its detail planes in the de-rotated frame.
        d_sen = compute_difference_field(pyr_j, levels).values
        derot = _rotate_field(d_sen, theta_est)
        bnb = run_bnb(_field_detail_planes(derot, k))
        # Residual resampling blur still biases the correlation peak
        # toward half-pixel fractions.  Measure that bias on the
        # reference itself (losslessly shifted to the current estimate,
        # pushed through the same rotate/de-rotate round trip) and
        # subtract it; for quarter-turn angles the round trip is exact
        # and the correction is identically zero.
        t_0 = (bnb.t_x, bnb.t_y)
        t_hat = t_0
        unit = 1 << config.h_max
        for _ in range(4):
            shifted = _dyadic_shift_field(d_ref.values, t_hat[0], t_hat[1], config.h_max)
            round_trip = _rotate_field(_rotate_field(shifted, -theta_est), theta_est)
            cal = run_bnb(_field_detail_planes(round_trip, k))
            t_new = (
                round((t_0[0] - (cal.t_x - t_hat[0])) * unit) / unit,
                round((t_0[1] - (cal.t_y - t_hat[1])) * unit) / unit,
            )
            t_new = (min(1.0, max(-1.0, t_new[0])), min(1.0, max(-1.0, t_new[1])))
            if t_new == t_hat:
                break
            t_hat = t_new
        return dc_replace(bnb, t_x=t_hat[0], t_y=t_hat[1])

    bnb = translation_pass(theta)

    if config.with_rotation and theta != 0.0:
        # re-refine against the shifted reference to strip translation bias
        shifter = InbandShifter(d_ref)
        s_x, s_y, h, _, _ = _quantize_pair(bnb.t_x, bnb.t_y, config.h_max)
        a_ref, b_ref = shifter.planes(s_x, s_y, h, 1 + h)
        fine2_j = (pyr_j.details[-1].a, pyr_j.details[-1].b)
        theta2 = refine_rotation((a_ref, b_ref), fine2_j, theta,
                                 config.refine_span, config.refine_step)
        if theta2 != theta:
            theta = theta2
            bnb = translation_pass(theta)

    params = SimilarityParams(
        sigma=sigma,
        theta=theta,
        t_x=bnb.t_x / unit_scale,
        t_y=bnb.t_y / unit_scale,
    )
    return RegistrationReport(
        params=params,
        ncc=bnb.ncc,
        converged=bnb.converged,
        trace=bnb.trace,
        elapsed_s=time.perf_counter() - started,
    )
