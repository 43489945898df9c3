"""Sub-pixel image registration computed on Haar wavelet detail coefficients.

The library recovers the similarity transform (scale, rotation,
translation) between two images using only their wavelet detail
coefficients: translated detail planes are generated in closed form from
the reference's difference field, so no spatial-domain resampling is
needed anywhere on the estimation path.
"""

from .errors import (
    ContractError,
    DegenerateInputError,
    DimensionError,
    EstimationError,
    FormatError,
    LevelRangeError,
    WaveregError,
)
from .haar import (
    DetailBands,
    DifferenceField,
    HaarPyramid,
    SparseMask,
    block_mean,
    compute_difference_field,
    extract_pow2_subregion,
    forward_haar,
    hard_threshold,
    inverse_haar,
    level_approximations,
    universal_threshold,
)
from .inband import (
    HORIZONTAL,
    VERTICAL,
    DyadicShift,
    InbandShifter,
    ShiftedDetailPlane,
    common_levels,
    lift_dfield,
    quantize_shift,
    shifted_detail_pair,
    shifted_detail_plane,
)
from .estimate import (
    BnBIteration,
    BnBResult,
    RegisterConfig,
    RegistrationReport,
    SimilarityParams,
    SlopeHistogram,
    estimate_rotation_initial,
    estimate_scale,
    estimate_translation_bnb,
    mean_curvature_radius,
    ncc_score,
    normalize_angle,
    refine_rotation,
    register_similarity,
    rescale_coeffs,
    rotate_coeff_planes,
    wavelet_slope_histogram,
)
from .harness import (
    PAPER_STYLE,
    WAVELET_EXACT,
    ExperimentRecord,
    ScenarioSpec,
    add_gaussian_noise,
    evaluate_registration,
    image_metrics,
    oriented_texture,
    pentagon_image,
    run_experiment,
    run_scenario,
    shapes_image,
    sparsify_pyramid,
    synthesize_pair,
    synthetic_texture,
)
from .io import emit_csv, read_image, write_image

__version__ = "0.1.0"

__all__ = [
    "BnBIteration",
    "BnBResult",
    "ContractError",
    "DegenerateInputError",
    "DetailBands",
    "DifferenceField",
    "DimensionError",
    "DyadicShift",
    "EstimationError",
    "ExperimentRecord",
    "FormatError",
    "HaarPyramid",
    "HORIZONTAL",
    "InbandShifter",
    "LevelRangeError",
    "PAPER_STYLE",
    "RegisterConfig",
    "RegistrationReport",
    "ScenarioSpec",
    "ShiftedDetailPlane",
    "SimilarityParams",
    "SlopeHistogram",
    "SparseMask",
    "VERTICAL",
    "WAVELET_EXACT",
    "WaveregError",
    "add_gaussian_noise",
    "block_mean",
    "common_levels",
    "compute_difference_field",
    "emit_csv",
    "estimate_rotation_initial",
    "estimate_scale",
    "estimate_translation_bnb",
    "evaluate_registration",
    "extract_pow2_subregion",
    "forward_haar",
    "hard_threshold",
    "image_metrics",
    "inverse_haar",
    "level_approximations",
    "lift_dfield",
    "mean_curvature_radius",
    "ncc_score",
    "normalize_angle",
    "oriented_texture",
    "pentagon_image",
    "shapes_image",
    "quantize_shift",
    "read_image",
    "refine_rotation",
    "register_similarity",
    "rescale_coeffs",
    "rotate_coeff_planes",
    "run_experiment",
    "run_scenario",
    "shifted_detail_pair",
    "shifted_detail_plane",
    "sparsify_pyramid",
    "synthesize_pair",
    "synthetic_texture",
    "universal_threshold",
    "wavelet_slope_histogram",
    "write_image",
]
