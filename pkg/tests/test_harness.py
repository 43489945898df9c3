"""Simulation harness: pair synthesis, perturbations, metrics, runner."""

import math

import numpy as np
import pytest

from wavereg import (
    ContractError,
    DegenerateInputError,
    DimensionError,
    PAPER_STYLE,
    RegisterConfig,
    ScenarioSpec,
    SimilarityParams,
    WAVELET_EXACT,
    add_gaussian_noise,
    evaluate_registration,
    forward_haar,
    image_metrics,
    pentagon_image,
    run_experiment,
    run_scenario,
    shapes_image,
    sparsify_pyramid,
    synthesize_pair,
    synthetic_texture,
)

RNG = np.random.default_rng(2718)


def test_synthesize_pair_sizes_and_identity():
    src = synthetic_texture(128, 0)
    ref, sen = synthesize_pair(src, SimilarityParams(1.0, 0.0, 0.5, 0.5))
    assert ref.shape == sen.shape == (64, 64)
    ref2, sen2 = synthesize_pair(src, SimilarityParams())
    assert np.array_equal(ref2, sen2)


def test_synthesize_pair_scale_changes_sensed_side():
    src = synthetic_texture(128, 0)
    _, sen = synthesize_pair(src, SimilarityParams(sigma=0.5))
    assert sen.shape == (32, 32)
    _, sen = synthesize_pair(src, SimilarityParams(sigma=2.0))
    assert sen.shape == (128, 128)


def test_synthesize_pair_validation():
    with pytest.raises(DimensionError):
        synthesize_pair(np.zeros((6, 6)), SimilarityParams())
    src = synthetic_texture(64, 0)
    with pytest.raises(ContractError):
        synthesize_pair(src, SimilarityParams(theta=10.0), WAVELET_EXACT)


def test_exact_mode_round_trip_registers_exactly():
    src = synthetic_texture(128, 4)
    params = SimilarityParams(1.0, 0.0, 0.25, -0.125)
    spec = ScenarioSpec(
        name="exact", source=src, params=params, mode=WAVELET_EXACT,
        config=RegisterConfig(tau=2.0, with_rotation=False),
    )
    rec = run_scenario(spec)
    assert (rec.est_params.t_x, rec.est_params.t_y) == (0.25, -0.125)
    assert rec.psnr_db == math.inf and rec.mse == 0.0


def test_noise_matches_requested_snr():
    img = synthetic_texture(256, 7)
    out = add_gaussian_noise(img, 20.0, 123)
    noise = out - img
    signal_power = np.mean((img - img.mean()) ** 2)
    measured = 10.0 * math.log10(signal_power / np.mean(noise**2))
    assert abs(measured - 20.0) < 0.1


def test_noise_identity_and_errors():
    img = synthetic_texture(64, 7)
    assert np.array_equal(add_gaussian_noise(img, math.inf, 0), img)
    with pytest.raises(DegenerateInputError):
        add_gaussian_noise(np.full((16, 16), 3.0), 10.0, 0)
    assert np.array_equal(
        add_gaussian_noise(img, 15.0, 42), add_gaussian_noise(img, 15.0, 42)
    )


def test_sparsify_counts():
    pyr = forward_haar(synthetic_texture(256, 1))
    assert pyr.detail_count() == 65535
    sparse, mask = sparsify_pyramid(pyr, 0.07)
    assert mask.retained_count == 4588
    full, full_mask = sparsify_pyramid(pyr, 1.0)
    assert full_mask.retained_count == 65535
    assert np.array_equal(full.details[-1].a, pyr.details[-1].a)


def test_sparsify_random_mode_is_seeded():
    pyr = forward_haar(synthetic_texture(64, 2))
    _, m1 = sparsify_pyramid(pyr, 0.1, mode="random", seed=5)
    _, m2 = sparsify_pyramid(pyr, 0.1, mode="random", seed=5)
    for b1, b2 in zip(m1.bands, m2.bands):
        for p1, p2 in zip(b1, b2):
            assert np.array_equal(p1, p2)
    with pytest.raises(ContractError):
        sparsify_pyramid(pyr, 0.1, mode="banana")


def test_image_metrics_closed_forms():
    img = synthetic_texture(64, 3)
    assert image_metrics(img, img) == (math.inf, 0.0)
    psnr, mse = image_metrics(img, img + 2.0)
    assert mse == pytest.approx(4.0)
    assert psnr == pytest.approx(10.0 * math.log10(255.0**2 / 4.0))
    other = synthetic_texture(64, 4)
    _, mse2 = image_metrics(img, other)
    assert mse2 == pytest.approx(float(np.mean((img - other) ** 2)))
    with pytest.raises(DimensionError):
        image_metrics(img, img[:32, :32])


def test_evaluate_registration_exact_mode_is_binary():
    from wavereg.harness import _exact_shift

    ref = synthetic_texture(128, 5)
    sen = _exact_shift(ref, 0.5, 0.25, 6)
    right = SimilarityParams(1.0, 0.0, 0.5, 0.25)
    wrong = SimilarityParams(1.0, 0.0, 0.5, 0.3125)
    assert evaluate_registration(ref, sen, right, WAVELET_EXACT) == (math.inf, 0.0)
    psnr, mse = evaluate_registration(ref, sen, wrong, WAVELET_EXACT)
    assert mse > 0.0 and psnr < math.inf


def test_run_experiment_requires_scenarios_and_records_failures():
    with pytest.raises(ContractError):
        run_experiment([])
    # constant source cannot carry an SNR -> recorded as outlier, run continues
    bad = ScenarioSpec(
        name="degenerate", source=np.full((64, 64), 9.0),
        params=SimilarityParams(), mode=WAVELET_EXACT, snr_db=20.0,
    )
    good = ScenarioSpec(
        name="fine", source=shapes_image(64, 1),
        params=SimilarityParams(1.0, 0.0, 0.5, 0.0), mode=WAVELET_EXACT,
        config=RegisterConfig(tau=2.0, with_rotation=False),
    )
    records = run_experiment([bad, good])
    assert [r.scenario for r in records] == ["degenerate", "fine"]
    assert records[0].outlier and math.isnan(records[0].est_params.t_x)
    assert not records[1].outlier
    assert records[1].est_params.t_x == 0.5


def test_run_scenario_deterministic():
    spec = ScenarioSpec(
        name="noise", source=pentagon_image(128, 0),
        params=SimilarityParams(1.0, 0.0, 0.25, 0.0), mode=WAVELET_EXACT,
        snr_db=30.0, seed=9,
        config=RegisterConfig(tau=2.0, with_rotation=False, with_scale=False),
    )
    r1, r2 = run_scenario(spec), run_scenario(spec)
    assert (r1.est_params.t_x, r1.est_params.t_y) == (r2.est_params.t_x, r2.est_params.t_y)
    assert r1.mse == r2.mse


def test_scenario_validation():
    src = synthetic_texture(64, 0)
    with pytest.raises(ContractError):
        ScenarioSpec(name="x", source=src, params=SimilarityParams(), mode="weird")
    with pytest.raises(ContractError):
        ScenarioSpec(name="x", source=src, params=SimilarityParams(), sparsity=0.0)


def test_generators_are_deterministic_and_in_range():
    for maker in (synthetic_texture, pentagon_image, shapes_image):
        img1, img2 = maker(64, 3), maker(64, 3)
        assert np.array_equal(img1, img2)
        assert img1.min() >= 0.0 and img1.max() <= 255.0
