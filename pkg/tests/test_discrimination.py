import math

import numpy as np
import pytest

from readoutsim import (
    FilterSpec,
    PREPARE_E,
    PREPARE_G,
    PreparationModel,
    apply_filter,
    apply_filter_batch,
    build_histogram,
    compute_report,
    fit_threshold,
    gaussian_fidelity_bound,
    generate_shots,
    optimize_boxcar,
)
from readoutsim.discrimination import BOXCAR, MATCHED

from conftest import GROUND_SIGN


def test_boxcar_constant_record():
    spec = FilterSpec(BOXCAR, 0.0, 50e-9, quadrature_phase=0.7)
    c = 1.3 - 0.4j
    record = np.full(100, c)
    expected = (np.exp(-0.7j) * c).real
    assert apply_filter(record, spec, 1e-9) == pytest.approx(expected, rel=1e-12)
    assert apply_filter(np.zeros(100, complex), spec, 1e-9) == 0.0


def test_window_out_of_bounds():
    spec = FilterSpec(BOXCAR, 80e-9, 50e-9)
    with pytest.raises(ValueError, match="window"):
        apply_filter(np.zeros(100, complex), spec, 1e-9)


def test_matched_filter_normalizes_weights():
    w = np.array([3.0, 4.0])
    spec = FilterSpec(MATCHED, 0.0, 2e-9, weights=w)
    assert np.sum(np.abs(spec.weights) ** 2) == pytest.approx(1.0, rel=1e-12)


def test_matched_beats_boxcar_separation():
    # Cauchy-Schwarz: per unit noise the matched projection onto the mean
    # difference is at least the uniform-window projection
    rng = np.random.default_rng(42)
    n = 200
    diff = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    mu_g = np.zeros(n, complex)
    mu_e = diff
    box = FilterSpec(BOXCAR, 0.0, n * 1e-9)
    matched = FilterSpec(MATCHED, 0.0, n * 1e-9, weights=diff)
    sep_box = abs(apply_filter(mu_e, box, 1e-9) - apply_filter(mu_g, box, 1e-9))
    sep_matched = abs(apply_filter(mu_e, matched, 1e-9)
                      - apply_filter(mu_g, matched, 1e-9))
    # equal white noise gives sigma_box = sqrt(S/n), sigma_matched = sqrt(S)
    assert sep_matched >= sep_box * math.sqrt(n) - 1e-12


def test_threshold_between_separated_gaussians():
    rng = np.random.default_rng(1)
    g = rng.normal(0.0, 1.0, 20000)
    e = rng.normal(10.0, 1.0, 20000)
    fit = fit_threshold(g, e)
    assert not fit.zero_separability
    assert fit.threshold == pytest.approx(5.0, abs=0.2)


def test_threshold_translation_equivariance():
    # shifting one class by delta moves the optimal-gap midpoint by delta/2
    rng = np.random.default_rng(8)
    g = rng.normal(0.0, 1.0, 20000)
    e = rng.normal(10.0, 1.0, 20000)
    base = fit_threshold(g, e).threshold
    shifted = fit_threshold(g, e + 3.0).threshold
    assert shifted - base == pytest.approx(1.5, abs=1e-9)


def test_threshold_orientation_flip():
    rng = np.random.default_rng(9)
    g = rng.normal(10.0, 1.0, 5000)
    e = rng.normal(0.0, 1.0, 5000)
    fit = fit_threshold(g, e)
    rep = compute_report(g, e, fit.threshold)
    assert rep.error_g < 0.01 and rep.error_e < 0.01


def test_threshold_degenerate_identical():
    scores = np.array([1.0, 2.0, 3.0])
    fit = fit_threshold(scores, scores.copy())
    assert fit.zero_separability
    assert fit.threshold == pytest.approx(2.0)


def test_report_reproduces_quoted_fidelities():
    # 2.8% / 5.3% -> 91.9%, and 1.0% / 4.7% -> 94.3%, by construction
    g = np.concatenate([np.zeros(972), np.full(28, 10.0)])
    e = np.concatenate([np.full(947, 10.0), np.zeros(53)])
    rep = compute_report(g, e, 5.0)
    assert rep.error_g == pytest.approx(0.028, abs=1e-12)
    assert rep.error_e == pytest.approx(0.053, abs=1e-12)
    assert rep.fidelity == pytest.approx(0.919, abs=1e-12)
    g = np.concatenate([np.zeros(990), np.full(10, 10.0)])
    e = np.concatenate([np.full(953, 10.0), np.zeros(47)])
    rep = compute_report(g, e, 5.0)
    assert rep.fidelity == pytest.approx(0.943, abs=1e-12)


def test_report_degenerate_constant():
    scores = np.full(10, 2.5)
    rep = compute_report(scores, scores.copy(), 2.5)
    assert rep.snr_meas == 0.0
    assert rep.degenerate


def test_gaussian_bound_values():
    assert gaussian_fidelity_bound(3.3) == pytest.approx(0.99903, abs=5e-5)
    assert gaussian_fidelity_bound(0.0) == 0.0
    assert gaussian_fidelity_bound(math.inf) == 1.0
    with pytest.raises(ValueError):
        gaussian_fidelity_bound(-0.1)


def test_fidelity_converges_to_gaussian_bound():
    rng = np.random.default_rng(10)
    n = 100_000
    snr = 3.3
    g = rng.normal(0.0, 1.0, n // 2)
    e = rng.normal(2.0 * snr, 1.0, n // 2)
    fit = fit_threshold(g, e)
    rep = compute_report(g, e, fit.threshold)
    expected_err = 1.0 - gaussian_fidelity_bound(snr)
    p = expected_err / 2.0
    sigma = math.sqrt(2.0 * p * (1 - p) / (n / 2))
    assert abs((1.0 - rep.fidelity) - expected_err) < 3.0 * sigma


def test_affine_invariance_of_fidelity():
    rng = np.random.default_rng(11)
    g = rng.normal(0.0, 1.0, 8000)
    e = rng.normal(4.0, 1.3, 8000)
    fit = fit_threshold(g, e)
    rep = compute_report(g, e, fit.threshold)
    a, b = 3.7, -2.0
    fit2 = fit_threshold(a * g + b, a * e + b)
    rep2 = compute_report(a * g + b, a * e + b, fit2.threshold)
    assert rep2.error_g == rep.error_g
    assert rep2.error_e == rep.error_e
    assert rep2.fidelity == rep.fidelity


def test_snr_label_exchange_invariance():
    rng = np.random.default_rng(12)
    g = rng.normal(0.0, 1.0, 5000)
    e = rng.normal(3.0, 2.0, 5000)
    assert (compute_report(g, e, 1.5).snr_meas
            == compute_report(e, g, 1.5).snr_meas)


def test_histogram_single_scores():
    hist = build_histogram([1.0], [2.0], bins=4)
    assert hist.counts_g.sum() == 1
    assert hist.counts_e.sum() == 1
    assert (hist.counts_g > 0).sum() == 1
    assert (hist.counts_e > 0).sum() == 1


def test_histogram_degenerate_range():
    hist = build_histogram([2.0, 2.0], [2.0], bins=8)
    assert hist.degenerate
    assert hist.counts_g.tolist() == [2]
    assert hist.counts_e.tolist() == [1]


def test_histogram_conserves_counts():
    rng = np.random.default_rng(13)
    g = rng.normal(0, 1, 3777)
    e = rng.normal(5, 1, 2999)
    hist = build_histogram(g, e, bins=61)
    assert hist.counts_g.sum() == len(g)
    assert hist.counts_e.sum() == len(e)
    assert np.all(np.diff(hist.bin_edges) > 0)


def test_histogram_mid_region_tracks_decay_fraction(paper_setup):
    # shots whose jump lands near the front of the window populate the
    # plateau between the two score peaks; run noiseless so the peaks are
    # sharp (the decay statistics being checked do not depend on noise)
    s = paper_setup
    n = 30_000
    prep = PreparationModel(0.0, 0.0)
    intents = np.array([PREPARE_E] * n)
    scorer = lambda recs: apply_filter_batch(recs, s.filter_spec,
                                             s.pulse.sample_dt)
    run = generate_shots(intents, s.pulse, s.device, s.derived, prep, None,
                         s.chain, seed=31, ground_shift_sign=s.ground_shift_sign,
                         keep_records=False, postprocess=scorer)
    scores = run.processed
    clean = np.isnan(run.first_jump_times)
    mu_e = scores[clean].mean()
    mu_g = scores.min()  # fully-decayed end of the plateau
    d = mu_e - mu_g
    lo, hi = mu_g + 0.25 * d, mu_e - 0.25 * d
    mid_fraction = np.mean((scores > lo) & (scores < hi))
    expected = 1.0 - math.exp(-200e-9 / (2 * 2.8e-6))
    assert expected == pytest.approx(0.035, abs=1e-3)
    assert mid_fraction == pytest.approx(expected, abs=0.015)
    # independent oracle: partition by jump time against the window midpoint
    mid_time = 15e-9 + 100e-9
    oracle = np.mean(run.first_jump_times[~clean] < mid_time) * np.mean(~clean)
    assert mid_fraction == pytest.approx(oracle, abs=0.015)


def test_optimize_boxcar_finds_informative_window():
    # only samples [50, 150) separate the classes; at this noise level the
    # best boxcar must sit on that stretch
    rng = np.random.default_rng(14)
    n_shots, n_samples = 2000, 200
    sep = np.zeros(n_samples)
    sep[50:150] = 1.0
    noise_g = 2.0 * (rng.standard_normal((n_shots, n_samples))
                     + 1j * rng.standard_normal((n_shots, n_samples)))
    noise_e = 2.0 * (rng.standard_normal((n_shots, n_samples))
                     + 1j * rng.standard_normal((n_shots, n_samples)))
    rec_g = noise_g
    rec_e = sep[None, :] + noise_e
    spec = optimize_boxcar(rec_g, rec_e, 1e-9, grid=10e-9, min_length=30e-9)
    i0 = round(spec.window_start / 1e-9)
    i1 = i0 + round(spec.window_length / 1e-9)
    assert 30 <= i0 <= 70
    assert 130 <= i1 <= 170
    scores_g = apply_filter_batch(rec_g, spec, 1e-9)
    scores_e = apply_filter_batch(rec_e, spec, 1e-9)
    rep = compute_report(scores_g, scores_e,
                         fit_threshold(scores_g, scores_e).threshold)
    assert rep.fidelity > 0.9


def test_filter_spec_validation():
    with pytest.raises(ValueError):
        FilterSpec("mystery", 0.0, 1e-9)
    with pytest.raises(ValueError):
        FilterSpec(MATCHED, 0.0, 1e-9)  # weights missing
    with pytest.raises(ValueError):
        FilterSpec(BOXCAR, 0.0, 1e-9, weights=np.ones(3))
    with pytest.raises(ValueError):
        FilterSpec(BOXCAR, -1e-9, 1e-9)
