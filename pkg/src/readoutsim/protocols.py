"""The four readout experiments run end-to-end on the shot engine:
single-shot fidelity, two-pulse QND correlation, ground-state
post-selection, and randomized benchmarking of the control pulse."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .cavity import (
    EXCITED,
    GROUND,
    GROUND_SHIFT_SIGN_DEFAULT,
    ReadoutPulse,
    StatePath,
)
from .discrimination import (
    BOXCAR,
    DiscriminationReport,
    FilterSpec,
    Histogram,
    apply_filter_batch,
    build_histogram,
    compute_report,
    fit_threshold,
    optimal_quadrature_phase,
)
from .model import AmplifierChain, DerivedParams, DeviceParams
from .trajectories import (
    PREPARE_E,
    PREPARE_G,
    NoiseModel,
    PreparationModel,
    RecordSimulator,
    sample_jump_path,
    shot_rng,
)


def derive_seed(seed: int, label: str) -> int:
    """Stable 64-bit child seed for a named sub-stream of a run."""
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = hashlib.blake2b(label.encode(), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True, eq=False)
class ReadoutSetup:
    """Everything a protocol needs: the physical system, the error models,
    the concrete measurement pulse and the score filter."""

    device: DeviceParams
    derived: DerivedParams
    prep: PreparationModel
    noise: NoiseModel | None
    chain: AmplifierChain | None
    pulse: ReadoutPulse
    filter_spec: FilterSpec
    drive_amplitude: float
    ground_shift_sign: int = GROUND_SHIFT_SIGN_DEFAULT
    threads: int = 1
    histogram_bins: int = 61


def calibrated_boxcar(pulse: ReadoutPulse, device: DeviceParams,
                      derived: DerivedParams, window_start: float,
                      window_length: float,
                      ground_shift_sign: int = GROUND_SHIFT_SIGN_DEFAULT) -> FilterSpec:
    """Boxcar over [window_start, window_start + window_length) with the
    demodulation phase set from the noiseless reference traces."""
    sim = RecordSimulator(pulse, device, derived, noise=None, chain=None,
                          ground_shift_sign=ground_shift_sign)
    probe = FilterSpec(BOXCAR, window_start, window_length, 0.0)
    i0, i1 = probe.window_indices(sim.n_samples, pulse.sample_dt)
    phase = optimal_quadrature_phase(sim.reference_signal(GROUND),
                                     sim.reference_signal(EXCITED), i0, i1)
    return FilterSpec(BOXCAR, window_start, window_length, phase)


def _intent_pattern(n_shots: int) -> np.ndarray:
    return np.where(np.arange(n_shots) % 2 == 0, PREPARE_G, PREPARE_E)


@dataclass(frozen=True, eq=False)
class FidelityResult:
    report: DiscriminationReport
    histogram: Histogram
    n_shots: int
    flagged_over_ncrit: int = 0
    flagged_over_saturation: int = 0


def run_fidelity(setup: ReadoutSetup, n_shots: int, seed: int) -> FidelityResult:
    """Prepare n_shots/2 per intent, score, fit the threshold on the run's
    own scores and report errors, fidelity, SNR and the histogram."""
    from .trajectories import generate_shots

    if n_shots < 2:
        raise ValueError("n_shots must be >= 2")
    intents = _intent_pattern(n_shots)
    scorer = lambda recs: apply_filter_batch(recs, setup.filter_spec,
                                             setup.pulse.sample_dt)
    run = generate_shots(intents, setup.pulse, setup.device, setup.derived,
                         setup.prep, setup.noise, setup.chain, seed,
                         threads=setup.threads,
                         ground_shift_sign=setup.ground_shift_sign,
                         keep_records=False, postprocess=scorer)
    scores = run.processed
    mask_g = intents == PREPARE_G
    scores_g, scores_e = scores[mask_g], scores[~mask_g]
    fit = fit_threshold(scores_g, scores_e)
    report = compute_report(scores_g, scores_e, fit.threshold)
    if fit.zero_separability:
        report = DiscriminationReport(
            threshold=report.threshold, snr_meas=report.snr_meas,
            error_g=report.error_g, error_e=report.error_e,
            fidelity=report.fidelity, degenerate=True)
    hist = build_histogram(scores_g, scores_e, setup.histogram_bins)
    return FidelityResult(report=report, histogram=hist, n_shots=n_shots,
                          flagged_over_ncrit=int(run.over_ncrit.sum()),
                          flagged_over_saturation=int(run.over_saturation.sum()))


def _calibration_threshold(setup: ReadoutSetup, pulse: ReadoutPulse,
                           spec: FilterSpec, seed: int,
                           n_cal: int = 6000) -> float:
    """Decision threshold for an auxiliary readout window, fitted on a
    dedicated deterministic calibration batch."""
    from .trajectories import generate_shots

    intents = _intent_pattern(n_cal)
    scorer = lambda recs: apply_filter_batch(recs, spec, pulse.sample_dt)
    run = generate_shots(intents, pulse, setup.device, setup.derived,
                         setup.prep, setup.noise, setup.chain, seed,
                         threads=setup.threads,
                         ground_shift_sign=setup.ground_shift_sign,
                         keep_records=False, postprocess=scorer)
    scores = run.processed
    mask_g = intents == PREPARE_G
    return fit_threshold(scores[mask_g], scores[~mask_g]).threshold


def _classify(scores: np.ndarray, threshold: float, e_high: bool) -> np.ndarray:
    """True where the score reads excited."""
    return scores > threshold if e_high else scores < threshold


@dataclass(frozen=True, eq=False)
class QndResult:
    """Conditional repeat probabilities versus inter-pulse delay with
    exponential fits (amplitude, decay_time, offset)."""

    delays: np.ndarray
    p_gg: np.ndarray
    p_ee: np.ndarray
    fit_gg: tuple
    fit_ee: tuple
    n_cond_g: np.ndarray
    n_cond_e: np.ndarray
    low_statistics: bool = False


def run_qnd(setup: ReadoutSetup, delays, n_shots: int, seed: int) -> QndResult:
    """Two consecutive measurement pulses after a pi/2 preparation.

    The pi/2 pulse is modeled as an equal-probability projective draw at
    the first measurement.  The qubit evolves freely (decay plus thermal
    excitation) through both pulses and the delay, which is measured from
    the end of pulse 1 to the start of pulse 2.  Both windows share one
    filter and one calibrated threshold.
    """
    delays = np.asarray(delays, dtype=float)
    if len(delays) == 0 or np.any(np.diff(delays) < 0) or delays[0] < 0:
        raise ValueError("delays must be non-negative and ascending")
    sim = RecordSimulator(setup.pulse, setup.device, setup.derived, setup.noise,
                          setup.chain, setup.ground_shift_sign)
    spec = setup.filter_spec
    dt = setup.pulse.sample_dt
    threshold = _calibration_threshold(setup, setup.pulse, spec,
                                       derive_seed(seed, "qnd-calibration"))
    ref_g = apply_filter_batch(sim.reference_signal(GROUND)[None, :], spec, dt)[0]
    ref_e = apply_filter_batch(sim.reference_signal(EXCITED)[None, :], spec, dt)[0]
    e_high = ref_e >= ref_g

    t1 = setup.device.t1
    p_th = setup.prep.thermal_excited_population
    duration = setup.pulse.duration
    p_gg, p_ee, n_g, n_e = [], [], [], []
    for di, delay in enumerate(delays):
        seed_d = derive_seed(seed, f"qnd-delay-{di}")
        rec1 = np.empty((n_shots, sim.n_samples), dtype=complex)
        rec2 = np.empty((n_shots, sim.n_samples), dtype=complex)
        for i in range(n_shots):
            rng = shot_rng(seed_d, i)
            state = EXCITED if rng.random() < 0.5 else GROUND
            path1 = sample_jump_path(state, t1, p_th, duration, rng)
            rec1[i], _, _ = sim.record_for_path(path1, rng)
            state = sample_jump_path(path1.final_state, t1, p_th, delay,
                                     rng).final_state
            path2 = sample_jump_path(state, t1, p_th, duration, rng)
            rec2[i], _, _ = sim.record_for_path(path2, rng)
        out1_e = _classify(apply_filter_batch(rec1, spec, dt), threshold, e_high)
        out2_e = _classify(apply_filter_batch(rec2, spec, dt), threshold, e_high)
        cond_g = ~out1_e
        cond_e = out1_e
        n_g.append(int(cond_g.sum()))
        n_e.append(int(cond_e.sum()))
        p_gg.append(float(np.mean(~out2_e[cond_g])) if cond_g.any() else math.nan)
        p_ee.append(float(np.mean(out2_e[cond_e])) if cond_e.any() else math.nan)

    p_gg, p_ee = np.asarray(p_gg), np.asarray(p_ee)
    n_g, n_e = np.asarray(n_g), np.asarray(n_e)
    fit_gg = fit_exponential(delays, p_gg) if len(delays) >= 4 else None
    fit_ee = fit_exponential(delays, p_ee) if len(delays) >= 4 else None
    low = bool(min(n_g.min(), n_e.min()) < 100)
    return QndResult(delays=delays, p_gg=p_gg, p_ee=p_ee,
                     fit_gg=(fit_gg.as_tuple() if fit_gg else None),
                     fit_ee=(fit_ee.as_tuple() if fit_ee else None),
                     n_cond_g=n_g, n_cond_e=n_e, low_statistics=low)


@dataclass(frozen=True, eq=False)
class PostSelectionResult:
    raw: DiscriminationReport
    selected: DiscriminationReport
    discard_fraction: float
    histogram_raw: Histogram
    histogram_selected: Histogram
    high_discard: bool = False


def run_postselection(setup: ReadoutSetup, n_shots: int, seed: int,
                      pre_duration: float = 320e-9,
                      wait: float = 300e-9) -> PostSelectionResult:
    """Prefix every shot with a pre-measurement pulse and an idle wait for
    cavity depletion; discard shots whose pre-measurement reads excited.

    The qubit evolves continuously from the thermal draw through the
    pre-pulse and the wait; the preparation pi pulse (for prepare_e) acts
    on whatever state survives.  The pre-readout has its own window and a
    threshold recalibrated on a dedicated calibration batch; the main
    readout threshold is fitted on the raw run and shared by the selected
    subset so the two reports are directly comparable.
    """
    if n_shots < 2:
        raise ValueError("n_shots must be >= 2")
    pre_pulse = ReadoutPulse.rectangular(setup.pulse.drive_freq,
                                         setup.drive_amplitude, pre_duration,
                                         setup.pulse.sample_dt)
    w_start = setup.filter_spec.window_start
    if w_start >= pre_duration:
        raise ValueError("pre-measurement shorter than the filter window start")
    pre_spec = calibrated_boxcar(pre_pulse, setup.device, setup.derived,
                                 w_start, pre_duration - w_start,
                                 setup.ground_shift_sign)
    pre_thr = _calibration_threshold(setup, pre_pulse, pre_spec,
                                     derive_seed(seed, "postselect-calibration"))
    sim_pre = RecordSimulator(pre_pulse, setup.device, setup.derived, setup.noise,
                              setup.chain, setup.ground_shift_sign)
    sim_main = RecordSimulator(setup.pulse, setup.device, setup.derived, setup.noise,
                               setup.chain, setup.ground_shift_sign)
    dt = setup.pulse.sample_dt
    pre_ref_g = apply_filter_batch(sim_pre.reference_signal(GROUND)[None, :],
                                   pre_spec, dt)[0]
    pre_ref_e = apply_filter_batch(sim_pre.reference_signal(EXCITED)[None, :],
                                   pre_spec, dt)[0]
    pre_e_high = pre_ref_e >= pre_ref_g

    t1 = setup.device.t1
    p_th = setup.prep.thermal_excited_population
    pi_err = setup.prep.pi_pulse_error
    intents = _intent_pattern(n_shots)
    pre_rec = np.empty((n_shots, sim_pre.n_samples), dtype=complex)
    main_rec = np.empty((n_shots, sim_main.n_samples), dtype=complex)
    for i in range(n_shots):
        rng = shot_rng(seed, i)
        state = EXCITED if rng.random() < p_th else GROUND
        pre_path = sample_jump_path(state, t1, p_th, pre_duration, rng)
        pre_rec[i], _, _ = sim_pre.record_for_path(pre_path, rng)
        state = sample_jump_path(pre_path.final_state, t1, p_th, wait,
                                 rng).final_state
        if intents[i] == PREPARE_E:
            failed = rng.random() < pi_err
            if not failed:
                state = GROUND if state == EXCITED else EXCITED
        main_path = sample_jump_path(state, t1, p_th, setup.pulse.duration, rng)
        main_rec[i], _, _ = sim_main.record_for_path(main_path, rng)

    pre_scores = apply_filter_batch(pre_rec, pre_spec, dt)
    keep = ~_classify(pre_scores, pre_thr, pre_e_high)
    scores = apply_filter_batch(main_rec, setup.filter_spec, dt)
    mask_g = intents == PREPARE_G

    raw_fit = fit_threshold(scores[mask_g], scores[~mask_g])
    raw = compute_report(scores[mask_g], scores[~mask_g], raw_fit.threshold)
    hist_raw = build_histogram(scores[mask_g], scores[~mask_g],
                               setup.histogram_bins)
    sel_g = scores[mask_g & keep]
    sel_e = scores[~mask_g & keep]
    if len(sel_g) == 0 or len(sel_e) == 0:
        raise ValueError("post-selection discarded an entire intent class")
    selected = compute_report(sel_g, sel_e, raw_fit.threshold)
    hist_sel = build_histogram(sel_g, sel_e, setup.histogram_bins)
    discard = 1.0 - float(keep.mean())
    return PostSelectionResult(raw=raw, selected=selected,
                               discard_fraction=discard,
                               histogram_raw=hist_raw,
                               histogram_selected=hist_sel,
                               high_discard=discard > 0.5)


@dataclass(frozen=True)
class ExponentialFit:
    """Least-squares fit of y = amplitude*exp(-x/decay_time) + offset."""

    amplitude: float
    decay_time: float
    offset: float
    residual_norm: float
    pinned: bool = False

    def as_tuple(self) -> tuple:
        return (self.amplitude, self.decay_time, self.offset)


def _lin_solve_exp(x: np.ndarray, y: np.ndarray, tau: float):
    basis = np.column_stack([np.exp(-x / tau), np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    resid = y - basis @ coef
    return coef[0], coef[1], float(np.sqrt(np.sum(resid ** 2)))


def fit_exponential(x, y) -> ExponentialFit:
    """Fit y = A*exp(-x/tau) + B by bounded search on tau with a linear
    sub-solve for (A, B).  tau is searched on a log grid spanning 1e-3 to
    1e3 times the x span and refined by golden section; hitting either
    bound (non-decaying or instantly-decaying data) sets the pinned flag.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 4:
        raise ValueError("need at least 4 points")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly ascending")
    if len(x) != len(y):
        raise ValueError("x and y must have equal length")
    span = x[-1] - x[0]
    lo, hi = span * 1e-3, span * 1e3
    taus = np.geomspace(lo, hi, 121)
    rss = np.array([_lin_solve_exp(x, y, t)[2] for t in taus])
    k = int(np.argmin(rss))
    a = taus[max(k - 1, 0)]
    b = taus[min(k + 1, len(taus) - 1)]
    # golden-section refinement on log(tau)
    la, lb = math.log(a), math.log(b)
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = lb - gr * (lb - la)
    d = la + gr * (lb - la)
    fc = _lin_solve_exp(x, y, math.exp(c))[2]
    fd = _lin_solve_exp(x, y, math.exp(d))[2]
    for _ in range(70):
        if fc <= fd:
            lb, d, fd = d, c, fc
            c = lb - gr * (lb - la)
            fc = _lin_solve_exp(x, y, math.exp(c))[2]
        else:
            la, c, fc = c, d, fd
            d = la + gr * (lb - la)
            fd = _lin_solve_exp(x, y, math.exp(d))[2]
    tau = math.exp((la + lb) / 2.0)
    amp, off, resid = _lin_solve_exp(x, y, tau)
    pinned = tau <= lo * 1.05 or tau >= hi * 0.95
    return ExponentialFit(amplitude=float(amp), decay_time=float(tau),
                          offset=float(off), residual_norm=resid, pinned=pinned)


@dataclass(frozen=True, eq=False)
class RbResult:
    """Randomized-benchmarking survival curve and its A*p^m + B fit."""

    sequence_lengths: np.ndarray
    survival: np.ndarray
    fitted_error_per_gate: float
    fit: tuple  # (A, p, B)
    degenerate_fit: bool = False


def _rb_linear_solve(m: np.ndarray, y: np.ndarray, p: float):
    basis = np.column_stack([np.power(p, m), np.ones_like(y)])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    resid = y - basis @ coef
    return coef[0], coef[1], float(np.sum(resid ** 2))


def _fit_rb_decay(lengths: np.ndarray, survival: np.ndarray):
    """Fit survival = A*p^m + B over p in [0, 1] (grid plus golden refine).

    Flat curves are unidentifiable; they resolve to p=1 (no decay) when the
    survival sits near 1 and to p=0 (instant depolarization) otherwise,
    with the degenerate flag set.
    """
    m = np.asarray(lengths, dtype=float)
    y = np.asarray(survival, dtype=float)
    if float(np.ptp(y)) < 1e-12:
        level = float(np.mean(y))
        p = 1.0 if level > 0.75 else 0.0
        return 0.0, p, level, True
    grid = np.unique(np.concatenate([np.linspace(0.0, 0.95, 40),
                                     1.0 - np.geomspace(0.05, 1e-7, 60),
                                     [1.0]]))
    rss = np.array([_rb_linear_solve(m, y, p)[2] for p in grid])
    k = int(np.argmin(rss))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc = _rb_linear_solve(m, y, c)[2]
    fd = _rb_linear_solve(m, y, d)[2]
    for _ in range(80):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = _rb_linear_solve(m, y, c)[2]
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = _rb_linear_solve(m, y, d)[2]
    p = (a + b) / 2.0
    amp, off, _ = _rb_linear_solve(m, y, p)
    return float(amp), float(p), float(off), False


def run_rb(gate_error: float, sequence_lengths, n_seq: int, rng) -> RbResult:
    """Abstract single-qubit randomized benchmarking: every random Clifford
    applies an independent depolarizing flip with probability gate_error;
    survival is the fraction of sequences with even flip parity.  The
    error per gate recovered from the fit is (1 - p)/2."""
    lengths = np.asarray(sequence_lengths, dtype=int)
    if len(lengths) == 0 or np.any(np.diff(lengths) <= 0) or lengths[0] < 0:
        raise ValueError("sequence_lengths must be ascending and non-negative")
    if not 0.0 <= gate_error <= 0.5:
        raise ValueError("gate_error must lie in [0, 0.5]")
    if n_seq < 1:
        raise ValueError("n_seq must be >= 1")
    if isinstance(rng, (int, np.integer)):
        rng = shot_rng(int(rng), 0)
    survival = np.empty(len(lengths))
    for j, m in enumerate(lengths):
        if m == 0:
            survival[j] = 1.0
            continue
        flips = rng.random((n_seq, m)) < gate_error
        even = (flips.sum(axis=1) % 2) == 0
        survival[j] = float(np.mean(even))
    amp, p, off, degenerate = _fit_rb_decay(lengths, survival)
    return RbResult(sequence_lengths=lengths, survival=survival,
                    fitted_error_per_gate=(1.0 - p) / 2.0,
                    fit=(amp, p, off), degenerate_fit=degenerate)
