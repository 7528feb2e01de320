"""Monte Carlo shot engine: preparation errors, qubit jump paths, and
amplifier-noise-corrupted heterodyne records.

Reproducibility contract: every shot draws from its own counter-based
stream keyed by (seed, shot index) via the Philox bit generator, so results
are bit-identical regardless of worker count or generation order.  Draw
order within a shot is fixed: preparation uniforms, jump-time exponentials,
then one standard normal per record quadrature sample.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cavity import (
    EXCITED,
    GROUND,
    GROUND_SHIFT_SIGN_DEFAULT,
    ReadoutPulse,
    StatePath,
    simulate_field,
    steady_state_field,
)
from .model import AmplifierChain, DerivedParams, DeviceParams

PREPARE_G = "prepare_g"
PREPARE_E = "prepare_e"

_CHUNK = 2048  # shots per work unit; fixed so threading cannot change results


@dataclass(frozen=True)
class PreparationModel:
    """Qubit initialization imperfections: stationary thermal excited-state
    population, pi-pulse failure probability, and the pi-pulse length."""

    thermal_excited_population: float
    pi_pulse_error: float
    pi_pulse_duration: float = 40e-9

    def __post_init__(self):
        if not 0.0 <= self.thermal_excited_population < 1.0:
            raise ValueError("thermal_excited_population must lie in [0, 1)")
        if not 0.0 <= self.pi_pulse_error <= 1.0:
            raise ValueError("pi_pulse_error must lie in [0, 1]")
        if not self.pi_pulse_duration > 0:
            raise ValueError("pi_pulse_duration must be strictly positive")


@dataclass(frozen=True)
class NoiseModel:
    """Detection-chain noise referred to the chain input.

    The per-quadrature spectral density S = (2*n_noise + 1)/4 sets the
    variance of the complex Gaussian added to each record sample; n_noise=0
    leaves the vacuum floor S = 1/4.
    """

    n_noise: float
    seed: int = 0

    def __post_init__(self):
        if self.n_noise < 0:
            raise ValueError("n_noise must be >= 0")

    @property
    def spectral_density(self) -> float:
        return (2.0 * self.n_noise + 1.0) / 4.0


@dataclass(frozen=True, eq=False)
class Shot:
    """One simulated measurement: preparation intent, the true qubit state
    path, and the demodulated record quadratures."""

    index: int
    intent: str
    true_path: StatePath
    record_i: np.ndarray
    record_q: np.ndarray
    over_ncrit: bool = False
    over_saturation: bool = False

    @property
    def record(self) -> np.ndarray:
        return self.record_i + 1j * self.record_q

    @property
    def initial_state(self) -> str:
        return self.true_path.initial_state

    @property
    def first_jump_time(self) -> float:
        jt = self.true_path.jump_times
        return jt[0] if jt else math.nan


def shot_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-shot stream: Philox keyed by (seed, shot index)."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_preparation(intent: str, prep: PreparationModel,
                       rng: np.random.Generator) -> str:
    """Initial qubit state for an intent: thermal draw, then for prepare_e a
    pi flip that fails (leaves the state unchanged) with pi_pulse_error."""
    state = EXCITED if rng.random() < prep.thermal_excited_population else GROUND
    if intent == PREPARE_E:
        failed = rng.random() < prep.pi_pulse_error
        if not failed:
            state = GROUND if state == EXCITED else EXCITED
    elif intent != PREPARE_G:
        raise ValueError(f"intent must be {PREPARE_G!r} or {PREPARE_E!r}, got {intent!r}")
    return state


def sample_jump_path(initial: str, t1: float, p_th: float, duration: float,
                     rng: np.random.Generator) -> StatePath:
    """Alternating exponential waiting times: decay at 1/t1, excitation at
    the detailed-balance rate (1/t1)*p_th/(1-p_th), truncated at duration."""
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if not 0.0 <= p_th < 1.0:
        raise ValueError("p_th must lie in [0, 1)")
    rate_down = 0.0 if math.isinf(t1) else 1.0 / t1
    rate_up = rate_down * p_th / (1.0 - p_th)
    state = initial
    t = 0.0
    times = []
    while True:
        rate = rate_down if state == EXCITED else rate_up
        if rate <= 0.0:
            break
        t += rng.exponential(1.0 / rate)
        if t >= duration:
            break
        times.append(t)
        state = GROUND if state == EXCITED else EXCITED
    return StatePath(initial, tuple(times))


class RecordSimulator:
    """Record synthesis for one pulse: caches the two no-jump reference
    trajectories and turns state paths into heterodyne records.

    record[k] = sqrt(kappa_ang * dt) * alpha(t_k) + sqrt(S)*(x_k + i*y_k)
    with x, y standard normal (omitted when noise is None, for noiseless
    diagnostics)."""

    def __init__(self, pulse: ReadoutPulse, device: DeviceParams,
                 derived: DerivedParams, noise: NoiseModel | None = None,
                 chain: AmplifierChain | None = None,
                 ground_shift_sign: int = GROUND_SHIFT_SIGN_DEFAULT):
        self.pulse = pulse
        self.device = device
        self.derived = derived
        self.noise = noise
        self.chain = chain
        self.ground_shift_sign = ground_shift_sign
        kappa_ang = 2.0 * math.pi * device.cavity_linewidth_kappa
        self.signal_scale = math.sqrt(kappa_ang * pulse.sample_dt)
        self._refs = {}
        for s in (GROUND, EXCITED):
            traj = simulate_field(pulse, StatePath(s), device, derived,
                                  chain=chain, ground_shift_sign=ground_shift_sign)
            self._refs[s] = (self.signal_scale * traj.samples,
                             traj.over_ncrit, traj.over_saturation)
        self.n_samples = len(pulse.envelope)
        self.noise_sigma = math.sqrt(noise.spectral_density) if noise is not None else 0.0

    def reference_signal(self, state: str) -> np.ndarray:
        return self._refs[state][0]

    def signal_for_path(self, path: StatePath):
        """Noiseless signal trace and (over_ncrit, over_saturation) flags."""
        if not path.jump_times:
            return self._refs[path.initial_state]
        traj = simulate_field(self.pulse, path, self.device, self.derived,
                              chain=self.chain,
                              ground_shift_sign=self.ground_shift_sign)
        return (self.signal_scale * traj.samples, traj.over_ncrit,
                traj.over_saturation)

    def record_for_path(self, path: StatePath, rng: np.random.Generator):
        sig, over_n, over_s = self.signal_for_path(path)
        if self.noise is None:
            return sig.copy(), over_n, over_s
        draws = rng.standard_normal((self.n_samples, 2))
        rec = sig + self.noise_sigma * (draws[:, 0] + 1j * draws[:, 1])
        return rec, over_n, over_s


def generate_shot(intent: str, pulse: ReadoutPulse, device: DeviceParams,
                  derived: DerivedParams, prep: PreparationModel,
                  noise: NoiseModel | None, chain: AmplifierChain | None,
                  rng: np.random.Generator,
                  ground_shift_sign: int = GROUND_SHIFT_SIGN_DEFAULT,
                  index: int = 0) -> Shot:
    """Compose preparation, jump path, field and noise into one Shot."""
    sim = RecordSimulator(pulse, device, derived, noise, chain, ground_shift_sign)
    return _make_shot(sim, intent, prep, rng, index)


def _make_shot(sim: RecordSimulator, intent: str, prep: PreparationModel,
               rng: np.random.Generator, index: int) -> Shot:
    state0 = sample_preparation(intent, prep, rng)
    path = sample_jump_path(state0, sim.device.t1,
                            prep.thermal_excited_population,
                            sim.pulse.duration, rng)
    rec, over_n, over_s = sim.record_for_path(path, rng)
    return Shot(index=index, intent=intent, true_path=path,
                record_i=rec.real.copy(), record_q=rec.imag.copy(),
                over_ncrit=over_n, over_saturation=over_s)


@dataclass(eq=False)
class ShotRun:
    """Column-oriented batch of shots (records optional, dropped when a
    postprocess function reduces them)."""

    indices: np.ndarray
    intents: np.ndarray
    initial_states: np.ndarray
    final_states: np.ndarray
    first_jump_times: np.ndarray
    n_jumps: np.ndarray
    over_ncrit: np.ndarray
    over_saturation: np.ndarray
    sample_dt: float
    records: np.ndarray | None = None
    processed: np.ndarray | None = None

    @property
    def n_shots(self) -> int:
        return len(self.indices)

    def any_flagged(self) -> bool:
        return bool(self.over_ncrit.any() or self.over_saturation.any())


def steady_state_snr(eps: complex, device: DeviceParams, derived: DerivedParams,
                     drive_freq: float, tau: float, n_noise: float,
                     ground_shift_sign: int = GROUND_SHIFT_SIGN_DEFAULT) -> float:
    """Expected boxcar SNR for steady-state pointer fields and no jumps:
    sqrt(kappa_ang) * |alpha_e - alpha_g| * sqrt(tau) / sqrt(2*n_noise + 1)."""
    a_g = steady_state_field(eps, device, derived, drive_freq, GROUND, ground_shift_sign)
    a_e = steady_state_field(eps, device, derived, drive_freq, EXCITED, ground_shift_sign)
    kappa_ang = 2.0 * math.pi * device.cavity_linewidth_kappa
    return math.sqrt(kappa_ang) * abs(a_e - a_g) * math.sqrt(tau) / math.sqrt(2.0 * n_noise + 1.0)


def generate_shots(intents, pulse: ReadoutPulse, device: DeviceParams,
                   derived: DerivedParams, prep: PreparationModel,
                   noise: NoiseModel | None, chain: AmplifierChain | None,
                   seed: int, threads: int = 1,
                   ground_shift_sign: int = GROUND_SHIFT_SIGN_DEFAULT,
                   keep_records: bool = True, postprocess=None,
                   index_offset: int = 0) -> ShotRun:
    """Generate a batch of shots with per-(seed, index) streams.

    intents is a sequence of PREPARE_G / PREPARE_E values; shot i uses the
    stream keyed (seed, index_offset + i).  postprocess, when given, maps a
    (chunk_size, n_samples) record matrix to a per-shot array; records are
    then discarded chunk by chunk.  Output order is always index order.
    """
    intents = np.asarray(intents)
    n = len(intents)
    sim = RecordSimulator(pulse, device, derived, noise, chain, ground_shift_sign)
    chunks = [(a, min(a + _CHUNK, n)) for a in range(0, n, _CHUNK)]

    def work(bounds):
        a, b = bounds
        m = b - a
        init = np.empty(m, dtype="<U1")
        fin = np.empty(m, dtype="<U1")
        fjt = np.full(m, math.nan)
        njmp = np.zeros(m, dtype=int)
        o_n = np.zeros(m, dtype=bool)
        o_s = np.zeros(m, dtype=bool)
        recs = np.empty((m, sim.n_samples), dtype=complex)
        for i in range(m):
            rng = shot_rng(seed, index_offset + a + i)
            state0 = sample_preparation(intents[a + i], prep, rng)
            path = sample_jump_path(state0, device.t1,
                                    prep.thermal_excited_population,
                                    pulse.duration, rng)
            rec, over_n, over_s = sim.record_for_path(path, rng)
            recs[i] = rec
            init[i] = state0
            fin[i] = path.final_state
            if path.jump_times:
                fjt[i] = path.jump_times[0]
                njmp[i] = len(path.jump_times)
            o_n[i] = over_n
            o_s[i] = over_s
        proc = postprocess(recs) if postprocess is not None else None
        return init, fin, fjt, njmp, o_n, o_s, (recs if keep_records else None), proc

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]

    def cat(j):
        return np.concatenate([p[j] for p in parts])

    records = np.concatenate([p[6] for p in parts]) if keep_records else None
    processed = np.concatenate([p[7] for p in parts]) if postprocess is not None else None
    return ShotRun(
        indices=np.arange(index_offset, index_offset + n),
        intents=intents.copy(),
        initial_states=cat(0),
        final_states=cat(1),
        first_jump_times=cat(2),
        n_jumps=cat(3),
        over_ncrit=cat(4),
        over_saturation=cat(5),
        sample_dt=pulse.sample_dt,
        records=records,
        processed=processed,
    )
