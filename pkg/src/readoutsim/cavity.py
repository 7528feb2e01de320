"""Qubit-state-conditioned cavity field under an arbitrary drive envelope.

In the frame rotating at the drive frequency the field obeys

    d(alpha)/dt = -[i*(delta + pull_s) + kappa_ang/2] * alpha - i*eps(t)

where delta = 2*pi*(cavity_freq - drive_freq), kappa_ang = 2*pi*kappa and
pull_s = +/- 2*pi*|chi| is the qubit-state-dependent cavity pull.  This is
the single point where ordinary frequencies (Hz) are converted to angular
rates.  The equation is linear with piecewise-constant coefficients, so it
is integrated exactly: within every span of constant drive amplitude and
fixed qubit state the closed-form solution

    alpha(t) = alpha_ss + (alpha(t0) - alpha_ss) * exp(-gamma*(t - t0))

is evaluated directly, with alpha_ss = -i*eps/gamma.  The field is
continuous across qubit jumps; only gamma changes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import AmplifierChain, DerivedParams, DeviceParams

# Ground-state pull sign convention: +1 puts the ground-state cavity
# resonance at cavity_freq + |chi| (toggle via config for the opposite).
GROUND_SHIFT_SIGN_DEFAULT = +1

GROUND = "g"
EXCITED = "e"


def _check_state(state: str) -> str:
    if state not in (GROUND, EXCITED):
        raise ValueError(f"qubit state must be '{GROUND}' or '{EXCITED}', got {state!r}")
    return state


@dataclass(frozen=True, eq=False)
class ReadoutPulse:
    """A measurement tone: drive frequency (Hz), complex envelope samples
    (drive strength in sqrt(photons)/s, uniform sampling) and sample_dt (s)."""

    drive_freq: float
    envelope: np.ndarray
    sample_dt: float

    def __post_init__(self):
        env = np.asarray(self.envelope, dtype=complex)
        object.__setattr__(self, "envelope", env)
        if env.ndim != 1 or env.size == 0:
            raise ValueError("envelope must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(env.view(float))):
            raise ValueError("envelope must be finite-valued")
        if not self.sample_dt > 0:
            raise ValueError("sample_dt must be strictly positive")
        if not self.drive_freq > 0:
            raise ValueError("drive_freq must be strictly positive")

    @property
    def duration(self) -> float:
        return len(self.envelope) * self.sample_dt

    @property
    def sample_times(self) -> np.ndarray:
        return np.arange(len(self.envelope)) * self.sample_dt

    @classmethod
    def rectangular(cls, drive_freq: float, amplitude: complex, duration: float,
                    sample_dt: float = 1e-9) -> "ReadoutPulse":
        n = int(round(duration / sample_dt))
        if n < 1:
            raise ValueError("duration shorter than one sample")
        return cls(drive_freq, np.full(n, complex(amplitude)), sample_dt)

    @classmethod
    def from_segments(cls, drive_freq: float, segment_amplitudes, duration: float,
                      sample_dt: float = 1e-9) -> "ReadoutPulse":
        """Piecewise-constant envelope: equal-length segments spanning duration."""
        amps = np.asarray(segment_amplitudes, dtype=complex)
        n = int(round(duration / sample_dt))
        if n < len(amps):
            raise ValueError("fewer samples than segments")
        edges = np.linspace(0, n, len(amps) + 1).round().astype(int)
        env = np.empty(n, dtype=complex)
        for i, a in enumerate(amps):
            env[edges[i]:edges[i + 1]] = a
        return cls(drive_freq, env, sample_dt)


@dataclass(frozen=True)
class StatePath:
    """Qubit state record over a pulse: initial state plus strictly
    ascending jump times (each jump toggles g <-> e)."""

    initial_state: str
    jump_times: tuple = ()

    def __post_init__(self):
        _check_state(self.initial_state)
        times = tuple(float(t) for t in self.jump_times)
        object.__setattr__(self, "jump_times", times)
        if any(t < 0 for t in times):
            raise ValueError("jump times must be >= 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("jump times must be strictly ascending")

    def state_at(self, t: float) -> str:
        flips = sum(1 for jt in self.jump_times if jt <= t)
        if flips % 2 == 0:
            return self.initial_state
        return EXCITED if self.initial_state == GROUND else GROUND

    @property
    def final_state(self) -> str:
        if len(self.jump_times) % 2 == 0:
            return self.initial_state
        return EXCITED if self.initial_state == GROUND else GROUND


@dataclass(frozen=True, eq=False)
class FieldTrajectory:
    """Sampled intracavity amplitude alpha(t_k), t_k = k*sample_dt."""

    samples: np.ndarray
    sample_dt: float
    over_ncrit: bool = False
    over_saturation: bool = False

    @property
    def max_photons(self) -> float:
        return float(np.max(np.abs(self.samples) ** 2))

    def photon_numbers(self) -> np.ndarray:
        return np.abs(self.samples) ** 2


def field_decay_rate(device: DeviceParams, derived: DerivedParams, drive_freq: float,
                     state: str, ground_shift_sign: int = GROUND_SHIFT_SIGN_DEFAULT) -> complex:
    """Complex angular rate gamma_s = i*(delta + pull_s) + kappa_ang/2."""
    _check_state(state)
    delta = 2.0 * math.pi * (device.cavity_freq - drive_freq)
    pull = 2.0 * math.pi * abs(derived.chi) * ground_shift_sign
    if state == EXCITED:
        pull = -pull
    kappa_ang = 2.0 * math.pi * device.cavity_linewidth_kappa
    return 1j * (delta + pull) + kappa_ang / 2.0


def steady_state_field(eps: complex, device: DeviceParams, derived: DerivedParams,
                       drive_freq: float, state: str,
                       ground_shift_sign: int = GROUND_SHIFT_SIGN_DEFAULT) -> complex:
    """Driven steady state alpha_ss = -i*eps/gamma_s for a constant drive."""
    return -1j * eps / field_decay_rate(device, derived, drive_freq, state, ground_shift_sign)


def _envelope_runs(envelope: np.ndarray):
    """Run-length encoding of a piecewise-constant envelope: (start, stop, value)."""
    change = np.flatnonzero(envelope[1:] != envelope[:-1]) + 1
    starts = np.concatenate(([0], change))
    stops = np.concatenate((change, [len(envelope)]))
    return [(int(a), int(b), complex(envelope[a])) for a, b in zip(starts, stops)]


def simulate_field(pulse: ReadoutPulse, path: StatePath, device: DeviceParams,
                   derived: DerivedParams, chain: AmplifierChain | None = None,
                   ground_shift_sign: int = GROUND_SHIFT_SIGN_DEFAULT,
                   initial_field: complex = 0j) -> FieldTrajectory:
    """Integrate the conditioned cavity field along a qubit state path.

    Returns alpha at the pulse sample times.  The integration is exact for
    the piecewise-constant envelope: closed-form exponential stepping
    between envelope changes, sample boundaries and jump times (jumps may
    fall inside a sample; the field stays continuous, the pull flips sign).
    Exceeding n_crit or the chain saturation sets flags on the result, it
    does not abort.
    """
    kappa = device.cavity_linewidth_kappa
    if pulse.sample_dt > 1.0 / (20.0 * kappa):
        raise ValueError(
            f"sample_dt {pulse.sample_dt:g} s too coarse for kappa {kappa:g} Hz "
            f"(need <= {1.0 / (20.0 * kappa):g} s)"
        )
    duration = pulse.duration
    if any(t > duration for t in path.jump_times):
        raise ValueError("jump times must lie within the pulse duration")

    gam = {
        s: field_decay_rate(device, derived, pulse.drive_freq, s, ground_shift_sign)
        for s in (GROUND, EXCITED)
    }
    other = {GROUND: EXCITED, EXCITED: GROUND}
    env = pulse.envelope
    dt = pulse.sample_dt
    n = len(env)
    run_end = np.empty(n, dtype=int)  # end sample of the constant-envelope run at k
    for a, b, _ in _envelope_runs(env):
        run_end[a:b] = b
    out = np.empty(n, dtype=complex)

    jumps = list(path.jump_times) + [math.inf]
    j = 0
    state = path.initial_state
    alpha = complex(initial_field)
    t_cur = 0.0
    k = 0
    while k < n:
        # a jump exactly at t_cur takes effect from t_cur onward
        while jumps[j] <= t_cur:
            state = other[state]
            j += 1
        g = gam[state]
        out[k] = alpha
        # vectorized fill while the envelope is constant and no jump intervenes
        k_jump = n if math.isinf(jumps[j]) else int(math.floor(jumps[j] / dt + 1e-9))
        k_stop = min(n - 1, run_end[k], k_jump)
        if k_stop > k:
            ss = -1j * env[k] / g
            decay = np.exp(-g * dt * np.arange(1, k_stop - k + 1))
            out[k + 1:k_stop + 1] = ss + (alpha - ss) * decay
            alpha = out[k_stop]
            t_cur = k_stop * dt
            k = k_stop
            if k == n - 1:
                break
            continue
        # scalar advance across the next sample, splitting at jumps inside it
        t_next = (k + 1) * dt
        eps = env[k]
        while jumps[j] < t_next:
            u = jumps[j]
            if u > t_cur:
                ss = -1j * eps / g
                alpha = ss + (alpha - ss) * np.exp(-g * (u - t_cur))
                t_cur = u
            state = other[state]
            g = gam[state]
            j += 1
        ss = -1j * eps / g
        alpha = ss + (alpha - ss) * np.exp(-g * (t_next - t_cur))
        t_cur = t_next
        k += 1

    max_n = float(np.max(np.abs(out) ** 2)) if n else 0.0
    over_ncrit = max_n > derived.n_crit
    over_sat = chain is not None and max_n > chain.saturation_photons
    return FieldTrajectory(samples=out, sample_dt=dt,
                           over_ncrit=over_ncrit, over_saturation=over_sat)


def calibrate_drive(target_n_bar: float, device: DeviceParams, derived: DerivedParams,
                    drive_freq: float,
                    ground_shift_sign: int = GROUND_SHIFT_SIGN_DEFAULT) -> float:
    """Constant drive amplitude eps whose steady states average to target_n_bar.

    The mean photon number (n_g + n_e)/2 scales as eps^2, so the inversion
    is closed-form: eps = sqrt(target / n_bar(eps=1)).
    """
    if target_n_bar < 0:
        raise ValueError("target_n_bar must be >= 0")
    if target_n_bar == 0:
        return 0.0
    n_unit = 0.0
    for s in (GROUND, EXCITED):
        g = field_decay_rate(device, derived, drive_freq, s, ground_shift_sign)
        n_unit += 0.5 / abs(g) ** 2
    return math.sqrt(target_n_bar / n_unit)


def photon_depletion_fraction(wait: float, kappa: float) -> float:
    """Residual cavity energy fraction exp(-2*pi*kappa*wait) after a wait."""
    if wait < 0:
        raise ValueError("wait must be >= 0")
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    return math.exp(-2.0 * math.pi * kappa * wait)
