"""Device constants and closed-form quantities for dispersive readout.

All frequencies in this package are ordinary frequencies in Hz (the values
quoted as omega/2pi on a spectrum analyzer).  Formulas that need angular
frequencies convert internally with a factor 2*pi; the conversion happens
in exactly one place per formula and is noted in the docstring.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import hbar, k as k_B

# Minimum detuning-to-coupling ratio for the dispersive approximation.
DISPERSIVE_RATIO_MIN = 10.0


@dataclass(frozen=True)
class DeviceParams:
    """Static qubit-cavity system constants.

    cavity_freq, cavity_linewidth_kappa, qubit_freq, anharmonicity and
    coupling_g are ordinary frequencies in Hz; t1 and t2_star are in
    seconds.  chi_override, when set, replaces the two-level dispersive
    shift g^2/Delta (use it to fold in the transmon correction
    alpha/(Delta+alpha) if desired).
    """

    cavity_freq: float
    cavity_linewidth_kappa: float
    qubit_freq: float
    anharmonicity: float
    coupling_g: float
    t1: float
    t2_star: float
    chi_override: float | None = None

    def __post_init__(self):
        for name in ("cavity_freq", "cavity_linewidth_kappa", "qubit_freq",
                     "anharmonicity", "coupling_g"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.t1 > 0:
            raise ValueError("t1 must be strictly positive")
        if self.t2_star > 2.0 * self.t1:
            raise ValueError("t2_star cannot exceed 2*t1")
        if self.t2_star <= 0:
            raise ValueError("t2_star must be strictly positive")
        detuning = abs(self.qubit_freq - self.cavity_freq)
        if detuning < DISPERSIVE_RATIO_MIN * self.coupling_g:
            raise ValueError(
                "not in the dispersive regime: |qubit_freq - cavity_freq| = "
                f"{detuning:.4g} Hz is less than {DISPERSIVE_RATIO_MIN:g} x "
                f"coupling_g = {DISPERSIVE_RATIO_MIN * self.coupling_g:.4g} Hz"
            )


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from DeviceParams: signed detuning Delta (Hz),
    signed dispersive half-shift chi (Hz), and the critical photon number."""

    detuning_delta: float
    chi: float
    n_crit: float


@dataclass(frozen=True)
class AmplifierChain:
    """Detection chain summary: added noise photons referred to the chain
    input, power gain in dB (bookkeeping only; discrimination is
    gain-invariant), and the maximum tolerable intracavity-equivalent
    photon number before saturation."""

    noise_photons: float
    power_gain_db: float
    saturation_photons: float

    def __post_init__(self):
        if self.noise_photons < 0:
            raise ValueError("noise_photons must be >= 0")
        if not self.saturation_photons > 0:
            raise ValueError("saturation_photons must be strictly positive")


def derive_params(device: DeviceParams) -> DerivedParams:
    """Compute Delta = f_q - f_c, chi = g^2/Delta and n_crit = Delta^2/(4 g^2).

    Signs are preserved: Delta and chi are negative when the qubit sits
    below the cavity.  chi uses the two-level dispersive convention unless
    device.chi_override is set.
    """
    delta = device.qubit_freq - device.cavity_freq
    g = device.coupling_g
    if abs(delta) < DISPERSIVE_RATIO_MIN * g:
        raise ValueError("dispersive approximation invalid: |Delta|/g < 10")
    chi = device.chi_override if device.chi_override is not None else g * g / delta
    n_crit = delta * delta / (4.0 * g * g)
    return DerivedParams(detuning_delta=delta, chi=chi, n_crit=n_crit)


def noise_photons_from_temperature(temperature: float, reference_freq: float) -> float:
    """Rayleigh-Jeans noise quanta k_B*T / (hbar * 2*pi*f).

    temperature in kelvin, reference_freq an ordinary frequency in Hz
    (converted to angular inside).  No +1/2 vacuum term; this matches the
    classical estimate commonly quoted for amplifier noise temperatures.
    """
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if not reference_freq > 0:
        raise ValueError("reference_freq must be strictly positive")
    return k_B * temperature / (hbar * 2.0 * math.pi * reference_freq)


def snr_theoretical(n_bar: float, kappa: float, tau: float,
                    n_noise: float, sin_theta_bar: float) -> float:
    """Expected amplitude SNR 2*sin_theta_bar*sqrt(n_bar*kappa_ang*tau/(2*n_noise+1)).

    kappa is supplied as an ordinary frequency in Hz and converted to the
    angular rate kappa_ang = 2*pi*kappa inside.  sin_theta_bar is the
    average quadrature transmission coefficient in [0, 1].
    """
    if min(n_bar, kappa, tau, n_noise) < 0:
        raise ValueError("n_bar, kappa, tau and n_noise must be >= 0")
    if not 0.0 <= sin_theta_bar <= 1.0:
        raise ValueError("sin_theta_bar must lie in [0, 1]")
    kappa_ang = 2.0 * math.pi * kappa
    return 2.0 * sin_theta_bar * math.sqrt(n_bar * kappa_ang * tau / (2.0 * n_noise + 1.0))


def snr_improvement_db(n_noise_a: float, n_noise_b: float) -> float:
    """Power-SNR gain in dB of chain a over chain b at fixed signal:
    10*log10((2*n_b+1)/(2*n_a+1))."""
    if n_noise_a < 0 or n_noise_b < 0:
        raise ValueError("noise photon numbers must be >= 0")
    return 10.0 * math.log10((2.0 * n_noise_b + 1.0) / (2.0 * n_noise_a + 1.0))
