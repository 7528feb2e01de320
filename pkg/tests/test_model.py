import math

import numpy as np
import pytest

from readoutsim import (
    AmplifierChain,
    DeviceParams,
    derive_params,
    noise_photons_from_temperature,
    snr_improvement_db,
    snr_theoretical,
)


def test_derived_params_paper_values(device, derived):
    assert derived.n_crit == pytest.approx(507.48, abs=0.5)
    assert derived.detuning_delta == pytest.approx(-3.0457e9)
    assert 2 * abs(derived.chi) == pytest.approx(3.0e6, abs=0.05e6)
    assert derived.chi < 0  # qubit below the cavity


def test_derive_params_is_pure(device):
    a = derive_params(device)
    b = derive_params(device)
    assert (a.detuning_delta, a.chi, a.n_crit) == (b.detuning_delta, b.chi, b.n_crit)


def test_n_crit_quadratic_in_coupling(device):
    d1 = derive_params(device)
    doubled = DeviceParams(device.cavity_freq, device.cavity_linewidth_kappa,
                           device.qubit_freq, device.anharmonicity,
                           2.0 * device.coupling_g, device.t1, device.t2_star)
    d2 = derive_params(doubled)
    assert d2.n_crit == d1.n_crit / 4.0  # powers of two scale exactly


def test_chi_override(device):
    dev = DeviceParams(device.cavity_freq, device.cavity_linewidth_kappa,
                       device.qubit_freq, device.anharmonicity,
                       device.coupling_g, device.t1, device.t2_star,
                       chi_override=-1.6e6)
    assert derive_params(dev).chi == -1.6e6


def test_zero_coupling_rejected(device):
    with pytest.raises(ValueError):
        DeviceParams(device.cavity_freq, device.cavity_linewidth_kappa,
                     device.qubit_freq, device.anharmonicity, 0.0,
                     device.t1, device.t2_star)


def test_non_dispersive_rejected():
    # |delta| = 0.5 GHz against g = 0.1 GHz: ratio 5 < 10
    with pytest.raises(ValueError, match="dispersive"):
        DeviceParams(8.0e9, 10e6, 7.5e9, 233e6, 100e6, 2.8e-6, 2.0e-6)


def test_coherence_time_validation(device):
    with pytest.raises(ValueError):
        DeviceParams(device.cavity_freq, device.cavity_linewidth_kappa,
                     device.qubit_freq, device.anharmonicity,
                     device.coupling_g, t1=1e-6, t2_star=2.1e-6)


def test_noise_photons_examples():
    assert noise_photons_from_temperature(0.8, 5.0353e9) == pytest.approx(3.31, abs=0.01)
    scaled = noise_photons_from_temperature(0.8, 5.0353e9) * 4.1 / 0.8
    assert noise_photons_from_temperature(4.1, 5.0353e9) == pytest.approx(scaled, rel=1e-12)
    assert noise_photons_from_temperature(0.0, 1e9) == 0.0
    with pytest.raises(ValueError):
        noise_photons_from_temperature(-1.0, 1e9)
    with pytest.raises(ValueError):
        noise_photons_from_temperature(1.0, 0.0)


def test_snr_theoretical_reproduces_measured_value():
    # sin_theta_bar solved from SNR_meas = 3.3 at the quoted parameters
    snr = snr_theoretical(24.0, 10e6, 200e-9, 3.2, 0.259)
    assert snr == pytest.approx(3.3, abs=0.01)


def test_snr_theoretical_limits():
    assert snr_theoretical(0.0, 10e6, 200e-9, 3.2, 0.5) == 0.0
    base = snr_theoretical(24.0, 10e6, 200e-9, 3.2, 0.5)
    doubled = snr_theoretical(24.0, 10e6, 400e-9, 3.2, 0.5)
    assert doubled == pytest.approx(base * math.sqrt(2.0), rel=1e-12)
    with pytest.raises(ValueError):
        snr_theoretical(24.0, 10e6, 200e-9, 3.2, 1.5)


def test_snr_squared_linear_in_tau_and_nbar():
    taus = np.linspace(50e-9, 500e-9, 10)
    snr2 = np.array([snr_theoretical(24.0, 10e6, t, 3.2, 0.3) ** 2 for t in taus])
    slope = snr2 / taus
    assert np.all(np.abs(slope / slope[0] - 1.0) < 1e-12)
    nbars = np.linspace(1.0, 100.0, 10)
    snr2 = np.array([snr_theoretical(n, 10e6, 2e-7, 3.2, 0.3) ** 2 for n in nbars])
    slope = snr2 / nbars
    assert np.all(np.abs(slope / slope[0] - 1.0) < 1e-12)


def test_snr_improvement_examples():
    assert snr_improvement_db(3.2, 16.97) == pytest.approx(6.7, abs=0.05)
    assert snr_improvement_db(5.0, 5.0) == 0.0
    assert snr_improvement_db(0.0, 0.0) == 0.0


def test_snr_improvement_antisymmetric():
    ab = snr_improvement_db(3.2, 16.97)
    ba = snr_improvement_db(16.97, 3.2)
    assert ab == pytest.approx(-ba, rel=1e-12)


def test_amplifier_chain_validation():
    with pytest.raises(ValueError):
        AmplifierChain(noise_photons=-0.1, power_gain_db=15.0, saturation_photons=50.0)
    with pytest.raises(ValueError):
        AmplifierChain(noise_photons=3.2, power_gain_db=15.0, saturation_photons=0.0)
