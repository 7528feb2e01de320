import math

import pytest

from readoutsim import (
    AmplifierChain,
    DeviceParams,
    NoiseModel,
    PreparationModel,
    ReadoutPulse,
    ReadoutSetup,
    calibrate_drive,
    calibrated_boxcar,
    derive_params,
)

READ_FREQ = 8.0762e9
GROUND_SIGN = -1


@pytest.fixture(scope="session")
def device():
    return DeviceParams(cavity_freq=8.081e9, cavity_linewidth_kappa=10e6,
                        qubit_freq=5.0353e9, anharmonicity=233e6,
                        coupling_g=67.6e6, t1=2.8e-6, t2_star=2.0e-6)


@pytest.fixture(scope="session")
def derived(device):
    return derive_params(device)


@pytest.fixture(scope="session")
def slug_chain():
    return AmplifierChain(noise_photons=3.2, power_gain_db=15.0,
                          saturation_photons=50.0)


@pytest.fixture(scope="session")
def drive_eps(device, derived):
    return calibrate_drive(24.0, device, derived, READ_FREQ, GROUND_SIGN)


@pytest.fixture(scope="session")
def paper_setup(device, derived, slug_chain, drive_eps):
    """Default-configuration setup: 215 ns pulse, 200 ns window from 15 ns."""
    pulse = ReadoutPulse.rectangular(READ_FREQ, drive_eps, 215e-9, 1e-9)
    spec = calibrated_boxcar(pulse, device, derived, 15e-9, 200e-9, GROUND_SIGN)
    return ReadoutSetup(device=device, derived=derived,
                        prep=PreparationModel(0.018, 0.005),
                        noise=NoiseModel(n_noise=3.2), chain=slug_chain,
                        pulse=pulse, filter_spec=spec,
                        drive_amplitude=drive_eps,
                        ground_shift_sign=GROUND_SIGN)


@pytest.fixture(scope="session")
def steady_setup(derived, slug_chain, drive_eps):
    """Relaxation-free configuration with the 200 ns window in steady state:
    isolates the amplifier-noise SNR from preparation and decay."""
    dev = DeviceParams(cavity_freq=8.081e9, cavity_linewidth_kappa=10e6,
                       qubit_freq=5.0353e9, anharmonicity=233e6,
                       coupling_g=67.6e6, t1=math.inf, t2_star=1.0)
    der = derive_params(dev)
    pulse = ReadoutPulse.rectangular(READ_FREQ, drive_eps, 400e-9, 1e-9)
    spec = calibrated_boxcar(pulse, dev, der, 200e-9, 200e-9, GROUND_SIGN)
    return ReadoutSetup(device=dev, derived=der,
                        prep=PreparationModel(0.0, 0.0),
                        noise=NoiseModel(n_noise=3.2), chain=slug_chain,
                        pulse=pulse, filter_spec=spec,
                        drive_amplitude=drive_eps,
                        ground_shift_sign=GROUND_SIGN)
