import cmath
import math

import numpy as np
import pytest

from readoutsim import (
    AmplifierChain,
    ReadoutPulse,
    StatePath,
    calibrate_drive,
    photon_depletion_fraction,
    simulate_field,
    steady_state_field,
)
from readoutsim.cavity import EXCITED, GROUND, field_decay_rate

from conftest import GROUND_SIGN, READ_FREQ


def test_steady_state_analytic(device, derived, drive_eps):
    pulse = ReadoutPulse.rectangular(READ_FREQ, drive_eps, 1.5e-6, 1e-9)
    for state in (GROUND, EXCITED):
        traj = simulate_field(pulse, StatePath(state), device, derived,
                              ground_shift_sign=GROUND_SIGN)
        a_ss = steady_state_field(drive_eps, device, derived, READ_FREQ, state,
                                  GROUND_SIGN)
        rel = abs(traj.samples[-1] - a_ss) / abs(a_ss)
        assert rel < 1e-9


def test_free_decay(device, derived):
    a0 = 2.0 - 1.5j
    pulse = ReadoutPulse(READ_FREQ, np.zeros(300), 1e-9)
    traj = simulate_field(pulse, StatePath(EXCITED), device, derived,
                          ground_shift_sign=GROUND_SIGN, initial_field=a0)
    gam = field_decay_rate(device, derived, READ_FREQ, EXCITED, GROUND_SIGN)
    t = pulse.sample_times
    expected = a0 * np.exp(-gam * t)
    assert np.allclose(traj.samples, expected, rtol=1e-10, atol=0)


def test_calibrated_drive_hits_mean_photon_number(device, derived, drive_eps):
    n_g = abs(steady_state_field(drive_eps, device, derived, READ_FREQ, GROUND,
                                 GROUND_SIGN)) ** 2
    n_e = abs(steady_state_field(drive_eps, device, derived, READ_FREQ, EXCITED,
                                 GROUND_SIGN)) ** 2
    assert (n_g + n_e) / 2 == pytest.approx(24.0, rel=1e-9)
    # and through the integrator, to the paper tolerance
    pulse = ReadoutPulse.rectangular(READ_FREQ, drive_eps, 1.5e-6, 1e-9)
    n_sim = []
    for state in (GROUND, EXCITED):
        traj = simulate_field(pulse, StatePath(state), device, derived,
                              ground_shift_sign=GROUND_SIGN)
        n_sim.append(abs(traj.samples[-1]) ** 2)
    assert sum(n_sim) / 2 == pytest.approx(24.0, abs=0.1)


def test_calibrate_drive_scaling(device, derived):
    assert calibrate_drive(0.0, device, derived, READ_FREQ) == 0.0
    e1 = calibrate_drive(12.0, device, derived, READ_FREQ)
    e2 = calibrate_drive(24.0, device, derived, READ_FREQ)
    assert e2 == pytest.approx(e1 * math.sqrt(2.0), rel=1e-12)


def test_linearity_in_drive(device, derived, drive_eps):
    path = StatePath(EXCITED, (60e-9, 150e-9, 201.5e-9))
    p1 = ReadoutPulse.rectangular(READ_FREQ, drive_eps, 300e-9, 1e-9)
    p2 = ReadoutPulse.rectangular(READ_FREQ, 2.0 * drive_eps, 300e-9, 1e-9)
    t1 = simulate_field(p1, path, device, derived, ground_shift_sign=GROUND_SIGN)
    t2 = simulate_field(p2, path, device, derived, ground_shift_sign=GROUND_SIGN)
    assert np.allclose(2.0 * t1.samples, t2.samples, rtol=1e-12, atol=0)


def test_time_translation(device, derived, drive_eps):
    shift_samples = 40
    shift = shift_samples * 1e-9
    env = np.full(260, drive_eps, dtype=complex)
    jumps = (55e-9, 130.7e-9)
    base = simulate_field(ReadoutPulse(READ_FREQ, env, 1e-9),
                          StatePath(EXCITED, jumps), device, derived,
                          ground_shift_sign=GROUND_SIGN)
    shifted_env = np.concatenate([np.zeros(shift_samples), env])
    shifted = simulate_field(ReadoutPulse(READ_FREQ, shifted_env, 1e-9),
                             StatePath(EXCITED, tuple(j + shift for j in jumps)),
                             device, derived, ground_shift_sign=GROUND_SIGN)
    assert np.allclose(shifted.samples[shift_samples:], base.samples,
                       rtol=1e-12, atol=1e-30)
    assert np.all(shifted.samples[:shift_samples] == 0)


def test_jump_at_zero_equals_flipped_initial(device, derived, drive_eps):
    pulse = ReadoutPulse.rectangular(READ_FREQ, drive_eps, 200e-9, 1e-9)
    a = simulate_field(pulse, StatePath(GROUND, (0.0,)), device, derived,
                       ground_shift_sign=GROUND_SIGN)
    b = simulate_field(pulse, StatePath(EXCITED), device, derived,
                       ground_shift_sign=GROUND_SIGN)
    assert np.array_equal(a.samples, b.samples)


def test_mid_sample_jump_against_closed_form(device, derived, drive_eps):
    # one jump inside sample 4: compose the two exact exponential pieces
    dt = 1e-9
    t_jump = 4.35e-9
    pulse = ReadoutPulse.rectangular(READ_FREQ, drive_eps, 10e-9, dt)
    traj = simulate_field(pulse, StatePath(EXCITED, (t_jump,)), device, derived,
                          ground_shift_sign=GROUND_SIGN)
    gam_e = field_decay_rate(device, derived, READ_FREQ, EXCITED, GROUND_SIGN)
    gam_g = field_decay_rate(device, derived, READ_FREQ, GROUND, GROUND_SIGN)
    ss_e = -1j * drive_eps / gam_e
    ss_g = -1j * drive_eps / gam_g
    alpha = 0.0
    for k in range(4):
        alpha = ss_e + (alpha - ss_e) * cmath.exp(-gam_e * dt)
    assert traj.samples[4] == pytest.approx(alpha, rel=1e-12)
    alpha = ss_e + (alpha - ss_e) * cmath.exp(-gam_e * (t_jump - 4 * dt))
    alpha = ss_g + (alpha - ss_g) * cmath.exp(-gam_g * (5 * dt - t_jump))
    assert traj.samples[5] == pytest.approx(alpha, rel=1e-10)


def test_steady_state_photon_asymmetry(device, derived, drive_eps):
    pulse = ReadoutPulse.rectangular(READ_FREQ, drive_eps, 1.5e-6, 1e-9)
    n = {}
    for state in (GROUND, EXCITED):
        traj = simulate_field(pulse, StatePath(state), device, derived,
                              ground_shift_sign=GROUND_SIGN)
        n[state] = abs(traj.samples[-1]) ** 2
    kappa_ang = 2 * math.pi * device.cavity_linewidth_kappa
    delta = 2 * math.pi * (device.cavity_freq - READ_FREQ)
    chi_ang = 2 * math.pi * abs(derived.chi)
    d_g = delta + GROUND_SIGN * chi_ang
    d_e = delta - GROUND_SIGN * chi_ang
    expected = (d_e ** 2 + (kappa_ang / 2) ** 2) / (d_g ** 2 + (kappa_ang / 2) ** 2)
    assert n[GROUND] / n[EXCITED] == pytest.approx(expected, rel=1e-6)


def test_photon_depletion_examples():
    assert photon_depletion_fraction(300e-9, 10e6) == pytest.approx(6.48e-9, rel=1e-2)
    assert photon_depletion_fraction(0.0, 10e6) == 1.0
    assert photon_depletion_fraction(1e-6, 0.0) == 1.0
    with pytest.raises(ValueError):
        photon_depletion_fraction(-1e-9, 10e6)


def test_overdrive_sets_flags(device, derived, drive_eps):
    chain = AmplifierChain(noise_photons=3.2, power_gain_db=15.0,
                           saturation_photons=50.0)
    strong = ReadoutPulse.rectangular(READ_FREQ, 6.0 * drive_eps, 400e-9, 1e-9)
    traj = simulate_field(strong, StatePath(EXCITED), device, derived,
                          chain=chain, ground_shift_sign=GROUND_SIGN)
    assert traj.over_saturation  # 36x photons clears 50
    mild = ReadoutPulse.rectangular(READ_FREQ, drive_eps, 400e-9, 1e-9)
    traj = simulate_field(mild, StatePath(EXCITED), device, derived,
                          chain=chain, ground_shift_sign=GROUND_SIGN)
    assert not traj.over_ncrit and not traj.over_saturation


def test_validation_errors(device, derived, drive_eps):
    with pytest.raises(ValueError, match="sample_dt"):
        simulate_field(ReadoutPulse.rectangular(READ_FREQ, drive_eps, 1e-6, 10e-9),
                       StatePath(GROUND), device, derived)
    with pytest.raises(ValueError, match="jump"):
        simulate_field(ReadoutPulse.rectangular(READ_FREQ, drive_eps, 100e-9, 1e-9),
                       StatePath(GROUND, (150e-9,)), device, derived)
    with pytest.raises(ValueError):
        ReadoutPulse(READ_FREQ, np.array([1.0, np.nan]), 1e-9)
    with pytest.raises(ValueError):
        StatePath(GROUND, (5e-9, 5e-9))
    with pytest.raises(ValueError):
        StatePath("x")


def test_state_path_bookkeeping():
    path = StatePath(EXCITED, (10e-9, 30e-9))
    assert path.state_at(0.0) == EXCITED
    assert path.state_at(10e-9) == GROUND
    assert path.state_at(20e-9) == GROUND
    assert path.state_at(35e-9) == EXCITED
    assert path.final_state == EXCITED
    assert StatePath(GROUND, (1e-9,)).final_state == EXCITED


def test_segment_pulse_layout():
    pulse = ReadoutPulse.from_segments(READ_FREQ, [1.0, 2.0j, -1.0], 9e-9, 1e-9)
    assert np.array_equal(pulse.envelope,
                          np.array([1, 1, 1, 2j, 2j, 2j, -1, -1, -1]))
    assert pulse.duration == pytest.approx(9e-9)
