"""Monte Carlo simulator and analysis toolkit for single-shot dispersive
transmon readout through a SLUG-preamplified detection chain."""

from .model import (
    AmplifierChain,
    DerivedParams,
    DeviceParams,
    derive_params,
    noise_photons_from_temperature,
    snr_improvement_db,
    snr_theoretical,
)
from .cavity import (
    EXCITED,
    GROUND,
    FieldTrajectory,
    ReadoutPulse,
    StatePath,
    calibrate_drive,
    photon_depletion_fraction,
    simulate_field,
    steady_state_field,
)
from .trajectories import (
    PREPARE_E,
    PREPARE_G,
    NoiseModel,
    PreparationModel,
    Shot,
    generate_shot,
    generate_shots,
    sample_jump_path,
    sample_preparation,
    shot_rng,
    steady_state_snr,
)
from .discrimination import (
    DiscriminationReport,
    FilterSpec,
    Histogram,
    apply_filter,
    apply_filter_batch,
    build_histogram,
    compute_report,
    fit_threshold,
    gaussian_fidelity_bound,
    optimize_boxcar,
)
from .protocols import (
    FidelityResult,
    PostSelectionResult,
    QndResult,
    RbResult,
    ReadoutSetup,
    calibrated_boxcar,
    fit_exponential,
    run_fidelity,
    run_postselection,
    run_qnd,
    run_rb,
)
from .optimizer import GaConfig, GaResult, optimize_pulse
from .config import ConfigError, RunConfig, load_config, parse_config

__version__ = "0.1.0"
