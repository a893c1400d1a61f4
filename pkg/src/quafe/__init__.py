"""Quantum free-electron optics: waveguide modes, electron-photon couplers,
and circuits built from electron splitters, couplers and phase shifters."""

from .circuit import (
    Circuit,
    Coupler,
    Coupling,
    DetectionReport,
    Detector,
    ElectronPhase,
    Mixer,
    OpticalPhase,
    Splitter,
    heralded_noon_state,
    noon_source,
    run,
    single_arm_sensor,
    two_arm_sensor,
)
from .config import RunConfig, load_config
from .core import CONSTANTS, ElectronBeam, bessel_k1_scaled, lorentz_factors, poisson_pmf
from .coupler import (
    CouplerGeometry,
    CouplingResult,
    calibrate_base_rates,
    calibrated_geometry,
    effective_length,
    mean_photon_numbers,
)
from .dsl import DslError, lower, parse, parse_source, pretty, tokenize
from .errors import (
    CalibrationError,
    CircuitError,
    ConfigError,
    DomainError,
    HeraldLimitError,
    QuafeError,
    TruncationError,
)
from .fock import coherent_overlap, displace_vacuum, displacement_matrix
from .interference import (
    current_closed_form,
    effective_photon_number,
    fringe_fwhm,
    oracle_current,
    sensitivity_slope,
    single_arm_closed_form,
)
from .noon import generation_rate, noon_probability, optimize_length_scale
from .waveguide import ModeBranch, PhaseMatchPoint, WaveguideSpec, phase_match, solve_dispersion

__version__ = "0.1.0"
