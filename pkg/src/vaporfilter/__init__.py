"""Forward simulator of a narrow-band atomic-vapor filter.

A circularly polarized pump polarizes one velocity class of rubidium atoms,
creating circular dichroism that a crossed-polarizer interferometer converts
into a narrow transmission peak.  The package models the pumping, the
polarization-resolved absorption, the interferometer, and the analysis used
to extract peak transmission, linewidth, extinction and tunability.
"""

from .atomic_data import (
    AtomSpec,
    HyperfineLine,
    VelocityGrid,
    default_atoms,
    doppler_sigma,
    load_atoms,
    maxwell_boltzmann_pdf,
    transition_strengths,
    wigner3j,
    wigner6j,
)
from .config import ConfigError, RunConfig, load_config
from .dichroism import (
    CellConfig,
    DichroicAbsorption,
    absorption_coefficients,
    calibrate_od_scale,
    differential_phase,
)
from .fitting import (
    FitError,
    FitModel,
    FitResult,
    fit_gaussian_sum2,
    fit_lorentzian,
    levenberg_marquardt,
)
from .polarization import (
    InterferometerConfig,
    PolarizationState,
    apply_dichroic_medium,
    filter_outputs,
)
from .pumping import (
    PopulationField,
    PumpConfig,
    RelaxationConfig,
    excitation_rate,
    steady_state_populations,
)
from .scan import (
    CalibrationError,
    FilterSpectrum,
    StageError,
    TunabilityResult,
    calibrate_to_targets,
    extinction_db,
    measure_linewidth,
    simulate_spectrum,
    tunability_scan,
)

__version__ = "0.1.0"
