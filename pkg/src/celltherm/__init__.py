"""Impedance-based internal temperature estimation for cylindrical cells.

A two-state reduced-order thermal model, an admittance-temperature
measurement map, EKF/DEKF estimators (and their surface-temperature KF/DKF
baselines), offline parameter identification, and a high-resolution
finite-difference oracle with closed-form frequency-domain references for
validation.
"""

from .analytic import (
    ComplexFreq,
    analytical_frequency_response,
    qa_frequency_response,
    steady_state_profile,
)
from .bessel import bessel_j
from .errors import (
    CalibrationError,
    CellThermError,
    ConfigError,
    DataError,
    InvalidParameterError,
    NumericalError,
)
from .estimation import (
    EstimateTrace,
    EstimatorConfig,
    EstimatorState,
    measurement_update,
    rmse,
    run_estimator,
    time_update,
)
from .fdmodel import HAVE_COMPILED_KERNEL, FdSolution, RadialField, fd_admittance, fd_simulate
from .identify import FitProblem, FitReport, density_from_mass, fit_thermal_params, objective
from .impedance import (
    AdmittancePoly,
    admittance_from_state,
    admittance_uniform,
    default_calibration,
    eis_volume_avg_temp,
    fit_admittance_poly,
    measurement_fn,
    measurement_jacobian_h,
    measurement_jacobian_state,
)
from .telemetry import (
    DriveCycleSpec,
    TelemetryRecord,
    generate_drive_cycle,
    load_telemetry,
    save_telemetry,
    synthesize_telemetry,
)
from .thermal import (
    DEFAULT_CELL,
    HeatInput,
    StateSpaceModel,
    ThermalParams,
    ThermalState,
    build_continuous,
    core_temperature,
    discretize,
    heat_generation,
    pa_frequency_response,
    radial_profile,
    step,
    surface_temperature,
)

__version__ = "0.1.0"
