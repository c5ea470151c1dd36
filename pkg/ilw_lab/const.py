"""ILW lab constants."""
import logging

import numpy as np
from scipy.linalg import LinAlgError

from .exceptions import ConfigInvalid, InvalidParameter, NumericalFailure

LOGGER = logging.getLogger(__package__)

MIN_GRID_POINTS = 16
DEFAULT_NUM_POINTS = 1024
DEFAULT_SPECTRUM_NUM_POINTS = 2048
DEFAULT_LENGTH = 100.0
DEFAULT_DELTA = 1.0

# Soliton construction
TRANSCENDENTAL_TOL = 1e-14
PARAM_RESIDUAL_TOL = 1e-12
SPEED_FD_STEP = 1e-5
BOX_TAIL_LIMIT = 1e-13
RESOLUTION_TAIL_LIMIT = 1e-8

# Evolution
DEFAULT_DT = 1e-3
DEFAULT_HORIZON = 10.0
DEFAULT_RECORD_STRIDE = 100
DEFAULT_PEAK_HEIGHT = 0.05
CFL_LIMIT = 0.5
TAIL_WATCH_LIMIT = 1e-10
TAIL_WATCH_WIDTH = 0.02

# Spectral analysis
ZERO_TOL_FACTOR = 10.0
ZERO_TOL_FLOOR = 1e3 * np.finfo(float).eps
GAP_FACTOR = 3.0
SYMMETRY_LIMIT = 1e-10
DEFAULT_PENALTY = 1e3

# Modulation
MODULATION_MAX_ITER = 50
MODULATION_TOL = 1e-10
MODULATION_MIN_SEPARATION = 2.0

# Scenario thresholds
SHAPE_TOL = 1e-6
DRIFT_REL_TOL = 1e-9
H0_DRIFT_TOL = 1e-13
SPEED_FIT_TOL = 1e-4
SPEED_FIT_MIN_R2 = 0.999999
COLLISION_SPEED_TOL = 1e-2
COLLISION_RESIDUAL_TOL = 5e-3
KERNEL_TOL = 1e-7
CHAIN_TOL = 1e-4
ALIGNMENT_TOL = 1e-4
CAUCHY_TOL = 1e-6
RATIO_LAW_TOL = 1e-2
PSI_RESIDUAL_TOL = 1e-3
PSI_FORM_TOL = 1e-2
CRITICAL_GRADIENT_TOL = 1e-6
DRIFT_CONSTANT_LIMIT = 100.0
MIN_TEMPORAL_ORDER = 3.8
KDV_LIMIT_TOL = 1e-5
BO_LIMIT_TOL = 1e-12
UNITARITY_TOL = 1e-13
LAMBDA1_CAUCHY_SPEED = 2.0
LAMBDA1_CAUCHY_LENGTH = 50.0
LAMBDA1_CAUCHY_NUM_POINTS = 1024
TAYLOR_SPREAD_LIMIT = 2.0
TAYLOR_EPS = (1e-2, 3e-3, 1e-3)
HESSIAN_SPEED_RANGE = (0.2, 4.0)
HESSIAN_MIN_GAP = 0.2
BOX_STUDY_SPACING = 0.1

# Outputs
FILE_TRACE = "trace.csv"
FILE_SPECTRUM = "spectrum.csv"
FILE_SUMMARY = "summary.json"
FILE_CONFIG_ECHO = "config.echo"
FILE_FAILURE = "failure.json"
SIGNIFICANT_DIGITS = 17

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

CONF_SCENARIO = "scenario"
CONF_GRID = "grid"
CONF_NUM_POINTS = "num_points"
CONF_LENGTH = "length"
CONF_PHYSICS = "physics"
CONF_DELTA = "delta"
CONF_SPEEDS = "speeds"
CONF_POSITIONS = "positions"
CONF_EVOLVE = "evolve"
CONF_DT = "dt"
CONF_HORIZON = "horizon"
CONF_DEALIAS = "dealias"
CONF_RECORD_STRIDE = "record_stride"
CONF_TAIL_WATCH = "tail_watch"
CONF_PEAK_HEIGHT = "peak_height"
CONF_PERTURBATION = "perturbation"
CONF_KIND = "kind"
CONF_AMPLITUDE = "amplitude"
CONF_SEED = "seed"
CONF_MODE = "mode"
CONF_BANDWIDTH = "bandwidth"
CONF_OPTIONS = "options"
CONF_OUTPUTS = "outputs"
CONF_SWEEP = "sweep"

SCENARIO_PROPAGATE = "propagate"
SCENARIO_COLLIDE = "collide"
SCENARIO_PERTURB = "perturb"
SCENARIO_SPECTRUM = "spectrum"
SCENARIO_HESSIAN_D = "hessian_d"
SCENARIO_LIMITS = "limits"
SCENARIO_CONVERGENCE = "convergence"

SCENARIOS = [
    SCENARIO_PROPAGATE,
    SCENARIO_COLLIDE,
    SCENARIO_PERTURB,
    SCENARIO_SPECTRUM,
    SCENARIO_HESSIAN_D,
    SCENARIO_LIMITS,
    SCENARIO_CONVERGENCE,
]

PERTURBATION_MODE = "mode"
PERTURBATION_RANDOM_SMOOTH = "random_smooth"

LAB_NUMERICAL_ERRORS = (
    FloatingPointError,
    LinAlgError,
    NumericalFailure,
)
LAB_USAGE_ERRORS = (ConfigInvalid, InvalidParameter)
