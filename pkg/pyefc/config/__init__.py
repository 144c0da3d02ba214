VERSION = '0.1.0'

DEFAULT_EXACT_THRESHOLD = 8
MAX_ENUMERATION_N = 10
MAX_DIRECT_SOLVE_STATES = 10 ** 5

MASS_TOLERANCE = 1e-12
DISTRIBUTION_TOLERANCE = 1e-10
RESIDUAL_TOLERANCE = 1e-10
UNIFORMIZATION_TOLERANCE = 1e-10
POWER_ITERATION_MAX_STEPS = 10 ** 6

DEFAULT_MC_SAMPLES = 200000
DEFAULT_N_BIG = 10 ** 4
DEFAULT_STATE_RECORD_THRESHOLD = 16
PLATEAU_TOLERANCE = 0.05

OUTPUT_ROOT_ENV = 'PYEFC_OUTPUT_ROOT'
DEFAULT_OUTPUT_DIR = 'efc-runs'
CONFIG_SCHEMA_VERSION = 1
