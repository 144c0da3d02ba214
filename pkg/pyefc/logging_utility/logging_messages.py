ENUMERATION_BUILD = 'Enumerating the {} partitions of [{}].'

GENERATOR_BUILD_START = 'Building the generator over P_{} ({} states).'
GENERATOR_BUILD_DONE = 'Generator over P_{} has {} nonzero off-diagonal rates.'
KERNEL_BUILD = 'Level {} {} kernel has {} nonzero rates.'
COMPATIBILITY_DEFECT = 'Compatibility defect between levels {} and {}: {}.'

CLOSED_CLASSES_FOUND = 'Found {} communicating classes, {} of them closed.'
STATIONARY_SOLVE = 'Solving the stationary equations on a closed class of {} states.'
STATIONARY_DIRAC = 'The closed class is the single state {}; returning its Dirac mass.'
STATIONARY_RESIDUAL = 'Stationary residual ||rho G||_inf = {:.3e}.'
STATIONARY_ITERATIVE = 'Closed class of {} states exceeds the direct-solve bound; using power iteration.'
UNIFORMIZATION_RUN = 'Uniformization with rate {:.6g} at t = {:.6g}: {} Poisson terms, truncation error {:.3e}.'
CONVERGENCE_TIME = 'Total variation {:.3e} reached at t = {:.6g}.'

MC_FALLBACK = 'Level b = {} exceeds the exact threshold {}; estimating with {} Monte Carlo samples.'
PLATEAU_VERDICT = 'Comes-down diagnostic up to B = {}: {}.'

PATH_START = 'Simulating a {} path on [{}] up to t = {} (seed {}).'
PATH_ABSORBED = 'Path absorbed at {} after {} jumps.'
PATH_DONE = 'Path finished with {} events at t = {:.6g}.'
ENSEMBLE_START = 'Simulating an ensemble of {} paths with {} worker(s).'
TIME_TIE_REDRAW = 'Exponential clock returned a zero increment; redrawing.'

COMMAND_START = 'Running the command `{}` into {}.'
COMMAND_DONE = 'Command `{}` wrote {} file(s).'
CONFIG_LOADED = 'Loaded configuration {} (schema version {}).'
TIMED_CALL = '`{}` finished in {:.6f}s.'
