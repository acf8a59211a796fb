DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 100_000

# engine
TIE_TOL = 1e-12
WORK_TOL = 1e-9
FEASIBILITY_TOL = 1e-7
RATE_CLAMP = 1e-300
WALL_CLOCK_BUDGET = 60.0

# certificates
DEFAULT_CERT_S = 32.0
DEFAULT_EPSILON = 0.5
SLOT_DIVISOR = 128
MIN_SLOTS_PER_JOB = 100
MAX_SLOTS = 200_000

AON_MAX_JOBS = 15
TREE_MAX_DEPTH = 2
TREE_LB_JOBS = 4
BRUTE_FORCE_MAX_JOBS = 5
BRUTE_FORCE_MAX_SLOTS = 40

FAMILIES = ("multidim", "all_or_nothing", "unrelated", "broadcast", "tree_lb")
LIFTED_FAMILIES = ("all_or_nothing", "unrelated", "broadcast", "tree_lb")
