# Enumeration of bath configurations is 2^N; beyond this we refuse.
ENUMERATION_CAP = 16

# Exact propagation diagonalizes blocks of dimension up to C(N+1, (N+1)/2).
EXACT_CAP = 12

DEFAULT_OMEGA0 = 1.0

DEFAULT_EXPONENT = 2.0

COMB_MERGE_RTOL = 1e-12

# Below this |omega * t| the closed-form line integrals switch to their series.
SERIES_THRESHOLD = 1e-4

ODE_RTOL = 1e-10

ODE_ATOL = 1e-12

ODE_METHOD = "DOP853"

# Composite Simpson rule for the population integral.
SIMPSON_STEP_FACTOR = 0.1
SIMPSON_TOLERANCE = 1e-9
SIMPSON_MAX_REFINEMENTS = 8

# Number of evaluation points per chunk when summing exponentials.
EVAL_CHUNK_ELEMENTS = 1 << 22

HERMITIAN_TOLERANCE = 1e-12

TRACE_TOLERANCE = 1e-12

POSITIVITY_TOLERANCE = 1e-10

LARGE_N_BETA_WARNING = 0.3

DEFAULT_T_MAX = 3000.0

DEFAULT_POINTS = 3001

METHODS = ("exact", "tcl2", "tcl2mod", "largen")

INITIAL_STATES = ("superposition", "excited", "custom", "polarized")

CSV_HEADER = "t,re_C,im_C,P_plus,method"

CSV_SIGNIFICANT_DIGITS = 12

MANIFEST_FILE = "manifest.json"

REPORT_FILE = "report.json"

SWEEP_SUMMARY_FILE = "sweep.csv"
