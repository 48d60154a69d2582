"""Defines shared configuration variables for the ecmo_solver project"""

APP_NAME = "ecmo-solver"
SCHEMA_VERSION = 1
SCHEMA_SUPPORTED_VERSIONS = [SCHEMA_VERSION]

# step size eta = c_eta * T^(-1/4), penalties u = v = c_uv * T^(1/4), batches ceil(c_batch * T^(5/4))
DEFAULT_C_ETA = 1.0
DEFAULT_C_UV = 1.0
DEFAULT_C_BATCH = 1.0

FD_STEP = 1e-5
FD_REL_TOL = 1e-6
FD_ABS_TOL = 1e-8
GRADCHECK_POINTS = 20

DEFAULT_FLOOR = 0.01
DEFAULT_RESOLUTION = 10
DEFAULT_ADMISSION_TOL = 1e-2
DEFAULT_WORKERS = 1

DEFAULT_GRID_DENSITY = 10_000
DEFAULT_PROBE_COUNT = 1000
DEFAULT_SHIFT_MARGIN = 0.1
CONVEXITY_PROBE_SEGMENTS = 100

# hypervolume reference default: componentwise max of the front * 1.1 + 0.1
HV_REF_SCALE = 1.1
HV_REF_OFFSET = 0.1
HV_MAX_OBJECTIVES = 5

DEFAULT_OUT_DIR = "ecmo-out"
RUN_RECORD_FILE = "run.json"
TRACE_FILE = "trace.csv"
FRONT_FILE = "front.csv"
METRICS_FILE = "metrics.json"
MANIFEST_FILE = "manifest.json"
ORACLE_FRONT_FILE = "oracle_front.csv"
AGREEMENT_FILE = "agreement.json"
