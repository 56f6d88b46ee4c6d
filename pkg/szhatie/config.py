from __future__ import annotations

PARALLEL_ENV = "SZHATIE_PARALLEL"
ARCHIVE_ENV = "SZHATIE_ARCHIVE"
LOG_DIR_ENV = "SZHATIE_LOG_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGENCE = 2
EXIT_VERIFICATION_FAILED = 3

DEFAULT_EPS_SCHEDULE = ("1e-1", "1e-2", "1e-3", "1e-4")
DEFAULT_L_SCHEDULE = (10, 20, 50, 100, 200)
DEFAULT_N_SCHEDULE = (4, 8, 16, 32, 64)

FINAL_ERROR_THRESHOLD = 1e-3
MIN_RATE = 0.8
MIN_R2 = 0.98
EXACT_TOLERANCE = 1e-10
ISOMETRY_TOLERANCE = 1e-8
HOMOMORPHISM_TOLERANCE = 1e-8

# su2: O(1/(2l)) coefficient remainder at R=1; Kirillov: bump curvature times eps_n.
FINAL_ERROR_OVERRIDES = {
    "su2-to-iso2": 5e-3,
    "sl2-to-iso11": 1e-2,
}

SU2_PROBE_ORDERS = range(-3, 4)
SU2_RADIAL_EXTENT = 5.0
EVALUATION_PANELS = 16
DISC_QUADRATURE_PANELS = 8

# Matrix elements of X1, X2 at l = 200 sit within 3e-3 of their iso(2) targets.
MATRIX_ELEMENT_TOLERANCE = 3e-3
DEFAULT_M_MAX = 3
DEFAULT_RADIUS = 1
