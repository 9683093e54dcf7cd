"""
Configuration settings for the Diagonal Ideals Lab
"""
import os
from pathlib import Path

# Base paths
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = BASE_DIR / "backend" / "data"

VERSION = "1.0.0"
SCHEMA_VERSION = "diagonal-ideals-lab/1"

# Seeds are always echoed in reports; --seed overrides
DEFAULT_SEED = int(os.environ.get("LAB_SEED", "20140607"))

# Logging (always to stderr, stdout carries reports)
LOG_LEVEL = os.environ.get("LAB_LOG_LEVEL", "WARNING")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Dense multilinear forms store N^n scalars
DENSE_CONFIG = {
    "max_entries": 10 ** 7,
}

# Sign-vertex enumeration over l_inf balls
VERTEX_CONFIG = {
    "max_nN": 24,
    "chunk_entries": 1 << 22,
}

# Alternating ascent over l_p balls
ASCENT_CONFIG = {
    "restarts": 16,
    "rtol": 1e-10,
    "max_sweeps": 500,
}

# Walsh matrix verification
WALSH_CONFIG = {
    "fourier_tol_per_dim": 1e-10,
    "max_exact_power": 6,
}

# Composition identity L_N(xi x_1, xi x_2, x_3, ...) = N^2 sum x_1...x_n
COMPOSITION_CONFIG = {
    "trials": 100,
    "tol": 1e-9,
}

# Extendibility certificate for Phi_N: vertex enumeration of the ||L_N||
# leg is used up to this n*N, ascent plus the analytic bound beyond it
PHI_CERTIFICATE_CONFIG = {
    "bruteforce_max_nN": 16,
    "default_slot_exponent": "inf",
}

# Summability diagnostics for extendible diagonal operators
DIAGNOSTIC_CONFIG = {
    "epsilons": ["1/2", "1/10", "1/100"],
}

# Growth scans of finite-section norms of k^{-s}
GROWTH_CONFIG = {
    "min_log2": 4,
    "max_log2": 14,
    "threshold": 0.02,
}

# Certificate tolerances
CERTIFICATE_CONFIG = {
    "witness_rtol": 1e-9,
    "sandwich_rtol": 1e-9,
    "factorization_rtol": 1e-12,
}

# Verification suite sample sizes
SUITE_CONFIG = {
    "holder_instances": 50,
    "duality_instances": 50,
    "growth_samples": 20,
    "chain_instances": 100,
    "exponent_grid": ["1", "3/2", "2", "3", "inf"],
    "xi_dimensions": [2, 4, 8],
    "composition_dimensions": [2, 4, 8],
    "composition_arities": [3, 4, 5],
}

# API server
API_CONFIG = {
    "port": int(os.environ.get("PORT", 5000)),
    "max_alpha_length": 1 << 16,
    "default_page_size": 50,
}

# Report archive: PostgreSQL when DATABASE_URL is set, SQLite otherwise
DATABASE_URL = os.environ.get("DATABASE_URL", "")
DB_PATH = os.environ.get("DB_PATH", str(DATA_DIR / "lab_reports.db"))
