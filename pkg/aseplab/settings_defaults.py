"""Default run settings - neutral module to avoid circular imports."""

DEFAULT_RUN_CONFIG = {
    "q": 0.0,
    "n": 6,
    "m": 2,
    "n_list": [4, 6, 8, 10, 12],
    "seed": 20240601,
    "format": "json",
    "digits": 15,  # significant digits in emitted floats
    "jobs": 1,
    # Monte-Carlo
    "total_time": 20000.0,
    "burn_in": None,  # None = 20*n / min boundary rate
    "batches": 40,
}

# Keys accepted in flat key=value config files (they map onto flags)
CONFIG_FILE_KEYS = [
    "alpha",
    "beta",
    "gamma",
    "delta",
    "A",
    "B",
    "C",
    "D",
    "q",
    "n",
    "m",
    "n_list",
    "seed",
    "format",
    "digits",
    "jobs",
    "total_time",
    "burn_in",
    "batches",
    "precision_bits",
    "quad_tol",
    "mass_tol",
    "admissibility_tol",
    "multi_backend",
    "database_path",
    "log_level",
]

# Config keys that land on aseplab.config.settings rather than the run config
SETTINGS_KEYS = [
    "precision_bits",
    "quad_tol",
    "mass_tol",
    "admissibility_tol",
    "multi_backend",
    "database_path",
    "log_level",
]
