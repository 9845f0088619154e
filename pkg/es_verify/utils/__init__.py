from .logging_config import setup_logging
from .rng import DEFAULT_SEED, derive_seed, make_rng
from .parallel import default_jobs, ordered_map

__all__ = [
    'setup_logging',
    'DEFAULT_SEED',
    'derive_seed',
    'make_rng',
    'default_jobs',
    'ordered_map',
]
