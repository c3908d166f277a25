"""Sample-size planning and audit tools for household travel surveys."""
from .errors import ConfigError, DataError, TravelSampleError
from .kernels import BACKEND
from .stats import SizeSpec, fpc_sample_size, interchange_rate, rate_curve

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "DataError",
    "SizeSpec",
    "TravelSampleError",
    "fpc_sample_size",
    "interchange_rate",
    "rate_curve",
    "__version__",
]
