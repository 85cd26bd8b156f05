from .cache import cache
from .occurrence import occurrence_service
from .curve_lab import curve_lab
from .sieve_estimates import sieve_estimator
from .experiments import experiment_runner

__all__ = ["cache", "occurrence_service", "curve_lab", "sieve_estimator", "experiment_runner"]
