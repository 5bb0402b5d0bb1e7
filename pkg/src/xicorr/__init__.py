"""Chatterjee's xi correlation: estimators, bootstrap intervals, population
values for benchmark models and Monte Carlo studies."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConstantYError, LengthMismatchError, NumericalError, SampleSizeError, XiError,
)
from .models import ModelSpec, sample_model  # noqa: E402
from .rankcore import (  # noqa: E402
    PairedSample, sort_with_random_ties, xi_n, xi_normalized, xi_upper_bound,
)
from .resample import IntervalEstimate, Method, confidence_interval  # noqa: E402
from .study import run_bias_mse, run_coverage, variance_scaling_fit  # noqa: E402
from .truth import QuadratureSpec, xi_true  # noqa: E402

__all__ = [
    "ConstantYError", "IntervalEstimate", "LengthMismatchError", "Method", "ModelSpec",
    "NumericalError", "PairedSample", "QuadratureSpec", "SampleSizeError", "XiError",
    "confidence_interval", "run_bias_mse", "run_coverage", "sample_model",
    "sort_with_random_ties", "variance_scaling_fit", "xi_n", "xi_normalized",
    "xi_true", "xi_upper_bound",
]
