"""Standard normal cdf, density and quantile (thin wrappers over scipy)."""

import math

from scipy.special import ndtr, ndtri

SQRT_2PI = math.sqrt(2 * math.pi)
SQRT2 = math.sqrt(2.0)


def norm_cdf(z):
    """Scalar standard normal cdf (erfc keeps full relative accuracy in the tails)."""
    return 0.5 * math.erfc(-z / SQRT2)


def norm_cdf_array(z):
    return ndtr(z)


def norm_pdf(z):
    return math.exp(-0.5 * z * z) / SQRT_2PI


def normal_quantile(p):
    """Inverse standard normal cdf for ``0 < p < 1``."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"normal_quantile needs 0 < p < 1, got {p}")
    return float(ndtri(p))
