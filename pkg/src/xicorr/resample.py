"""Bootstrap distributions and confidence intervals for xi.

Four interval constructions are provided:

* :func:`ci_m_out_of_n` -- quantiles of sqrt(m) (xi*_m - xi_n) from draws
  without replacement, mapped back with sqrt(n) (default m = round(2 sqrt n)).
* :func:`ci_normal_dk` -- xi_n +- z sd(xi*_m) sqrt(m / n) with m = round(sqrt n).
* :func:`ci_n_out_of_n` -- the classical with-replacement bootstrap, percentile
  or BCa. Known to fail for continuous Y; kept for comparison.
* :func:`select_m_goetze` -- data-driven choice of m by comparing the scaled
  bootstrap laws at m and m/2.

Replicate ``i`` of a call with seed ``s`` draws its indices and tie-break keys
from the substream ``derive_seed(s, REPLICATE, i)``, so the replicate vector
does not depend on evaluation order.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from ._normal import norm_cdf, normal_quantile
from .errors import SampleSizeError, XiError
from .rankcore import _as_sample, tie_keys, xi_normalized_rows, xi_rows

__all__ = [
    "Scheme", "ResampleScheme", "Method", "IntervalEstimate", "ESTIMATORS",
    "bootstrap_distribution", "ci_m_out_of_n", "ci_normal_dk", "ci_n_out_of_n",
    "select_m_goetze", "empirical_quantile", "normal_quantile", "ecdf_distance",
    "default_m", "m_out_of_n_interval", "confidence_interval",
]

#: row-wise statistics selectable by name
ESTIMATORS = {"raw": xi_rows, "normalized": xi_normalized_rows}


class Scheme(enum.Enum):
    N_OUT_OF_N = "n-out-of-n"
    M_OUT_OF_N = "m-out-of-n"


@dataclass(frozen=True)
class ResampleScheme:
    kind: Scheme
    m: int = None

    def size(self, n):
        if self.kind is Scheme.N_OUT_OF_N:
            return n
        if self.m is None or self.m < 1:
            raise XiError("m-out-of-n resampling needs a positive m")
        if self.m > n:
            raise XiError(f"m = {self.m} exceeds n = {n}")
        return self.m


class Method(enum.Enum):
    M_OUT_OF_N = "m-out-of-n"
    NORMAL_DK = "normal"
    PERCENTILE = "percentile"
    BCA = "bca"


@dataclass(frozen=True)
class IntervalEstimate:
    """A confidence interval together with everything needed to reproduce it.

    ``degenerate`` marks intervals built from a constant replicate set;
    ``fallback`` is set when BCa had to fall back to the percentile rule.
    """

    lower: float
    upper: float
    level: float
    method: Method
    point: float
    replicates: int
    m: int
    estimator: str
    degenerate: bool = False
    fallback: bool = False

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, value):
        return self.lower <= value <= self.upper


def _statistic(estimator):
    if callable(estimator):
        return estimator
    try:
        return ESTIMATORS[estimator]
    except KeyError:
        raise ValueError(f"unknown estimator {estimator!r}; use 'raw' or 'normalized'") from None


def _estimator_name(estimator):
    return estimator if isinstance(estimator, str) else getattr(estimator, "__name__", "custom")


def default_m(n, rule):
    """Default subsample size: ``'2sqrt'`` -> round(2 sqrt n), ``'sqrt'`` -> round(sqrt n).

    Clamped to [2, n - 1].
    """
    c = {"2sqrt": 2.0, "sqrt": 1.0}[rule]
    # Python rounds half to even, as R does
    return int(min(max(round(c * math.sqrt(n)), 2), n - 1))


def bootstrap_distribution(x, y, statistic, scheme, R, seed=None, stream=(_rng.REPLICATE,)):
    """Replicate values of ``statistic`` under ``scheme``.

    Parameters
    ----------
    x, y : array_like
        The sample.
    statistic : callable or str
        ``statistic(xs, ys, keys)`` evaluated on row-stacked resamples of
        shape ``(R, size)`` with tie-break keys of the same shape; must
        return one value per row. ``'raw'`` and ``'normalized'`` select the
        two xi estimators.
    scheme : ResampleScheme
    R : int
        Number of replicates (>= 2).
    seed : int, optional

    Returns
    -------
    ndarray of shape (R,)
    """
    s = _as_sample(x, y)
    if R < 2:
        raise ValueError("need R >= 2 replicates")
    stat = _statistic(statistic)
    seed = _rng.resolve_seed(seed)
    n = s.n
    size = scheme.size(n)
    replace = scheme.kind is Scheme.N_OUT_OF_N

    idx = np.empty((R, size), dtype=np.intp)
    keys = np.empty((R, size))
    for i in range(R):
        rng = _rng.make_rng(_rng.derive_seed(seed, *stream, i))
        if replace:
            idx[i] = rng.integers(0, n, size)
        else:
            idx[i] = rng.choice(n, size=size, replace=False, shuffle=True)
        keys[i] = rng.random(size)
    return np.asarray(stat(s.xs[idx], s.ys[idx], keys), dtype=float)


def empirical_quantile(values, p):
    """Order-statistic quantile with linear interpolation.

    With sorted values v_1..v_R and h = (R - 1) p + 1 the result is
    v_floor(h) + (h - floor(h)) (v_floor(h)+1 - v_floor(h)).
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empirical_quantile of an empty vector")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return float(np.quantile(values, p, method="linear"))


def _check_conf(conf):
    if not 0.0 < conf < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {conf}")


def _point(s, estimator, seed):
    stat = _statistic(estimator)
    return float(stat(s.xs[None, :], s.ys[None, :], tie_keys(seed, s.n)[None, :])[0])


def ci_m_out_of_n(x, y=None, conf=0.9, R=1000, m=None, estimator="normalized", seed=None):
    """Non-parametric m-out-of-n bootstrap interval with tau_k = sqrt(k).

    The point estimate uses the tie-break stream of ``seed`` itself, i.e. it
    equals ``xi_normalized(x, y, seed)`` (or ``xi_n``) exactly.
    """
    s = _as_sample(x, y)
    _check_conf(conf)
    seed = _rng.resolve_seed(seed)
    n = s.n
    m = _check_m(default_m(n, "2sqrt") if m is None else int(m), n, estimator)
    point = _point(s, estimator, seed)
    reps = bootstrap_distribution(s.xs, s.ys, estimator, ResampleScheme(Scheme.M_OUT_OF_N, m),
                                  R, seed)
    return m_out_of_n_interval(point, reps, conf, m, n, estimator)


def _check_m(m, n, estimator):
    if not 2 <= m < n:
        raise SampleSizeError(f"subsample size must satisfy 2 <= m < n, got m = {m}, n = {n}")
    if estimator == "normalized" and m < 3:
        raise SampleSizeError("the normalized estimator needs subsamples of size >= 3")
    return m


def m_out_of_n_interval(point, reps, conf, m, n, estimator="normalized"):
    """Map replicates xi*_m to [xi_n - q(1-a/2)/sqrt(n), xi_n - q(a/2)/sqrt(n)].

    ``q`` are quantiles of sqrt(m) (xi*_m - xi_n).
    """
    reps = np.asarray(reps, dtype=float)
    alpha = 1.0 - conf
    scaled = math.sqrt(m) * (reps - point)
    q_hi = empirical_quantile(scaled, 1 - alpha / 2)
    q_lo = empirical_quantile(scaled, alpha / 2)
    tau_n = math.sqrt(n)
    return IntervalEstimate(
        lower=point - q_hi / tau_n, upper=point - q_lo / tau_n, level=conf,
        method=Method.M_OUT_OF_N, point=point, replicates=reps.size, m=m,
        estimator=_estimator_name(estimator), degenerate=bool(np.ptp(reps) == 0))


def ci_normal_dk(x, y=None, conf=0.9, R=1000, m=None, estimator="normalized", seed=None):
    """Normal-approximation interval with an m-out-of-n variance estimate.

    sigma_hat = sd(xi*_m) * sqrt(m / n), default m = round(sqrt(n)).
    """
    s = _as_sample(x, y)
    _check_conf(conf)
    seed = _rng.resolve_seed(seed)
    n = s.n
    m = _check_m(default_m(n, "sqrt") if m is None else int(m), n, estimator)
    point = _point(s, estimator, seed)
    reps = bootstrap_distribution(s.xs, s.ys, estimator, ResampleScheme(Scheme.M_OUT_OF_N, m),
                                  R, seed)
    # a constant replicate set has sd exactly 0 (np.std may leave roundoff)
    sd = 0.0 if np.ptp(reps) == 0 else float(np.std(reps, ddof=1)) * math.sqrt(m / n)
    half = normal_quantile(1 - (1 - conf) / 2) * sd
    return IntervalEstimate(
        lower=point - half, upper=point + half, level=conf, method=Method.NORMAL_DK,
        point=point, replicates=R, m=m, estimator=_estimator_name(estimator),
        degenerate=sd == 0)


def _jackknife(s, estimator, seed):
    n = s.n
    keep = ~np.eye(n, dtype=bool)
    xs = np.broadcast_to(s.xs, (n, n))[keep].reshape(n, n - 1)
    ys = np.broadcast_to(s.ys, (n, n))[keep].reshape(n, n - 1)
    keys = _rng.make_rng(_rng.derive_seed(seed, _rng.JACKKNIFE)).random((n, n - 1))
    return np.asarray(_statistic(estimator)(xs, ys, keys), dtype=float)


def ci_n_out_of_n(x, y=None, conf=0.9, R=1000, variant="percentile", estimator="normalized",
                  seed=None):
    """Classical with-replacement bootstrap interval (percentile or BCa).

    For BCa the bias constant is z0 = Phi^-1(share of replicates below the
    point estimate), with the share clipped to [1/(2R), 1 - 1/(2R)], and the
    acceleration comes from the jackknife skewness.
    """
    s = _as_sample(x, y)
    _check_conf(conf)
    variant = Method(variant) if not isinstance(variant, Method) else variant
    if variant not in (Method.PERCENTILE, Method.BCA):
        raise ValueError("variant must be 'percentile' or 'bca'")
    seed = _rng.resolve_seed(seed)
    point = _point(s, estimator, seed)
    reps = bootstrap_distribution(s.xs, s.ys, estimator, ResampleScheme(Scheme.N_OUT_OF_N),
                                  R, seed)
    alpha = 1.0 - conf
    lo_p, hi_p = alpha / 2, 1 - alpha / 2
    fallback = False
    if variant is Method.BCA:
        jack = _jackknife(s, estimator, seed)
        d = jack.mean() - jack
        ss = float((d ** 2).sum())
        if np.ptp(jack) == 0:
            fallback = True
        else:
            accel = float((d ** 3).sum()) / (6.0 * ss ** 1.5)
            share = float(np.mean(reps < point))
            share = min(max(share, 0.5 / R), 1 - 0.5 / R)
            z0 = normal_quantile(share)

            def adjust(p):
                z = z0 + normal_quantile(p)
                return norm_cdf(z0 + z / (1 - accel * z))

            lo_p, hi_p = adjust(lo_p), adjust(hi_p)
    return IntervalEstimate(
        lower=empirical_quantile(reps, lo_p), upper=empirical_quantile(reps, hi_p),
        level=conf, method=variant, point=point, replicates=R, m=s.n,
        estimator=_estimator_name(estimator), degenerate=bool(np.ptp(reps) == 0),
        fallback=fallback)


def ecdf_distance(a, b, kind="kolmogorov"):
    """Distance between the empirical cdfs of ``a`` and ``b``.

    ``'kolmogorov'`` is the supremum of |F_a - F_b|; ``'l2'`` is
    sqrt(int (F_a - F_b)^2 dt) over the pooled range.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.union1d(a, b)
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    diff = fa - fb
    if kind == "kolmogorov":
        return float(np.abs(diff).max())
    if kind == "l2":
        # both cdfs are step functions constant on [grid_k, grid_k+1)
        return float(math.sqrt((diff[:-1] ** 2 * np.diff(grid)).sum()))
    raise ValueError(f"unknown distance {kind!r}")


def select_m_goetze(x, y=None, R=500, distance="kolmogorov", estimator="normalized", seed=None,
                    lo=6, hi=None):
    """Choose m by minimizing the distance between scaled bootstrap laws at m and m/2.

    A golden-section search runs on a continuous relaxation of m over
    ``[lo, hi]`` (default ``hi = n // 2``), rounding at each evaluation and
    caching evaluated m. It stops once the bracket is narrower than 2 and
    returns the best evaluated m, preferring the smallest on ties.

    Experimental: the resulting intervals are known to under-cover.
    """
    s = _as_sample(x, y)
    seed = _rng.resolve_seed(seed)
    n = s.n
    hi = n // 2 if hi is None else hi
    if not lo <= hi:
        raise SampleSizeError(f"empty search interval [{lo}, {hi}] for n = {n}")
    point = _point(s, estimator, seed)
    laws = {}
    cache = {}

    def scaled_law(m):
        if m not in laws:
            reps = bootstrap_distribution(
                s.xs, s.ys, estimator, ResampleScheme(Scheme.M_OUT_OF_N, m), R, seed,
                stream=(_rng.SELECT_M, m))
            laws[m] = math.sqrt(m) * (reps - point)
        return laws[m]

    def objective(m):
        m = int(round(m))
        if m not in cache:
            half = max(int(round(m / 2)), 3 if estimator == "normalized" else 2)
            cache[m] = ecdf_distance(scaled_law(m), scaled_law(half), distance)
        return cache[m]

    invphi = (math.sqrt(5) - 1) / 2
    a, b = float(lo), float(hi)
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    while b - a >= 2:
        if objective(c) <= objective(d):
            b, d = d, c
            c = b - invphi * (b - a)
        else:
            a, c = c, d
            d = a + invphi * (b - a)
    for m in range(math.ceil(a), math.floor(b) + 1):
        objective(m)
    best = min(cache.items(), key=lambda kv: (kv[1], kv[0]))
    return best[0]


def confidence_interval(x, y=None, method="m-out-of-n", conf=0.9, R=1000, m=None,
                        estimator="normalized", seed=None):
    """Dispatch to one of the four interval constructions by name."""
    method = Method(method)
    if method is Method.M_OUT_OF_N:
        return ci_m_out_of_n(x, y, conf, R, m, estimator, seed)
    if method is Method.NORMAL_DK:
        return ci_normal_dk(x, y, conf, R, m, estimator, seed)
    if m is not None:
        raise ValueError("m only applies to the m-out-of-n and normal methods")
    return ci_n_out_of_n(x, y, conf, R, method, estimator, seed)
