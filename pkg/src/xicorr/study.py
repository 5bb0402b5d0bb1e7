"""Monte Carlo studies: bias and MSE, interval coverage, variance scaling.

Trial ``k`` of a study with master seed ``s`` on model ``id`` at size ``n``
uses the seed ``derive_seed(s, TRIAL, id, n, k)``; its data and its
estimator each get a further substream. Results therefore do not depend on
how trials are grouped into chunks or spread over workers, and adding
trials never changes the earlier ones.

Variances in the reports are population variances (divide by N), so that
``mse == bias**2 + variance`` up to rounding.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .errors import ConstantYError
from .models import sample_arrays
from .rankcore import tie_keys, xi_both_rows
from .resample import Method, confidence_interval
from .truth import xi_true as _xi_true

ESTIMATOR_NAMES = ("raw", "normalized")
# elements per vectorized chunk of trials
_CHUNK_ELEMENTS = 2_000_000
_MAX_REDRAWS = 1000


@dataclass(frozen=True)
class StudyReport:
    model: object
    n: int
    N: int
    estimator: str
    mean_estimate: float
    bias: float
    mse: float
    variance: float
    xi_true: float

    @property
    def se_mean(self):
        """Monte Carlo standard error of ``mean_estimate`` (and of ``bias``)."""
        return math.sqrt(self.variance / self.N)


@dataclass(frozen=True)
class CoverageReport:
    model: object
    n: int
    N: int
    R: int
    method: str
    conf: float
    estimator: str
    coverage: float
    mean_width: float
    xi_true: float
    m: int = None

    @property
    def se(self):
        """Binomial standard error of ``coverage``."""
        return math.sqrt(self.coverage * (1 - self.coverage) / self.N)


@dataclass(frozen=True)
class VarianceFit:
    model: object
    estimator: str
    n_grid: tuple
    variances: tuple
    log_V: float
    gamma: float
    residuals: tuple = field(default=())


def trial_seed(seed, model_id, n, k):
    return _rng.derive_seed(seed, _rng.TRIAL, model_id, n, k)


def trial_data(spec, n, tseed):
    """Data of one trial, redrawn from fresh substreams while Y is constant."""
    for attempt in range(_MAX_REDRAWS):
        x, y = sample_arrays(spec, n, _rng.derive_seed(tseed, _rng.DATA, attempt))
        if not (y == y[0]).all():
            return x, y
    raise ConstantYError(f"model {spec.id} kept producing constant Y at n = {n}")


def estimate_seed(tseed):
    return _rng.derive_seed(tseed, _rng.ESTIMATE)


def _map_ordered(fn, items, workers):
    if workers is None or workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def simulate_estimates(spec, n, N, seed, workers=1):
    """Raw and normalized xi over ``N`` independent trials.

    Returns
    -------
    raw, normalized : ndarray of shape (N,)
        Entry ``k`` equals ``xi_n``/``xi_normalized`` of trial ``k``'s data
        with seed ``estimate_seed(trial_seed(seed, spec.id, n, k))``.
    """
    chunk = max(1, _CHUNK_ELEMENTS // n)
    starts = range(0, N, chunk)

    def run(start):
        ks = range(start, min(start + chunk, N))
        xs = np.empty((len(ks), n))
        ys = np.empty((len(ks), n))
        keys = np.empty((len(ks), n))
        for row, k in enumerate(ks):
            tseed = trial_seed(seed, spec.id, n, k)
            xs[row], ys[row] = trial_data(spec, n, tseed)
            keys[row] = tie_keys(estimate_seed(tseed), n)
        return xi_both_rows(xs, ys, keys)

    parts = _map_ordered(run, starts, workers)
    raw = np.concatenate([p[0] for p in parts])
    norm = np.concatenate([p[1] for p in parts])
    return raw, norm


def summarize(values, truth, spec, n, estimator):
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    return StudyReport(
        model=spec, n=n, N=values.size, estimator=estimator, mean_estimate=mean,
        bias=mean - truth, mse=float(np.mean((values - truth) ** 2)),
        variance=float(values.var()), xi_true=truth)


def run_bias_mse(spec, n, N=10_000, seed=0, xi_true=None, workers=1):
    """Bias/MSE of both estimators; returns ``(raw_report, normalized_report)``."""
    if N < 100:
        raise ValueError("bias/MSE studies need N >= 100")
    truth = _xi_true(spec) if xi_true is None else xi_true
    raw, norm = simulate_estimates(spec, n, N, seed, workers)
    return (summarize(raw, truth, spec, n, "raw"),
            summarize(norm, truth, spec, n, "normalized"))


def trial_intervals(spec, n, N, R, method, conf, estimator, seed, m=None, workers=1):
    """The interval of every trial, in trial order."""
    def one(k):
        tseed = trial_seed(seed, spec.id, n, k)
        x, y = trial_data(spec, n, tseed)
        return confidence_interval(x, y, method, conf, R, m, estimator, estimate_seed(tseed))

    return _map_ordered(one, range(N), workers)


def run_coverage(spec, n, N=500, R=1000, method="m-out-of-n", conf=0.9,
                 estimator="normalized", seed=0, m=None, xi_true=None, workers=1):
    """Share of ``N`` trials whose interval contains the true xi."""
    if N < 100:
        raise ValueError("coverage studies need N >= 100")
    if R < 200:
        raise ValueError("coverage studies need R >= 200")
    truth = _xi_true(spec) if xi_true is None else xi_true
    intervals = trial_intervals(spec, n, N, R, method, conf, estimator, seed, m, workers)
    hits = np.array([iv.contains(truth) for iv in intervals])
    widths = np.array([iv.width for iv in intervals])
    return CoverageReport(
        model=spec, n=n, N=N, R=R, method=Method(method).value, conf=conf,
        estimator=estimator, coverage=float(hits.mean()), mean_width=float(widths.mean()),
        xi_true=truth, m=intervals[0].m)


def fit_log_variance(n_grid, variances):
    """Least squares fit of log Var = log V + gamma log n.

    Returns ``(log_V, gamma, residuals)``.
    """
    n_grid = np.asarray(n_grid, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if n_grid.size < 2 or n_grid.size != variances.size:
        raise ValueError("need matching n and variance vectors with at least 2 points")
    if (variances <= 0).any():
        raise ValueError("variances must be positive")
    ln, lv = np.log(n_grid), np.log(variances)
    gamma, log_v = np.polyfit(ln, lv, 1)
    return float(log_v), float(gamma), tuple((lv - (log_v + gamma * ln)).tolist())


def variance_scaling_fit(spec, n_grid, N=10_000, estimator="raw", seed=0, workers=1):
    """Empirical Var(xi_n) over ``n_grid`` and its log-log fit."""
    n_grid = tuple(int(v) for v in n_grid)
    if len(set(n_grid)) < 4 or max(n_grid) < 10 * min(n_grid):
        raise ValueError("n_grid needs >= 4 distinct sizes spanning at least one decade")
    if estimator not in ESTIMATOR_NAMES:
        raise ValueError(f"unknown estimator {estimator!r}")
    pick = ESTIMATOR_NAMES.index(estimator)
    variances = tuple(float(simulate_estimates(spec, n, N, seed, workers)[pick].var())
                      for n in n_grid)
    log_v, gamma, resid = fit_log_variance(n_grid, variances)
    return VarianceFit(model=spec, estimator=estimator, n_grid=n_grid, variances=variances,
                       log_V=log_v, gamma=gamma, residuals=resid)
