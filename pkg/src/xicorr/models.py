"""The ten data-generating processes used in the simulation studies.

=====  ==============================  =========================================
model  law                              parameters (defaults)
=====  ==============================  =========================================
1      Y = X + e                         X ~ unif(a, b), e ~ norm(0, sigma^2)
2      Y = X^2 + e                       as model 1
3      Y = sin(2 pi X) + e               as model 1
4      Y = X Z                           X ~ binom(1, p=0.4), Z ~ binom(1, p'=0.5)
5      Y = X + e                         X ~ equal(m=6, a, b), e ~ coin(m'=2, sigma)
6      Y = X^2 + e                       as model 5
7      Y = sin(2 pi X) + e               as model 5
8      independent                       X, Y ~ unif(a, b)
9      independent                       X ~ equal(m=3, a, b), Y ~ equal(m'=6, a, b)
10     independent                       X ~ binom(m=3, p=0.5), Y ~ binom(m'=6, p'=0.3)
=====  ==============================  =========================================

``equal(m, a, b)`` puts mass 1/m on ``a + (b - a) k / (m - 1)``, k = 0..m-1.
``coin(m', sigma)`` is ``-sigma sqrt(m') + (2 sigma / sqrt(m')) binom(m', 1/2)``,
which has mean 0 and variance sigma^2.
"""

import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.special import ndtri

from ._rng import make_rng, resolve_seed
from .rankcore import PairedSample

MERGE_TOL = 1e-12

CONTINUOUS_NOISY = (1, 2, 3)
DISCRETE_NOISY = (5, 6, 7)
INDEPENDENT = (8, 9, 10)

_DEFAULTS = {
    1: dict(sigma=0.5),
    2: dict(sigma=0.5),
    3: dict(sigma=0.5),
    4: dict(p=0.4, p_prime=0.5),
    5: dict(sigma=0.5, m=6, m_prime=2),
    6: dict(sigma=0.5, m=6, m_prime=2),
    7: dict(sigma=0.5, m=6, m_prime=2),
    8: dict(),
    9: dict(m=3, m_prime=6),
    10: dict(m=3, p=0.5, m_prime=6, p_prime=0.3),
}
_USES_RANGE = {1, 2, 3, 5, 6, 7, 8, 9}


def _identity(x):
    return x


def _sin2pi(x):
    return np.sin(2 * np.pi * x)


_REGRESSION = {1: _identity, 2: np.square, 3: _sin2pi,
               5: _identity, 6: np.square, 7: _sin2pi}


def regression_function(model_id):
    """The deterministic part f of Y = f(X) + e for models 1-3 and 5-7."""
    return _REGRESSION[model_id]


@dataclass(frozen=True)
class ModelSpec:
    """One of the ten models with its parameters.

    Parameters left as ``None`` take the model's defaults; parameters the
    model does not use must stay ``None``.
    """

    id: int
    sigma: float = None
    m: int = None
    m_prime: int = None
    p: float = None
    p_prime: float = None
    a: float = None
    b: float = None

    def __post_init__(self):
        if self.id not in _DEFAULTS:
            raise ValueError(f"unknown model id {self.id!r}; expected 1-10")
        allowed = set(_DEFAULTS[self.id]) | ({"a", "b"} if self.id in _USES_RANGE else set())
        for f in fields(self):
            if f.name == "id":
                continue
            value = getattr(self, f.name)
            if value is not None and f.name not in allowed:
                raise ValueError(f"model {self.id} has no parameter {f.name!r}")
        for name, value in _DEFAULTS[self.id].items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        if self.id in _USES_RANGE:
            if self.a is None:
                object.__setattr__(self, "a", -1.0)
            if self.b is None:
                object.__setattr__(self, "b", 1.0)
            if not self.a < self.b:
                raise ValueError("need a < b")
        if self.sigma is not None and not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")
        for name in ("m", "m_prime"):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < 1):
                raise ValueError(f"{name} must be a positive integer")
        if self.id in (5, 6, 7, 9) and self.m < 2:
            raise ValueError("equal(m, a, b) needs m >= 2")
        if self.id == 9 and self.m_prime < 2:
            raise ValueError("equal(m', a, b) needs m' >= 2")
        for name in ("p", "p_prime"):
            v = getattr(self, name)
            if v is not None and not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    def with_(self, **changes):
        return replace(self, **changes)

    def params(self):
        """Parameters in use, in field order (the CLI vocabulary)."""
        return {f.name: getattr(self, f.name) for f in fields(self)
                if getattr(self, f.name) is not None}

    @property
    def discrete_y(self):
        return self.id not in (1, 2, 3, 8)


# -- building-block distributions ------------------------------------------

@dataclass(frozen=True)
class Unif:
    a: float
    b: float


@dataclass(frozen=True)
class Norm:
    mu: float
    sigma: float


@dataclass(frozen=True)
class Equal:
    m: int
    a: float
    b: float


@dataclass(frozen=True)
class Binom:
    n: int
    p: float


@dataclass(frozen=True)
class ScaledCoinNoise:
    m_prime: int
    sigma: float


def pmf_of(dist):
    """Exact finite pmf ``{value: probability}`` of a discrete distribution."""
    if isinstance(dist, Equal):
        if dist.m < 2:
            raise ValueError("equal(m, a, b) needs m >= 2")
        return {dist.a + (dist.b - dist.a) * k / (dist.m - 1): 1.0 / dist.m
                for k in range(dist.m)}
    if isinstance(dist, Binom):
        return {float(k): math.comb(dist.n, k) * dist.p ** k * (1 - dist.p) ** (dist.n - k)
                for k in range(dist.n + 1)}
    if isinstance(dist, ScaledCoinNoise):
        pmf = {}
        for v, w in zip(*_coin_atoms(dist.m_prime, dist.sigma)):
            pmf[v] = pmf.get(v, 0.0) + w
        return pmf
    raise TypeError(f"{type(dist).__name__} is not a discrete distribution")


def _coin_atoms(m_prime, sigma):
    """Atoms and weights of the coin noise, one per head count (unmerged)."""
    k = np.arange(m_prime + 1)
    # (2k - m') is exact, so the atoms are symmetric and the middle one is 0
    values = sigma * (2 * k - m_prime) / math.sqrt(m_prime)
    weights = np.array([math.comb(m_prime, int(i)) for i in k]) * 0.5 ** m_prime
    return values.tolist(), weights.tolist()


def canonical_values(values, tol=MERGE_TOL):
    """Snap values lying within ``tol`` of each other onto one representative.

    Neighbouring sorted values closer than ``tol`` form one group; every
    member is replaced by the group's smallest value.
    """
    values = np.asarray(values, dtype=float)
    flat = values.ravel()
    order = np.argsort(flat, kind="stable")
    s = flat[order]
    new = np.ones(s.size, dtype=bool)
    new[1:] = np.diff(s) > tol
    reps = s[np.flatnonzero(new)[np.cumsum(new) - 1]]
    out = np.empty_like(flat)
    out[order] = reps
    return out.reshape(values.shape)


def _discrete_parts(spec):
    """Atoms/probabilities of X and of the noise index, plus the Y table.

    ``table[i, j]`` is the (canonicalized) y value for x atom ``i`` and noise
    atom ``j``.
    """
    f = regression_function(spec.id)
    x_pmf = pmf_of(Equal(spec.m, spec.a, spec.b))
    ea, ew = (np.array(v) for v in _coin_atoms(spec.m_prime, spec.sigma))
    xa = np.array(list(x_pmf))
    table = canonical_values(f(xa)[:, None] + ea[None, :])
    return xa, np.array(list(x_pmf.values())), ea, ew, table


def _normal(rng, size, sigma):
    # inverse-CDF so a stream maps to the same variates in any implementation
    return sigma * ndtri(rng.random(size))


def _uniform(rng, size, a, b):
    return a + (b - a) * rng.random(size)


def sample_arrays(spec, n, seed):
    """Draw ``n`` pairs from ``spec``; returns ``(x, y)`` float arrays."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = make_rng(resolve_seed(seed))
    mid = spec.id
    if mid in CONTINUOUS_NOISY:
        x = _uniform(rng, n, spec.a, spec.b)
        y = regression_function(mid)(x) + _normal(rng, n, spec.sigma)
    elif mid == 4:
        x = (rng.random(n) < spec.p).astype(float)
        z = (rng.random(n) < spec.p_prime).astype(float)
        y = x * z
    elif mid in DISCRETE_NOISY:
        xa, _, _, _, table = _discrete_parts(spec)
        i = rng.integers(0, spec.m, n)
        j = rng.binomial(spec.m_prime, 0.5, n)
        x, y = xa[i], table[i, j]
    elif mid == 8:
        x = _uniform(rng, n, spec.a, spec.b)
        y = _uniform(rng, n, spec.a, spec.b)
    elif mid == 9:
        xa = np.array(list(pmf_of(Equal(spec.m, spec.a, spec.b))))
        ya = np.array(list(pmf_of(Equal(spec.m_prime, spec.a, spec.b))))
        x = xa[rng.integers(0, spec.m, n)]
        y = ya[rng.integers(0, spec.m_prime, n)]
    else:
        x = rng.binomial(spec.m, spec.p, n).astype(float)
        y = rng.binomial(spec.m_prime, spec.p_prime, n).astype(float)
    return x, y


def sample_model(spec, n, seed=None):
    """Draw a :class:`PairedSample` of size ``n``.

    Raises :class:`~xicorr.errors.ConstantYError` in the (rare, discrete)
    event that every drawn ``y`` is equal.
    """
    x, y = sample_arrays(spec, n, seed)
    return PairedSample(x, y)
