"""Asymptotic value of xi for the simulated models.

For continuous Y the population value reduces to

    xi = 6 * int int P(Y >= t | X = x)^2 dlambda(x) dmu(t) - 2,

which is evaluated with nested adaptive quadrature. Model 1 additionally has
a closed form for the x-integral, model 4 a closed form for xi, and the
discrete models 5-7 reduce to finite sums over the pmf of Y.
"""

import math
import operator
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from ._normal import SQRT2, norm_cdf, norm_pdf
from .errors import NumericalError
from .models import (
    MERGE_TOL, Binom, Equal, ModelSpec, ScaledCoinNoise, pmf_of, regression_function,
)

SQRT_PI = math.sqrt(math.pi)
_PAD = np.array([-8.0, -2.0, 0.0, 2.0, 8.0])


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the outermost integral.

    Each nested layer tightens both tolerances by ``layer_factor``.
    ``truncation`` is the number of noise standard deviations added on both
    sides of the range of f(X) when Y has normal tails.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    truncation: float = 10.0
    limit: int = 500
    layer_factor: float = 10.0

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be > 0")
        if self.truncation < 8:
            raise ValueError("truncation must be >= 8 standard deviations")

    def inner(self):
        """Spec for the next nested layer."""
        k = self.layer_factor
        return QuadratureSpec(self.abs_tol / k, self.rel_tol / k,
                              self.truncation, self.limit, k)


DEFAULT_QUAD = QuadratureSpec()


def integrate_adaptive(f, lo, hi, spec=DEFAULT_QUAD, points=None):
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[lo, hi]``.

    Raises :class:`NumericalError` when QUADPACK reports non-convergence or
    ``f`` returns a non-finite value.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")

    def checked(v):
        out = f(v)
        if not math.isfinite(out):
            raise NumericalError(f"integrand is not finite at {v!r}")
        return out

    if points is not None:
        points = [p for p in points if lo < p < hi] or None
    out = integrate.quad(checked, lo, hi, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                         limit=spec.limit, points=points, full_output=1)
    value, err = out[0], out[1]
    if len(out) > 3:
        # QUADPACK flagged trouble; roundoff near the requested tolerance is tolerated
        budget = 100 * max(spec.abs_tol, spec.rel_tol * abs(value))
        if not err <= budget:
            msg = out[3].splitlines()[0] if out[3] else "unknown failure"
            raise NumericalError(f"quadrature over [{lo}, {hi}] did not converge: {msg}")
    return value


# -- continuous Y --------------------------------------------------------------

@dataclass(frozen=True)
class ConditionalLaw:
    """Joint law of (X, Y) through P(Y >= t | X = x) and the law of X.

    ``y_density`` may be omitted for additive models Y = f(X) + e; the density
    of Y is then the convolution integral of ``x_density`` with
    ``noise_density`` at ``t - f(x)``.
    """

    pyx: object
    x_density: object
    x_range: tuple
    t_range: tuple
    y_density: object = None
    f: object = None
    noise_density: object = None
    x_breaks: object = None
    t_breaks: tuple = ()

    def breaks_at(self, t):
        """Points in x where the integrands at level ``t`` change quickly."""
        return None if self.x_breaks is None else self.x_breaks(t)

    @classmethod
    def additive_normal(cls, f, sigma, a=-1.0, b=1.0, truncation=10.0):
        """Y = f(X) + e with X ~ unif(a, b) and e ~ norm(0, sigma^2)."""
        if not sigma > 0:
            raise ValueError("additive_normal needs sigma > 0")
        xg = np.linspace(a, b, 4001)
        fg = f(xg)
        fmin, fmax = float(fg.min()), float(fg.max())
        width = b - a

        # interior turning points of f
        turn = xg[1:-1][np.diff(np.sign(np.diff(fg))) != 0]
        spacing = xg[1] - xg[0]

        def x_breaks(t):
            # crossings of f(x) = t (linear interpolation on the grid), padded
            # by a few noise widths sigma / |f'| so no panel hides a feature
            d = fg - t
            k = np.flatnonzero(np.sign(d[:-1]) != np.sign(d[1:]))
            slope = np.abs(d[k + 1] - d[k]) / spacing
            c = xg[k] - d[k] * spacing / (d[k + 1] - d[k])
            w = np.clip(sigma / np.maximum(slope, 1e-300), spacing, 0.05)
            pts = (c[:, None] + _PAD * w[:, None]).ravel()
            return np.unique(np.concatenate([pts, turn])).tolist()

        def pyx(t, x):
            return norm_cdf((f(x) - t) / sigma)

        def x_density(x):
            return 1.0 / width

        def noise_density(e):
            return norm_pdf(e / sigma) / sigma

        return cls(pyx=pyx, x_density=x_density, x_range=(a, b),
                   t_range=(fmin - truncation * sigma, fmax + truncation * sigma),
                   f=f, noise_density=noise_density, x_breaks=x_breaks,
                   t_breaks=(fmin, fmax))

    @classmethod
    def independent_uniform(cls, a=-1.0, b=1.0):
        """X and Y independent, both unif(a, b)."""
        width = b - a

        def pyx(t, x):
            return min(1.0, max(0.0, (b - t) / width))

        def density(v):
            return 1.0 / width

        return cls(pyx=pyx, x_density=density, x_range=(a, b), t_range=(a, b),
                   y_density=density, t_breaks=(a, b))

    def density_of_y(self, spec=DEFAULT_QUAD):
        if self.y_density is not None:
            return self.y_density
        lo, hi = self.x_range
        px, peps, f = self.x_density, self.noise_density, self.f

        def py(t):
            return integrate_adaptive(lambda x: px(x) * peps(t - f(x)), lo, hi, spec,
                                      points=self.breaks_at(t))
        return py


def _x_integral(law, t, power, spec):
    lo, hi = law.x_range
    return integrate_adaptive(
        lambda x: law.pyx(t, x) ** power * law.x_density(x), lo, hi, spec,
        points=law.breaks_at(t))


def xi_continuous_numeric(law, spec=DEFAULT_QUAD):
    """6 * int int P(Y >= t | x)^2 dlambda dmu - 2 by nested quadrature."""
    inner = spec.inner()
    py = law.density_of_y(inner)

    def outer(t):
        return py(t) * _x_integral(law, t, 2, inner)

    return 6.0 * integrate_adaptive(outer, *law.t_range, spec, points=law.t_breaks) - 2.0


def xi_continuous_ratio(law, spec=DEFAULT_QUAD):
    """Full ratio of integrals without the continuous-Y shortcut.

    Numerator int (int P(Y>=t|x)^2 dlambda - P(Y>=t)^2) dmu, denominator
    int P(Y>=t)(1 - P(Y>=t)) dmu, with P(Y>=t) = int P(Y>=t|x) dlambda.
    """
    inner = spec.inner()
    py = law.density_of_y(inner)

    def num(t):
        p = _x_integral(law, t, 1, inner)
        return py(t) * (_x_integral(law, t, 2, inner) - p * p)

    def den(t):
        p = _x_integral(law, t, 1, inner)
        return py(t) * p * (1.0 - p)

    lo, hi = law.t_range
    return (integrate_adaptive(num, lo, hi, spec, points=law.t_breaks)
            / integrate_adaptive(den, lo, hi, spec, points=law.t_breaks))


def _owen(z):
    """Antiderivative of Phi(z)^2."""
    c = norm_cdf(z)
    return z * c * c + 2.0 * c * norm_pdf(z) - norm_cdf(z * SQRT2) / SQRT_PI


def xi_model1_symbolic(a, b, sigma, spec=DEFAULT_QUAD):
    """xi for Y = X + e, X ~ unif(a, b), e ~ norm(0, sigma^2).

    The x-integral and the density of Y are in closed form; only the
    t-integral is numeric.
    """
    if not a < b:
        raise ValueError("need a < b")
    if not sigma > 0:
        raise ValueError("need sigma > 0")
    width = b - a

    def outer(t):
        fy = (norm_cdf((t - a) / sigma) - norm_cdf((t - b) / sigma)) / width
        inner = sigma / width * (_owen((b - t) / sigma) - _owen((a - t) / sigma))
        return fy * inner

    lo, hi = a - spec.truncation * sigma, b + spec.truncation * sigma
    return 6.0 * integrate_adaptive(outer, lo, hi, spec, points=(a, b)) - 2.0


def xi_model4_closed(p, p_prime):
    """(1 - p) p' / (1 - p p') for Y = X Z with X ~ binom(1, p), Z ~ binom(1, p')."""
    if p * p_prime == 1:
        raise ValueError("p * p' = 1 makes Y constant")
    return (1 - p) * p_prime / (1 - p * p_prime)


# -- discrete Y ----------------------------------------------------------------

def _merge_support(values, probs, tol=MERGE_TOL):
    order = np.argsort(values, kind="stable")
    values, probs = np.asarray(values, float)[order], np.asarray(probs, float)[order]
    out = {}
    rep = None
    for v, p in zip(values, probs):
        if rep is None or v - rep > tol:
            rep = float(v)
        out[rep] = out.get(rep, 0.0) + float(p)
    return out


def discrete_convolution(pa, pb, tol=MERGE_TOL):
    """pmf of A + B for independent finite pmfs given as ``{value: prob}``.

    Support points closer than ``tol`` are merged onto the smallest one.
    """
    va, wa = np.array(list(pa)), np.array(list(pa.values()))
    vb, wb = np.array(list(pb)), np.array(list(pb.values()))
    return _merge_support((va[:, None] + vb[None, :]).ravel(),
                          (wa[:, None] * wb[None, :]).ravel(), tol)


def pushforward(pmf, f):
    """pmf of f(V) for V ~ ``pmf``."""
    return _merge_support(f(np.array(list(pmf))), list(pmf.values()))


def xi_discrete(x_pmf, noise_pmf, f=None, combine=operator.add, tol=MERGE_TOL):
    """Exact xi for Y = combine(f(X), e) with finite X and e.

    For the additive case the pmf of Y is the discrete convolution of the
    pmf of f(X) with the noise pmf; otherwise it is tabulated from the
    product space.
    """
    for pmf in (x_pmf, noise_pmf):
        if abs(sum(pmf.values()) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
    f = f or (lambda v: v)
    xa, wx = np.array(list(x_pmf), float), np.array(list(x_pmf.values()))
    ea, we = np.array(list(noise_pmf), float), np.array(list(noise_pmf.values()))
    fx = f(xa)
    ys = combine(fx[:, None], ea[None, :])

    if combine is operator.add:
        mu = discrete_convolution(pushforward(x_pmf, f), noise_pmf, tol)
    else:
        mu = _merge_support(ys.ravel(), (wx[:, None] * we[None, :]).ravel(), tol)
    t = np.array(list(mu))
    mu_w = np.array(list(mu.values()))

    # cond[i, k] = P(Y >= t_k | X = x_i)
    cond = ((ys[:, :, None] >= t[None, None, :] - tol) * we[None, :, None]).sum(axis=1)
    p = wx @ cond
    num = mu_w @ (wx @ cond ** 2 - p ** 2)
    den = mu_w @ (p * (1.0 - p))
    if den <= 0:
        raise ValueError("Y is constant; xi is undefined")
    return float(num / den)


# -- dispatch --------------------------------------------------------------------

def model_law(model, spec=DEFAULT_QUAD):
    """ConditionalLaw of a continuous model (1-3 with sigma > 0, or 8)."""
    if model.id in (1, 2, 3):
        return ConditionalLaw.additive_normal(
            regression_function(model.id), model.sigma, model.a, model.b, spec.truncation)
    if model.id == 8:
        return ConditionalLaw.independent_uniform(model.a, model.b)
    raise ValueError(f"model {model.id} has no continuous law")


def model_discrete_parts(model):
    """``(x_pmf, noise_pmf, f, combine)`` for the discrete models 4-7."""
    if model.id == 4:
        return (pmf_of(Binom(1, model.p)), pmf_of(Binom(1, model.p_prime)),
                None, operator.mul)
    if model.id in (5, 6, 7):
        return (pmf_of(Equal(model.m, model.a, model.b)),
                pmf_of(ScaledCoinNoise(model.m_prime, model.sigma)),
                regression_function(model.id), operator.add)
    raise ValueError(f"model {model.id} is not one of the dependent discrete models")


@lru_cache(maxsize=256)
def xi_true(model, spec=DEFAULT_QUAD):
    """Asymptotic xi for a :class:`~xicorr.models.ModelSpec`.

    Model 1 is computed both by full numeric quadrature and through the
    closed-form x-integral; a disagreement above 1e-6 raises
    :class:`NumericalError`.
    """
    mid = model.id
    if mid in (8, 9, 10):
        return 0.0
    if mid == 4:
        return xi_model4_closed(model.p, model.p_prime)
    if mid in (5, 6, 7):
        return xi_discrete(*model_discrete_parts(model))
    if model.sigma == 0:
        return 1.0
    value = xi_continuous_numeric(model_law(model, spec), spec)
    if mid == 1:
        check = xi_model1_symbolic(model.a, model.b, model.sigma, spec)
        if abs(check - value) > 1e-6:
            raise NumericalError(
                f"model 1 quadrature paths disagree: {value!r} vs {check!r}")
    return value


def sigma_for_xi(model_id, target, lo=1e-3, hi=20.0, spec=DEFAULT_QUAD, **params):
    """Noise level sigma at which ``xi_true`` equals ``target``.

    Assumes xi is monotone in sigma on ``[lo, hi]`` (true for models 1-3).
    """
    def gap(s):
        return xi_true(ModelSpec(model_id, sigma=s, **params), spec) - target
    try:
        return optimize.brentq(gap, lo, hi, xtol=1e-10)
    except ValueError as exc:
        raise NumericalError(f"cannot bracket xi = {target} for model {model_id}: {exc}") from None
