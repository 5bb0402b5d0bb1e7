"""Chatterjee's rank correlation, its exact upper bound and the normalized
estimator.

Pairs are ordered by ``x``; blocks of equal ``x`` are put in a uniformly
random order drawn from a seeded stream. Ties among the ``y`` values are
never broken: they enter through the reverse ranks ``l``.

Every public estimator has a row-wise twin (``*_rows``) that evaluates many
samples of equal size at once. The two agree bit for bit when the row-wise
version is given the tie-break keys ``tie_keys(seed, n)``.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._rng import make_rng, resolve_seed
from .errors import ConstantYError, LengthMismatchError, SampleSizeError, XiError


@dataclass(frozen=True)
class PairedSample:
    """Validated observation pairs ``(x_i, y_i)``."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1:
            raise XiError("x and y must be one-dimensional")
        if xs.shape != ys.shape:
            raise LengthMismatchError(
                f"x and y differ in length ({xs.size} != {ys.size})")
        if xs.size < 2:
            raise SampleSizeError(f"need at least 2 pairs, got {xs.size}")
        if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
            raise XiError("x and y must be finite")
        if (ys == ys[0]).all():
            raise ConstantYError()
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self):
        return self.xs.size


@dataclass(frozen=True)
class RankProfile:
    """Ranks after ordering by ``x``.

    ``r[i]`` counts the ``y`` values ``<= y[i]``, ``l[i]`` those ``>= y[i]``;
    ``order`` is the permutation of the input that sorts it by ``x``.
    """

    r: np.ndarray
    l: np.ndarray
    order: np.ndarray

    @property
    def n(self):
        return self.r.size


def _as_sample(x, y):
    return x if isinstance(x, PairedSample) and y is None else PairedSample(x, y)


def tie_keys(seed, n):
    """Tie-break keys for a sample of size ``n`` drawn from ``seed``."""
    return make_rng(seed).random(n)


def x_order_rows(x, keys):
    """Row-wise permutation sorting ``x`` with random order inside ties.

    A stable sort comes first and ``keys[k]`` is attached to the k-th sorted
    position, so the result depends on the values and the keys only.
    """
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, axis=-1, kind="stable")
    xs = np.take_along_axis(x, order, axis=-1)
    if (xs[..., 1:] == xs[..., :-1]).any():
        inner = np.lexsort((keys, xs), axis=-1)
        order = np.take_along_axis(order, inner, axis=-1)
    return order


def ranks_rows(y):
    """Return ``(r, l)`` for every row of ``y`` (no reordering)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    n = y.shape[-1]
    order = np.argsort(y, axis=-1, kind="stable")
    s = np.take_along_axis(y, order, axis=-1)
    idx = np.broadcast_to(np.arange(n), s.shape)

    starts = np.ones(s.shape, dtype=bool)
    starts[:, 1:] = s[:, 1:] != s[:, :-1]
    ends = np.ones(s.shape, dtype=bool)
    ends[:, :-1] = starts[:, 1:]

    first = np.maximum.accumulate(np.where(starts, idx, 0), axis=-1)
    last = np.minimum.accumulate(np.where(ends, idx, n - 1)[:, ::-1], axis=-1)[:, ::-1]

    r = np.empty(s.shape, dtype=np.int64)
    l = np.empty(s.shape, dtype=np.int64)
    np.put_along_axis(r, order, last + 1, axis=-1)
    np.put_along_axis(l, order, n - first, axis=-1)
    return r, l


def _terms_rows(x, y, keys):
    """Integer pieces of the estimator for each row.

    Returns ``(num, den, bound_gap)`` with xi_n = (den - num) / den and the
    upper bound equal to (den - bound_gap) / den.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    keys = np.atleast_2d(keys)
    n = x.shape[-1]
    order = x_order_rows(x, keys)
    r, l = ranks_rows(np.take_along_axis(y, order, axis=-1))
    num = n * np.abs(np.diff(r, axis=-1)).sum(axis=-1)
    den = 2 * (l * (n - l)).sum(axis=-1)
    gap = n * (n - r.min(axis=-1))
    return num, den, gap


def xi_rows(x, y, keys):
    """Raw xi_n for each row of ``x``/``y`` using the given tie-break keys."""
    num, den, _ = _terms_rows(x, y, keys)
    return (den - num) / den


def xi_normalized_rows(x, y, keys):
    """Normalized xi'_n for each row; rows need at least 3 columns."""
    num, den, gap = _terms_rows(x, y, keys)
    return np.maximum(-1.0, (den - num) / (den - gap))


def xi_both_rows(x, y, keys):
    """``(raw, normalized)`` from a single ranking pass."""
    num, den, gap = _terms_rows(x, y, keys)
    return (den - num) / den, np.maximum(-1.0, (den - num) / (den - gap))


def sort_with_random_ties(x, y=None, seed=None):
    """Order the pairs by ``x`` and compute the rank profile of the ``y``.

    ``x`` may also be a :class:`PairedSample` (then ``y`` is omitted).
    """
    s = _as_sample(x, y)
    keys = tie_keys(resolve_seed(seed), s.n)
    order = x_order_rows(s.xs[None, :], keys[None, :])[0]
    r, l = ranks_rows(s.ys[order][None, :])
    return RankProfile(r=r[0], l=l[0], order=order)


def xi_fraction(profile):
    """Exact rational value of xi_n for a rank profile."""
    n = profile.n
    num = n * int(np.abs(np.diff(profile.r)).sum())
    den = 2 * int((profile.l * (n - profile.l)).sum())
    return Fraction(den - num, den)


def xi_n(x, y=None, seed=None):
    """Chatterjee's xi_n.

    Parameters
    ----------
    x, y : array_like
        Paired observations (or a :class:`PairedSample` as ``x``).
    seed : int, optional
        Seed of the tie-break stream. Irrelevant when all ``x`` differ.

    Returns
    -------
    float
    """
    s = _as_sample(x, y)
    keys = tie_keys(resolve_seed(seed), s.n)
    return float(xi_rows(s.xs, s.ys, keys)[0])


def xi_upper_bound(y):
    """Maximum of xi_n over all orderings of ``x`` for fixed ``y``.

    Equals (n - 2) / (n + 1) when the ``y`` are distinct.
    """
    y = np.asarray(y, dtype=float)
    s = PairedSample(y, y)
    n = s.n
    r, l = ranks_rows(s.ys)
    den = 2 * int((l * (n - l)).sum())
    return (den - n * (n - int(r.min()))) / den


def xi_normalized(x, y=None, seed=None):
    """xi_n divided by its upper bound, cut off at -1. Needs n >= 3."""
    s = _as_sample(x, y)
    if s.n < 3:
        raise SampleSizeError("the normalized estimator needs n >= 3 "
                              "(the upper bound is 0 for n = 2)")
    keys = tie_keys(resolve_seed(seed), s.n)
    return float(xi_normalized_rows(s.xs, s.ys, keys)[0])


def total_variation(seq):
    """Sum of absolute successive differences of ``seq``."""
    seq = np.asarray(seq, dtype=float)
    if seq.size == 0:
        raise ValueError("total_variation of an empty sequence")
    return float(np.abs(np.diff(seq)).sum())
