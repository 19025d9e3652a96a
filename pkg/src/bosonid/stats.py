"""Bias correction, bootstrap and binomial intervals, sample sizing, loss calibration."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, log, sqrt
from statistics import NormalDist
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import binom

from .errors import InputError

_NORMAL = NormalDist()

DEFAULT_ALPHA = (1 - 0.68) / 2
DEFAULT_BETA_UPPER = 0.004
DEFAULT_BETA_LOWER = 0.15999


# ---------------------------------------------------------------- delta method


def delta_correct(f_value: float, hessian: np.ndarray, sample_cov: np.ndarray, n_samples: int) -> float:
    """``f(Xbar) - Tr(cov H) / (2 n)``: removes the leading ``1/n`` bias of ``f(Xbar)``."""
    h = np.atleast_2d(np.asarray(hessian, dtype=np.float64))
    c = np.atleast_2d(np.asarray(sample_cov, dtype=np.float64))
    if h.shape != c.shape or h.shape[0] != h.shape[1]:
        raise InputError(f"hessian {h.shape} and covariance {c.shape} must be equal square shapes")
    if n_samples < 1:
        raise InputError("need at least one sample")
    return float(f_value - 0.5 * np.sum(c * h.T) / n_samples)


def numerical_hessian(f: Callable[[np.ndarray], float], x: Sequence[float], step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    d = x.size
    h = np.empty((d, d))
    f0 = f(x)
    for a in range(d):
        ea = np.zeros(d)
        ea[a] = step
        h[a, a] = (f(x + ea) - 2 * f0 + f(x - ea)) / step**2
        for b in range(a):
            eb = np.zeros(d)
            eb[b] = step
            val = (f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)) / (4 * step**2)
            h[a, b] = h[b, a] = val
    return h


def multinomial_sample_cov(freqs: Sequence[float], n: int) -> np.ndarray:
    """Unbiased covariance of one one-hot draw, ``n / (n - 1) (diag p - p p^T)``."""
    p = np.asarray(freqs, dtype=np.float64)
    if n < 2:
        raise InputError("sample covariance needs at least two draws")
    return n / (n - 1) * (np.diag(p) - np.outer(p, p))


# ---------------------------------------------------------------- bootstrap


@dataclass
class BootstrapResult:
    point: float
    replicates: np.ndarray
    interval: tuple[float, float]
    alpha: float
    degenerate: bool = False
    z0: float = 0.0
    levels: tuple[float, float] = field(default=(0.0, 1.0))


def bootstrap_bc_interval(
    replicates: Sequence[float],
    point: float,
    alpha: float,
    clip_hi: Optional[float] = None,
) -> BootstrapResult:
    """Bias-corrected percentile interval without acceleration.

    ``alpha`` is the mass in each tail, so ``alpha = 0.16`` gives a 68 %
    interval. The bias constant is ``z0 = Phi^-1(#(theta_b <= theta) / B)``.
    """
    reps = np.sort(np.asarray(replicates, dtype=np.float64))
    if reps.size < 2:
        raise InputError("need at least two bootstrap replicates")
    if not 0 < alpha < 0.5:
        raise InputError("alpha must lie in (0, 0.5)")
    if np.all(reps == reps[0]) and reps[0] == point:
        return BootstrapResult(point, reps, (point, point), alpha, degenerate=True)
    share = np.count_nonzero(reps <= point) / reps.size
    # keep the bias constant finite when every replicate sits on one side
    share = min(max(share, 0.5 / reps.size), 1 - 0.5 / reps.size)
    z0 = _NORMAL.inv_cdf(share)
    a1 = _NORMAL.cdf(2 * z0 + _NORMAL.inv_cdf(alpha))
    a2 = _NORMAL.cdf(2 * z0 + _NORMAL.inv_cdf(1 - alpha))
    lo, hi = float(np.quantile(reps, a1)), float(np.quantile(reps, a2))
    if clip_hi is not None:
        lo, hi = min(lo, clip_hi), min(hi, clip_hi)
    return BootstrapResult(point, reps, (lo, hi), alpha, z0=z0, levels=(a1, a2))


# ---------------------------------------------------------------- binomial intervals


def clopper_pearson(k: int, n: int, alpha: float, side: str) -> float:
    """One-sided exact binomial bound at level ``1 - alpha``.

    The upper bound solves ``P(X <= k | p) = alpha`` and the lower bound
    solves ``P(X >= k | p) = alpha``; both tails are monotone in ``p``, so a
    bracketing root finder converges. These are the Beta quantiles ``B(1-alpha; k+1, n-k)``
    and ``B(alpha; k, n-k+1)``.
    """
    if not 0 <= k <= n:
        raise InputError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0 < alpha < 1:
        raise InputError("alpha must lie in (0, 1)")
    if side == "upper":
        if k == n:
            return 1.0
        tail = lambda p: binom.cdf(k, n, p) - alpha  # decreasing in p
    elif side == "lower":
        if k == 0:
            return 0.0
        tail = lambda p: alpha - binom.sf(k - 1, n, p)  # decreasing in p
    else:
        raise InputError(f"side must be 'lower' or 'upper', not {side!r}")
    return float(brentq(tail, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps))


@dataclass
class RatioInterval:
    lower: float
    upper: float
    unbounded: bool = False


def union_ratio_interval(
    num: tuple[int, int],
    den: tuple[int, int],
    alpha: float = DEFAULT_ALPHA,
    beta_upper: float = DEFAULT_BETA_UPPER,
    beta_lower: float = DEFAULT_BETA_LOWER,
) -> RatioInterval:
    """Interval for ``p_num / p_den`` from two one-sided Clopper-Pearson bounds.

    The failure probability ``alpha`` of each side is split between the
    numerator (``alpha - beta``) and the denominator (``beta``).
    """
    for beta in (beta_upper, beta_lower):
        if not 0 < beta < alpha:
            raise InputError("each beta must lie strictly between 0 and alpha")
    (kn, nn), (kd, nd) = num, den
    lower_den = clopper_pearson(kd, nd, beta_upper, "lower")
    if lower_den <= 0:
        upper, unbounded = float("inf"), True
    else:
        upper, unbounded = clopper_pearson(kn, nn, alpha - beta_upper, "upper") / lower_den, False
    upper_den = clopper_pearson(kd, nd, beta_lower, "upper")
    lower = clopper_pearson(kn, nn, alpha - beta_lower, "lower") / upper_den
    return RatioInterval(lower, upper, unbounded)


# ---------------------------------------------------------------- sample sizes


def bernoulli_kl(a: float, b: float) -> float:
    """``D(a || b)`` between Bernoulli distributions, in nats."""
    if not 0 < b < 1 or not 0 <= a <= 1:
        raise InputError("Bernoulli parameters out of range")
    out = 0.0
    if a > 0:
        out += a * log(a / b)
    if a < 1:
        out += (1 - a) * log((1 - a) / (1 - b))
    return out


def chernoff_samples(p_ref: float, epsilon: float, delta: float, cap: Optional[int] = None) -> int:
    """``ceil(2 log(1/delta) / D(p(1+eps) || p))``, optionally capped."""
    if not p_ref > 0 or not p_ref * (1 + epsilon) < 1:
        raise InputError("need 0 < p and p (1 + eps) < 1")
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    div = bernoulli_kl(p_ref * (1 + epsilon), p_ref)
    if div <= 0:
        raise InputError("zero divergence: infinitely many samples needed")
    n = ceil(2 * log(1 / delta) / div)
    return min(n, cap) if cap is not None else n


def hoeffding_samples(p_ref: float, epsilon: float, delta: float) -> int:
    """``ceil(log(2/delta) / (2 (p eps)^2))``, clamped at zero."""
    if not p_ref * epsilon > 0:
        raise InputError("need p * eps > 0")
    if delta <= 0:
        raise InputError("delta must be positive")
    return max(0, ceil(log(2 / delta) / (2 * (p_ref * epsilon) ** 2)))


# ---------------------------------------------------------------- loss and time labeling


def loss_from_single_survival(p_beta: float) -> float:
    """Smaller root of ``2 p (1 - p) = p_beta``."""
    if p_beta < 0 or p_beta > 0.5:
        raise InputError(f"single-survival rate {p_beta} outside [0, 1/2]; loss model violated")
    return (1 - sqrt(1 - 2 * p_beta)) / 2


def time_label_two_particle(
    dist_a: Mapping[int, float], dist_b: Mapping[int, float]
) -> dict[tuple[int, int], float]:
    """Distinguishable two-particle distribution from two single-particle ones.

    Keys are sorted site pairs; ``(l, l)`` carries ``p_a(l) p_b(l)``.
    """
    out: dict[tuple[int, int], float] = {}
    for la, pa in dist_a.items():
        for lb, pb in dist_b.items():
            key = (la, lb) if la <= lb else (lb, la)
            out[key] = out.get(key, 0.0) + pa * pb
    return out
