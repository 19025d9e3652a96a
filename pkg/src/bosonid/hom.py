"""Two-particle interference experiments with loss and parity-projected detection.

Outcome labels are sorted tuples of 1-based sites where an odd number of
particles was detected; ``()`` is the empty event. Two particles on one site
read as empty.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from . import stats
from .bunching import coincidence_probability
from .errors import InputError

Label = tuple[int, ...]


def single_particle_distribution(u: np.ndarray, site: int, p_loss: float) -> dict[Label, float]:
    u = np.asarray(u)
    out: dict[Label, float] = {(): p_loss}
    for l in range(u.shape[0]):
        out[(l + 1,)] = (1 - p_loss) * abs(u[l, site - 1]) ** 2
    return out


def two_particle_distribution(
    u: np.ndarray, i: Sequence[int], indist: float, p_loss: float
) -> dict[Label, float]:
    """Lossy, parity-projected outcome distribution of two particles."""
    u = np.asarray(u)
    m = u.shape[0]
    i1, i2 = (s - 1 for s in i)
    keep = (1 - p_loss) ** 2
    out: dict[Label, float] = {}
    same_site = 0.0
    for l in range(m):
        same_site += (1 + indist) * abs(u[l, i1]) ** 2 * abs(u[l, i2]) ** 2
        one = p_loss * (1 - p_loss) * (abs(u[l, i1]) ** 2 + abs(u[l, i2]) ** 2)
        out[(l + 1,)] = one
        for l2 in range(l + 1, m):
            out[(l + 1, l2 + 1)] = keep * coincidence_probability(u, i, (l + 1, l2 + 1), indist)
    out[()] = p_loss**2 + keep * same_site
    return out


def sample_counts(dist: Mapping[Label, float], shots: int, rng: np.random.Generator) -> dict[Label, int]:
    labels = list(dist)
    p = np.clip(np.array([dist[k] for k in labels]), 0, None)
    draws = rng.multinomial(shots, p / p.sum())
    return {k: int(c) for k, c in zip(labels, draws)}


@dataclass
class HomEstimate:
    q: float
    q_plugin: float
    p_loss: float
    indist: Optional[float]
    lower_bound: float
    interval: Optional[tuple[float, float]]
    lower_bound_interval: Optional[tuple[float, float]]
    degenerate: bool


def _block(counts: Mapping[Label, int], labels: list[Label]) -> tuple[np.ndarray, int]:
    c = np.array([counts.get(k, 0) for k in labels], dtype=np.float64)
    n = int(c.sum())
    if n == 0:
        raise InputError("dataset has no counts")
    return c / n, n


class _Ratio:
    """``Q`` as a function of three frequency vectors, with the label layout fixed."""

    def __init__(self, singles_a, singles_b, pairs, sets):
        s1, s2 = (set(s) for s in sets)
        if s1 & s2:
            raise InputError("output subsets must be disjoint")
        self.la = sorted(singles_a, key=_order)
        self.lb = sorted(singles_b, key=_order)
        self.lp = sorted(pairs, key=_order)
        for lab in self.la + self.lb:
            if len(lab) > 1:
                raise InputError(f"single-particle data contains the two-site label {lab}")
        self.coinc = np.array(
            [len(k) == 2 and ((k[0] in s1 and k[1] in s2) or (k[0] in s2 and k[1] in s1)) for k in self.lp]
        )
        self.single = np.array([len(k) == 1 for k in self.lp])
        self.sa = [k[0] if k else None for k in self.la]
        self.sb = [k[0] if k else None for k in self.lb]
        self.s1, self.s2 = s1, s2

    def loss(self, fp):
        return stats.loss_from_single_survival(float(fp[self.single].sum()))

    def _dist(self, f, sites, subset):
        mask = np.array([s is not None for s in sites])
        surv = f[mask].sum()
        if surv <= 0:
            raise InputError("no surviving particle in a single-particle dataset")
        inside = np.array([s is not None and s in subset for s in sites])
        return f[inside].sum() / surv

    def __call__(self, fa, fb, fp):
        p_loss = self.loss(fp)
        pc = fp[self.coinc].sum() / (1 - p_loss) ** 2
        a1, a2 = self._dist(fa, self.sa, self.s1), self._dist(fa, self.sa, self.s2)
        b1, b2 = self._dist(fb, self.sb, self.s1), self._dist(fb, self.sb, self.s2)
        pd = a1 * b2 + a2 * b1
        if pd <= 0:
            raise InputError("distinguishable coincidence probability is zero")
        return float(pc / pd)


def _order(label: Label):
    return (len(label), label)


def estimate_hom(
    singles_a: Mapping[Label, int],
    singles_b: Mapping[Label, int],
    pairs: Mapping[Label, int],
    sets: Sequence[Sequence[int]] = ((1,), (2,)),
    tau: Optional[float] = None,
    n_boot: int = 0,
    seed: Optional[int] = None,
    alpha: float = 0.16,
) -> HomEstimate:
    """Indistinguishability from one HOM run and two single-particle calibration runs.

    Loss is inferred from the single-detection rate of the pair data, the
    coincidence rate is corrected for it, the distinguishable reference comes
    from time labeling the single-particle data, and the ratio is bias
    corrected block by block with the delta method. Intervals come from a
    multinomial bootstrap of the plug-in ratio.
    """
    ratio = _Ratio(singles_a, singles_b, pairs, sets)
    blocks = [_block(singles_a, ratio.la), _block(singles_b, ratio.lb), _block(pairs, ratio.lp)]
    freqs = [b[0] for b in blocks]
    q_plugin = ratio(*freqs)
    q = q_plugin
    for j, (f, n) in enumerate(blocks):
        if n < 2:
            continue

        def restricted(x, j=j):
            args = list(freqs)
            args[j] = x
            return ratio(*args)

        h = stats.numerical_hessian(restricted, f, step=1e-4 * max(f.max(), 1e-3))
        q = stats.delta_correct(q, h, stats.multinomial_sample_cov(f, n), n)
    p_loss = ratio.loss(freqs[2])
    indist = None
    if tau is not None:
        indist = _to_indist(q, tau)
    interval = lb_interval = None
    degenerate = False
    if n_boot:
        if seed is None:
            raise InputError("bootstrap needs an explicit seed")
        rng = np.random.default_rng(seed)
        reps = np.empty(n_boot)
        for b in range(n_boot):
            draws = [rng.multinomial(n, f) / n for f, n in blocks]
            try:
                reps[b] = ratio(*draws)
            except InputError:
                reps[b] = np.nan
        reps = reps[np.isfinite(reps)]
        res = stats.bootstrap_bc_interval(reps, q_plugin, alpha)
        degenerate = res.degenerate
        q_lo, q_hi = res.interval
        lb_interval = (1 - q_hi, 1 - q_lo)
        if tau is not None:
            interval = (_to_indist(q_hi, tau), _to_indist(q_lo, tau))
    return HomEstimate(q, q_plugin, p_loss, indist, 1 - q, interval, lb_interval, degenerate)


def _to_indist(q: float, tau: float) -> float:
    if tau <= 0:
        raise InputError("tau must be positive")
    return min((1 - q) / tau, 1.0)
