"""Two-particle interference, indistinguishability estimators, immanants and bunching."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Mapping, Optional, Sequence

import numpy as np

from . import _accel, symrep
from .errors import InputError, NumericalError
from .hidden_dof import PartitionMixture, mixture_probability
from .linopt import occupations, occupied, submatrix
from .symrep import as_partition, hook_dimension


# ---------------------------------------------------------------- two particles


def coincidence_probability(u: np.ndarray, i: Sequence[int], l: Sequence[int], indist: float) -> float:
    """Probability that particles from sites ``i`` exit one each at sites ``l``.

    ``indist`` is the overlap ``Tr(rho1 rho2)`` of the internal states.
    """
    u = np.asarray(u)
    (i1, i2), (l1, l2) = (int(a) - 1 for a in i), (int(a) - 1 for a in l)
    if i1 == i2 or l1 == l2:
        raise InputError("inputs and outputs must be distinct pairs")
    if not 0.0 <= indist <= 1.0:
        raise InputError("indistinguishability must lie in [0, 1]")
    direct = abs(u[l1, i1]) ** 2 * abs(u[l2, i2]) ** 2 + abs(u[l1, i2]) ** 2 * abs(u[l2, i1]) ** 2
    cross = np.conj(u[l1, i1]) * np.conj(u[l2, i2]) * u[l1, i2] * u[l2, i1]
    return float(direct + 2 * indist * cross.real)


def _pair_terms(u, subsets, i):
    s1, s2 = subsets
    if set(s1) & set(s2):
        raise InputError("output subsets must be disjoint")
    i1, i2 = (int(a) - 1 for a in i)
    if i1 == i2:
        raise InputError("input sites must be distinct")
    a = np.asarray(s1, dtype=np.int64) - 1
    b = np.asarray(s2, dtype=np.int64) - 1
    ua1, ua2 = u[a, i1][:, None], u[a, i2][:, None]
    ub1, ub2 = u[b, i1][None, :], u[b, i2][None, :]
    direct = np.abs(ua1) ** 2 * np.abs(ub2) ** 2 + np.abs(ua2) ** 2 * np.abs(ub1) ** 2
    cross = 2 * (np.conj(ua1) * np.conj(ub2) * ua2 * ub1).real
    return direct.sum(), cross.sum()


def tau(u: np.ndarray, subsets: Sequence[Sequence[int]], i: Sequence[int]) -> float:
    """Interference visibility of a pair of disjoint output subsets; at most 1."""
    direct, cross = _pair_terms(np.asarray(u), subsets, i)
    if direct <= 0:
        raise InputError("degenerate setting: distinguishable coincidence probability is zero")
    return float(-cross / direct)


def coincidence_ratio(indist: float, tau_value: float) -> float:
    """``Q = 1 - I tau``: coincidences relative to distinguishable particles."""
    return 1.0 - indist * tau_value


def estimate_indistinguishability(q_hat: float, tau_value: float) -> float:
    """``(1 - Q) / tau`` with the upper end clipped to 1."""
    if tau_value <= 0:
        raise InputError("tau must be positive")
    return min((1.0 - q_hat) / tau_value, 1.0)


def indistinguishability_lower_bound(q_hat: float) -> float:
    """``1 - Q``, valid whenever ``tau <= 1`` and needing no calibration of tau."""
    return 1.0 - q_hat


def indistinguishability_from_vacuum(p2_empty: float, p1_empty_a: float, p1_empty_b: float, same_site_dist: float) -> float:
    """Indistinguishability from the rate of empty two-particle outcomes.

    ``same_site_dist`` is ``sum_l p(l|i1) p(l|i2)`` built from the *observed*
    single-particle probabilities, so it carries the same survival factor as
    the two-particle data.
    """
    if same_site_dist <= 0:
        raise InputError("same-site probability must be positive")
    return (p2_empty - p1_empty_a * p1_empty_b - same_site_dist) / same_site_dist


# ---------------------------------------------------------------- immanants


def normalized_immanant(m: np.ndarray, lam) -> complex:
    """``(1 / chi(e)) sum_sigma chi_lam(sigma) prod_x M[x, sigma(x)]``."""
    lam = as_partition(lam)
    m = np.asarray(m, dtype=np.complex128)
    n = lam.n
    if m.shape != (n, n):
        raise InputError(f"matrix shape {m.shape} does not match partition of {n}")
    perms = symrep.permutation_table(n)
    products = np.prod(m[np.arange(n)[None, :], perms], axis=1)
    chars = _char_per_perm(lam)
    return complex(chars @ products / hook_dimension(lam))


def _char_per_perm(lam) -> np.ndarray:
    lam = as_partition(lam)
    parts = symrep.partitions_of(lam.n)
    values = np.array([symrep.character(lam, mu) for mu in parts], dtype=np.float64)
    return values[symrep.class_index_table(lam.n)]


def gram_matrix(u: np.ndarray, i: Sequence[int], subset: Sequence[int]) -> np.ndarray:
    """``G[x, y] = <U(S|i_x), U(S|i_y)> = sum_{s in S} conj(U[s, i_x]) U[s, i_y]``."""
    block = submatrix(u, subset, i)
    return block.conj().T @ block


def generalized_bunching(u: np.ndarray, i: Sequence[int], subset: Sequence[int], mix: PartitionMixture) -> float:
    """Probability that every particle lands in ``subset``."""
    if len(subset) < 1:
        raise InputError("subset must be nonempty")
    if len(set(i)) != len(i):
        raise InputError("input sites must be distinct")
    g = gram_matrix(np.asarray(u), i, subset)
    total = 0.0 + 0.0j
    for lam, p in mix.weights.items():
        if p > 0:
            total += p * normalized_immanant(g, lam)
    if abs(total.imag) > 1e-10:
        raise NumericalError(f"bunching probability has imaginary part {total.imag}")
    return float(total.real)


def binomial_ratio(m: int, k: int, occupied_sites: int) -> float:
    """``C(m - j, k - j) / C(m, k)``: share of k-subsets containing j fixed sites."""
    j = occupied_sites
    if j > k:
        return 0.0
    return comb(m - j, k - j) / comb(m, k)


def fermionic_floor(m: int, n: int, k: int) -> Fraction:
    """Averaged bunching of fermions, ``C(m - n, k - n) / C(m, k)``, exactly."""
    if k < n:
        return Fraction(0)
    return Fraction(comb(m - n, k - n), comb(m, k))


def optimal_k(m: int, n: int) -> int:
    """Subset size ``round(m - m / n)`` maximizing the bosonic excess."""
    return int(np.floor(m - m / n + 0.5))


def average_generalized_bunching(u: np.ndarray, i: Sequence[int], k: int, mix: PartitionMixture) -> float:
    """Average of the bunching probability over all subsets of size ``k``.

    Computed as the expectation of ``C(m - #g, k - #g) / C(m, k)`` over the
    exact outcome distribution.
    """
    u = np.asarray(u)
    m = u.shape[0]
    n = len(i)
    if not 1 <= k <= m:
        raise InputError(f"subset size {k} outside 1..{m}")
    if k < n:
        warnings.warn(f"subset size {k} is below the particle number {n}", stacklevel=2)
    total = 0.0
    for g in occupations(n, m):
        ratio = binomial_ratio(m, k, occupied(g))
        if ratio:
            total += ratio * mixture_probability(mix, u, i, g)
    return total


def subset_average_bunching(u: np.ndarray, i: Sequence[int], k: int, mix: PartitionMixture) -> float:
    """Same quantity as :func:`average_generalized_bunching`, by enumerating subsets."""
    m = np.asarray(u).shape[0]
    values = [
        generalized_bunching(u, i, [s + 1 for s in subset], mix)
        for subset in itertools.combinations(range(m), k)
    ]
    return float(np.mean(values))


# ---------------------------------------------------------------- parity-projected Monte Carlo


LOSS = None


def modified_bunching_mc(
    single_particle_counts: Sequence[Mapping[Optional[int], int]],
    m: int,
    k: int,
    n_mc: int,
    seed: int,
) -> float:
    """Monte Carlo estimate of the parity-projected averaged bunching.

    ``single_particle_counts[a]`` maps an outcome site (1-based) or ``None``
    for a lost particle to its count in the single-particle data of input
    ``a``. One outcome per input is resampled with replacement, occupations
    are reduced mod 2, and ``C(m - #, k - #) / C(m, k)`` is averaged.
    """
    if not single_particle_counts:
        raise InputError("no single-particle datasets")
    if n_mc < 1:
        raise InputError("need at least one Monte Carlo draw")
    probs, sites = [], []
    for data in single_particle_counts:
        items = sorted(data.items(), key=lambda kv: -1 if kv[0] is None else kv[0])
        counts = np.array([c for _, c in items], dtype=np.float64)
        if counts.sum() <= 0:
            raise InputError("empty single-particle dataset")
        for s, _ in items:
            if s is not None and not 1 <= s <= m:
                raise InputError(f"site {s} outside 1..{m}")
        probs.append(counts / counts.sum())
        sites.append([-1 if s is None else s - 1 for s, _ in items])
    return _accel.parity_bunching_mc(probs, sites, m, k, n_mc, seed)


# ---------------------------------------------------------------- permanental dominance


@dataclass
class DominanceViolation:
    """A case where some irrep bunches more than the symmetric one."""

    unitary: np.ndarray
    inputs: tuple[int, ...]
    subset: tuple[int, ...]
    partition: tuple[int, ...]
    symmetric_value: float
    other_value: float


def permanental_dominance_scan(
    n: int, m: int, trials: int, rng: np.random.Generator, tol: float = 1e-10
) -> list[DominanceViolation]:
    """Random search for ``b(S | (n)) < b(S | lam)``; returns every violation found."""
    from .linopt import random_unitary

    violations = []
    parts = symrep.partitions_of(n)
    for _ in range(trials):
        u = random_unitary(m, rng)
        inputs = tuple(int(x) + 1 for x in rng.choice(m, size=n, replace=False))
        size = int(rng.integers(1, m + 1))
        subset = tuple(sorted(int(x) + 1 for x in rng.choice(m, size=size, replace=False)))
        g = gram_matrix(u, inputs, subset)
        sym = normalized_immanant(g, parts[0]).real
        for lam in parts[1:]:
            other = normalized_immanant(g, lam).real
            if other > sym + tol:
                violations.append(DominanceViolation(u, inputs, subset, lam.parts, sym, other))
    return violations
