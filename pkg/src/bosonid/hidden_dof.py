"""Outcome distributions of bosons carrying an unobserved internal degree of freedom.

The internal state enters through its auxiliary state ``h`` on the n-fold
label space, or through the class function ``k(pi) = Tr(P_pi^dag h)`` when
``h`` is permutation invariant. Permutation-invariant states reduce to a
mixture over irreps of S_n with weights ``p^lam``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, prod
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from . import symrep
from .errors import InputError, NumericalError, SizeLimitError
from .linopt import multi_factorial, xi, zeta
from .symrep import Partition, as_partition, hook_dimension, partitions_of

MAX_N = 6
CLIP_TOL = 1e-10
INVALID_TOL = 1e-6


# ---------------------------------------------------------------- state types


@dataclass(frozen=True)
class AuxiliaryClassFunction:
    """Class function on S_n, keyed by cycle type."""

    n: int
    values: Mapping[Partition, complex]

    def __post_init__(self):
        vals = {as_partition(mu): complex(v) for mu, v in self.values.items()}
        missing = set(partitions_of(self.n)) - set(vals)
        if missing:
            raise InputError(f"class function undefined on {sorted(m.parts for m in missing)}")
        ident = vals[Partition((1,) * self.n)]
        if abs(ident - 1) > 1e-10:
            raise InputError(f"class function must equal 1 at the identity, got {ident}")
        object.__setattr__(self, "values", vals)

    def __call__(self, sigma) -> complex:
        return self.values[symrep.cycle_type(sigma)]

    def class_vector(self) -> np.ndarray:
        """Values in :func:`partitions_of` order."""
        return np.array([self.values[mu] for mu in partitions_of(self.n)])

    @classmethod
    def constant(cls, n: int) -> "AuxiliaryClassFunction":
        """``k = 1``: all internal labels equal (indistinguishable)."""
        return cls(n, {mu: 1.0 for mu in partitions_of(n)})

    @classmethod
    def delta_identity(cls, n: int) -> "AuxiliaryClassFunction":
        """``k = delta_e``: orthogonal internal states (distinguishable)."""
        ident = Partition((1,) * n)
        return cls(n, {mu: float(mu == ident) for mu in partitions_of(n)})

    @classmethod
    def from_single_particle_state(cls, rho: np.ndarray, n: int) -> "AuxiliaryClassFunction":
        """Class function of ``rho^{(x) n}``: product of ``Tr(rho^l)`` over cycles."""
        rho = np.asarray(rho, dtype=np.complex128)
        powers = {}
        acc = np.eye(rho.shape[0], dtype=np.complex128)
        for length in range(1, n + 1):
            acc = acc @ rho
            powers[length] = np.trace(acc)
        return cls(n, {mu: prod(powers[l] for l in mu.parts) for mu in partitions_of(n)})


@dataclass(frozen=True)
class ExplicitAuxiliaryState:
    """Density matrix on ``(C^labels)^{(x) n}`` used as a brute-force reference."""

    n: int
    labels: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        h = np.asarray(self.matrix, dtype=np.complex128)
        dim = self.labels**self.n
        if h.shape != (dim, dim):
            raise InputError(f"auxiliary state must be {dim}x{dim}, got {h.shape}")
        if not np.allclose(h, h.conj().T, atol=1e-10):
            raise InputError("auxiliary state is not Hermitian")
        if np.linalg.eigvalsh((h + h.conj().T) / 2).min() < -1e-10:
            raise InputError("auxiliary state is not positive semidefinite")
        if abs(np.trace(h) - 1) > 1e-10:
            raise InputError("auxiliary state must have unit trace")
        object.__setattr__(self, "matrix", h)

    @classmethod
    def product(cls, rhos: Sequence[np.ndarray]) -> "ExplicitAuxiliaryState":
        """Tensor product of single-particle internal states."""
        out = np.ones((1, 1), dtype=np.complex128)
        for r in rhos:
            out = np.kron(out, np.asarray(r, dtype=np.complex128))
        return cls(len(rhos), np.asarray(rhos[0]).shape[0], out)

    @classmethod
    def from_coefficients(cls, psi: np.ndarray, sites: Sequence[int]) -> "ExplicitAuxiliaryState":
        """Pure auxiliary state from coefficients ``psi[j_1, ..., j_n]``.

        Coefficients are first symmetrized over permutations that fix the
        site list and then normalized, so the state has unit trace.
        """
        psi = np.asarray(psi, dtype=np.complex128)
        n = psi.ndim
        sym = symmetrize_for_sites(psi, sites)
        norm = np.linalg.norm(sym)
        if norm == 0:
            raise InputError("coefficients vanish after symmetrization")
        vec = (sym / norm).reshape(-1)
        return cls(n, psi.shape[0], np.outer(vec, vec.conj()))

    def permutation_traces(self) -> np.ndarray:
        """``Tr(P_pi h)`` for every permutation, in canonical order."""
        n, w = self.n, self.labels
        tensor = self.matrix.reshape((w,) * (2 * n))
        out = []
        for pi in symrep.all_permutations(n):
            # <j|P_pi h|j> = h[pi^-1 . j, j], with (pi^-1 . j)_x = j_{pi(x)}
            out.append(np.einsum(tensor, list(pi) + list(range(n))))
        return np.array(out)


def symmetrize_for_sites(psi: np.ndarray, sites: Sequence[int]) -> np.ndarray:
    """Average ``psi`` over the permutations fixing ``sites`` (the Young subgroup)."""
    n = psi.ndim
    stabilizer = [
        s for s in symrep.all_permutations(n) if all(sites[s[x]] == sites[x] for x in range(n))
    ]
    acc = np.zeros_like(psi)
    for s in stabilizer:
        acc += np.transpose(psi, s)
    return acc / len(stabilizer)


def orbit_size(sites: Sequence[int], labels: Sequence[int]) -> int:
    """Size of the orbit of ``labels`` under permutations fixing ``sites``.

    Equals ``xi(sites)! / xi(sites, labels)!``.
    """
    pairs: dict[tuple[int, int], int] = {}
    per_site: dict[int, int] = {}
    for s, l in zip(sites, labels):
        pairs[(s, l)] = pairs.get((s, l), 0) + 1
        per_site[s] = per_site.get(s, 0) + 1
    return prod(factorial(c) for c in per_site.values()) // prod(
        factorial(c) for c in pairs.values()
    )


@dataclass(frozen=True)
class PartitionMixture:
    """Probability weights over the partitions of ``n``."""

    n: int
    weights: Mapping[Partition, float]

    def __post_init__(self):
        w = {as_partition(lam): float(p) for lam, p in self.weights.items()}
        for lam in w:
            if lam.n != self.n:
                raise InputError(f"{lam} is not a partition of {self.n}")
        for lam in partitions_of(self.n):
            w.setdefault(lam, 0.0)
        if min(w.values()) < -1e-12:
            raise InputError("negative mixture weight")
        w = {lam: max(p, 0.0) for lam, p in w.items()}
        total = sum(w.values())
        if abs(total - 1) > 1e-10:
            raise InputError(f"mixture weights sum to {total}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def single(cls, lam) -> "PartitionMixture":
        lam = as_partition(lam)
        return cls(lam.n, {lam: 1.0})

    def __getitem__(self, lam) -> float:
        return self.weights[as_partition(lam)]


def bosonic_mixture(n: int) -> PartitionMixture:
    return PartitionMixture.single((n,))


def fermionic_mixture(n: int) -> PartitionMixture:
    return PartitionMixture.single((1,) * n)


def plancherel_weights(n: int) -> PartitionMixture:
    """``p^lam = (f^lam)^2 / n!``; the x -> 1 limit of the thermal weights."""
    return PartitionMixture(n, {lam: hook_dimension(lam) ** 2 / factorial(n) for lam in partitions_of(n)})


def plancherel_weights_exact(n: int) -> dict[Partition, Fraction]:
    return {lam: Fraction(hook_dimension(lam) ** 2, factorial(n)) for lam in partitions_of(n)}


# ---------------------------------------------------------------- thermal states


def _check_x(x: float) -> None:
    if not 0.0 <= x < 1.0:
        raise InputError(f"thermal parameter must lie in [0, 1), got {x}; use plancherel_weights for x -> 1")


def thermal_class_function(x: float, n: int) -> AuxiliaryClassFunction:
    """``k_x(pi) = (1 - x)^n prod_cycles 1 / (1 - x^len)`` for a thermal oscillator."""
    _check_x(x)
    return AuxiliaryClassFunction(
        n, {mu: (1 - x) ** n / prod(1 - x**l for l in mu.parts) for mu in partitions_of(n)}
    )


def thermal_schur_coefficient(lam, x: float) -> float:
    """``(1 - x)^n x^b(lam) / prod_u (1 - x^h(u))``."""
    lam = as_partition(lam)
    _check_x(x)
    return (1 - x) ** lam.n * x ** lam.b() / prod(1 - x**h for h in lam.hook_lengths())


def thermal_partition_weights(x: float, n: int) -> PartitionMixture:
    """Irrep weights ``f^lam * (1 - x)^n x^b / prod(1 - x^h)`` of a thermal product state."""
    _check_x(x)
    weights = {lam: hook_dimension(lam) * thermal_schur_coefficient(lam, x) for lam in partitions_of(n)}
    total = sum(weights.values())
    if abs(total - 1) > 1e-9:
        raise NumericalError(f"thermal weights sum to {total}")
    return PartitionMixture(n, {lam: p / total for lam, p in weights.items()})


def thermal_symmetric_weight(x: float, n: int) -> float:
    """Weight of the symmetric irrep, ``prod_k (1 - x) / (1 - x^k)``."""
    _check_x(x)
    return prod((1 - x) / (1 - x**k) for k in range(1, n + 1))


def weights_from_class_function(k: AuxiliaryClassFunction) -> PartitionMixture:
    """``p^lam = (f^lam / n!) sum_sigma chi_lam(sigma) k(sigma)``."""
    n = k.n
    parts, chi = symrep.character_table(n)
    sizes = np.array([symrep.class_size(mu) for mu in parts], dtype=np.float64)
    kv = k.class_vector()
    dims = np.array([hook_dimension(lam) for lam in parts], dtype=np.float64)
    raw = dims / factorial(n) * (chi @ (sizes * kv))
    if np.abs(raw.imag).max() > INVALID_TOL:
        raise InputError("class function yields complex irrep weights")
    w = raw.real
    if w.min() < -INVALID_TOL or w.max() > 1 + INVALID_TOL:
        raise InputError(f"class function is not a physical state: weights {w}")
    w = np.where(w < 0, 0.0, w)
    w = w / w.sum()
    return PartitionMixture(n, dict(zip(parts, w)))


def class_function_from_weights(mix: PartitionMixture) -> AuxiliaryClassFunction:
    """``k(mu) = sum_lam p^lam chi_lam(mu) / f^lam``, inverse of :func:`weights_from_class_function`."""
    parts, chi = symrep.character_table(mix.n)
    dims = np.array([hook_dimension(lam) for lam in parts], dtype=np.float64)
    p = np.array([mix[lam] for lam in parts])
    values = (p / dims) @ chi
    return AuxiliaryClassFunction(mix.n, dict(zip(parts, values)))


# ---------------------------------------------------------------- models


def _site_amplitudes(u: np.ndarray, rows: Sequence[int], cols: Sequence[int], perms: np.ndarray) -> np.ndarray:
    """``prod_x U[rows_x, cols_{sigma^-1(x)}]`` for every permutation sigma."""
    r = np.asarray(rows, dtype=np.int64) - 1
    c = np.asarray(cols, dtype=np.int64) - 1
    inv = np.argsort(perms, axis=1)
    n = len(r)
    return np.prod(u[r[None, :], c[inv]], axis=1) if n else np.ones(len(perms), dtype=np.complex128)


def _kernel_matrix(aux, n: int) -> np.ndarray:
    """``K[s, t] = Tr(P_t^dag P_s h)`` over canonical permutation indices."""
    if isinstance(aux, AuxiliaryClassFunction):
        if aux.n != n:
            raise InputError(f"class function on S_{aux.n}, but {n} particles")
        return aux.class_vector()[symrep.pair_class_table(n)]
    if isinstance(aux, ExplicitAuxiliaryState):
        if aux.n != n:
            raise InputError(f"auxiliary state for {aux.n} particles, but {n} prepared")
        traces = aux.permutation_traces()
        # Tr(P_t^dag P_s h) = Tr(P_{t^-1 s} h)
        index = symrep._perm_index(n)
        perms = symrep.all_permutations(n)
        K = np.empty((len(perms), len(perms)), dtype=np.complex128)
        for a, s in enumerate(perms):
            for b, t in enumerate(perms):
                K[a, b] = traces[index[symrep.compose(symrep.inverse(t), s)]]
        return K
    raise InputError(f"unsupported auxiliary description {type(aux).__name__}")


def direct_model_probability(u: np.ndarray, i: Sequence[int], aux, g: Sequence[int], max_n: int = MAX_N) -> float:
    """Outcome probability from the double sum over S_n x S_n.

    ``(1 / xi(i)!) (1 / g!) sum_{sigma, tau} Tr(P_tau^dag P_sigma h)
    Delta(U*(zeta(g)|tau.i)) Delta(U(zeta(g)|sigma.i))``.
    """
    u = np.asarray(u, dtype=np.complex128)
    n = len(i)
    if n > max_n:
        raise SizeLimitError(f"direct model capped at n={max_n}")
    if sum(g) != n or len(g) != u.shape[0]:
        raise InputError("outcome does not match input size or mode count")
    if isinstance(aux, AuxiliaryClassFunction) and len(set(i)) != n:
        raise InputError("class-function route needs distinct input sites")
    perms = symrep.permutation_table(n)
    a = _site_amplitudes(u, zeta(g), i, perms)
    K = _kernel_matrix(aux, n)
    value = np.conj(a) @ K.T @ a  # sum_{s,t} K[s,t] conj(a_t) a_s
    norm = multi_factorial(xi(i, u.shape[1])) * multi_factorial(g)
    return float(value.real / norm)


def _require_distinct(i: Sequence[int]) -> None:
    if len(set(i)) != len(i):
        raise InputError("irrep decomposition needs each input site occupied once")


def irrep_projector(lam, u: np.ndarray, i: Sequence[int], g: Sequence[int], max_n: int = MAX_N) -> np.ndarray:
    """``Pi_g^lam = F(alpha)(lam) F(alpha)(lam)^dag`` with
    ``alpha(sigma) = Delta(U*(zeta(g)|sigma^-1.i)) / sqrt(g!)``."""
    lam = as_partition(lam)
    u = np.asarray(u, dtype=np.complex128)
    n = len(i)
    _require_distinct(i)
    if n > max_n:
        raise SizeLimitError(f"irrep projectors capped at n={max_n}")
    if lam.n != n:
        raise InputError(f"{lam} is not a partition of {n}")
    if sum(g) != n:
        raise InputError("outcome does not match input size")
    perms = symrep.permutation_table(n)
    inv = np.argsort(perms, axis=1)
    # sigma^-1 . i is i permuted by sigma itself
    alpha = np.conj(_site_amplitudes(u, zeta(g), i, inv)) / np.sqrt(multi_factorial(g))
    block = np.tensordot(alpha, symrep.rep_table(lam), axes=(0, 0))
    return block @ block.conj().T


def irrep_component_probability(lam, u, i, g) -> float:
    """``q_lam(g) = Tr(Pi_g^lam) / f^lam``."""
    lam = as_partition(lam)
    return float(np.trace(irrep_projector(lam, u, i, g)).real / hook_dimension(lam))


def mixture_probability(mix: PartitionMixture, u: np.ndarray, i: Sequence[int], g: Sequence[int]) -> float:
    """``sum_lam p^lam q_lam(g)``."""
    if mix.n != len(i):
        raise InputError(f"mixture over S_{mix.n} but {len(i)} particles")
    return float(
        sum(p * irrep_component_probability(lam, u, i, g) for lam, p in mix.weights.items() if p > 0)
    )


# ---------------------------------------------------------------- restricted model


def restricted_probability(
    u_sub: np.ndarray,
    x: Optional[float],
    h: Sequence[int],
    gram_tol: float = 1e-8,
    max_n: int = MAX_N,
    kernel: Optional[AuxiliaryClassFunction] = None,
) -> float:
    """Thermal-state probability that exactly pattern ``h`` lands in S.

    ``u_sub`` is ``U(S|i)``: one row per site of S and one column per
    (distinct) input. The other ``n - |h|`` particles land anywhere outside
    S. Only ``U(S|i)`` enters, through ``I - U(S|i)^dag U(S|i)``. A
    ``kernel`` class function replaces the thermal one when given.
    """
    u_sub = np.asarray(u_sub, dtype=np.complex128)
    n = u_sub.shape[1]
    if len(h) != u_sub.shape[0]:
        raise InputError(f"pattern has {len(h)} sites, submatrix has {u_sub.shape[0]} rows")
    if sum(h) > n:
        raise InputError("pattern holds more particles than prepared")
    return float(_restricted_table(u_sub, x, [tuple(h)], gram_tol, max_n, kernel)[0])


def restricted_distribution(
    u_sub: np.ndarray,
    x: Optional[float],
    gram_tol: float = 1e-8,
    max_n: int = MAX_N,
    kernel: Optional[AuxiliaryClassFunction] = None,
) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Every pattern on S with at most n particles, with probabilities."""
    from .linopt import occupations

    u_sub = np.asarray(u_sub, dtype=np.complex128)
    s, n = u_sub.shape
    patterns = [g for total in range(n + 1) for g in occupations(total, s)]
    return patterns, _restricted_table(u_sub, x, patterns, gram_tol, max_n, kernel)


def _restricted_table(u_sub, x, patterns, gram_tol, max_n, kernel=None) -> np.ndarray:
    s, n = u_sub.shape
    if n > max_n:
        raise SizeLimitError(f"restricted model capped at n={max_n}")
    complement = np.eye(n) - u_sub.conj().T @ u_sub
    if np.linalg.eigvalsh((complement + complement.conj().T) / 2).min() < -gram_tol:
        raise InputError("matrix is not a submatrix of a unitary (I - M^dag M not PSD)")
    perms = symrep.permutation_table(n)
    # sum_lam khat(lam) chi_lam(pi) = k_x(pi), so the irrep sum collapses to k_x
    if kernel is None:
        kernel = thermal_class_function(x, n)
    elif kernel.n != n:
        raise InputError(f"class function on S_{kernel.n}, but {n} particles")
    kx = kernel.class_vector()
    # K[s, t] = k(s^-1 t), same class as t s^-1
    K = kx[symrep.pair_class_table(n)]
    cache: dict[int, np.ndarray] = {}
    out = np.empty(len(patterns))
    for idx, h in enumerate(patterns):
        size = sum(h)
        if size not in cache:
            # prod_{x > |h|} (delta - <U(S|i_tau(x)), U(S|i_sigma(x))>)
            tail_s = perms[:, size:]
            cache[size] = np.prod(
                complement[tail_s[None, :, :], tail_s[:, None, :]], axis=2
            ) if size < n else np.ones((len(perms), len(perms)))
        rows = zeta(h)
        head = perms[:, :size]
        a = np.prod(u_sub[np.asarray(rows, dtype=np.int64)[None, :] - 1, head], axis=1)
        # cache[size][s, t] = prod_x complement[t(x), s(x)]
        value = a @ (K * cache[size]) @ np.conj(a)
        if abs(value.imag) > 1e-9:
            raise NumericalError(f"restricted probability has imaginary part {value.imag}")
        out[idx] = value.real / (multi_factorial(h) * factorial(n - size))
    return out
