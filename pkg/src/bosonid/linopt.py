"""Fock-space bookkeeping and ideal linear-optical distributions.

Sites are 1-based throughout the public API. An occupation list ``g`` has
one nonnegative count per mode; a site list ``i`` names the mode of each
particle and may repeat.
"""

from __future__ import annotations

import itertools
from math import factorial, prod
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg

from . import _accel
from .errors import InputError, NumericalError, SizeLimitError

PERMANENT_MAX = 16


def zeta(g: Sequence[int]) -> tuple[int, ...]:
    """Occupations to the nondecreasing list of occupied sites."""
    out: list[int] = []
    for site, count in enumerate(g, start=1):
        if count < 0:
            raise InputError(f"negative occupation {count} at site {site}")
        out.extend([site] * int(count))
    return tuple(out)


def xi(i: Sequence[int], m: int) -> tuple[int, ...]:
    """Site list to occupations over ``m`` modes."""
    counts = [0] * m
    for site in i:
        if not 1 <= site <= m:
            raise InputError(f"site {site} outside 1..{m}")
        counts[site - 1] += 1
    return tuple(counts)


def multi_factorial(g: Sequence[int]) -> int:
    """``g! = prod_x g_x!``."""
    return prod(factorial(int(c)) for c in g)


def occupied(g: Sequence[int]) -> int:
    """Number of modes with a nonzero count."""
    return sum(1 for c in g if c)


def occupations(n: int, m: int) -> Iterator[tuple[int, ...]]:
    """Every occupation list with ``n`` particles in ``m`` modes."""
    for combo in itertools.combinations_with_replacement(range(m), n):
        counts = [0] * m
        for s in combo:
            counts[s] += 1
        yield tuple(counts)


def submatrix(u: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    """``U(rows|cols)`` with 1-based, possibly repeated indices."""
    r = np.asarray(rows, dtype=np.int64) - 1
    c = np.asarray(cols, dtype=np.int64) - 1
    return np.asarray(u)[np.ix_(r, c)]


def permanent(m: np.ndarray, max_size: int = PERMANENT_MAX) -> complex:
    """Permanent via Ryser's formula with Gray-code subset updates."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"permanent needs a square matrix, got shape {m.shape}")
    if m.shape[0] > max_size:
        raise SizeLimitError(f"permanent of side {m.shape[0]} exceeds cap {max_size}")
    return _accel.ryser_permanent(m)


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=tol, rtol=0))


def _check_event(u: np.ndarray, i: Sequence[int], g: Sequence[int]) -> None:
    m = u.shape[0]
    if len(g) != m:
        raise InputError(f"occupation list has {len(g)} modes, unitary has {m}")
    if sum(g) != len(i):
        raise InputError(f"{sum(g)} particles detected but {len(i)} prepared")
    for site in i:
        if not 1 <= site <= u.shape[1]:
            raise InputError(f"input site {site} outside 1..{u.shape[1]}")


def bosonic_probability(u: np.ndarray, i: Sequence[int], g: Sequence[int]) -> float:
    """``|Perm(U(zeta(g)|i))|^2 / (g! xi(i)!)`` for perfectly indistinguishable bosons."""
    u = np.asarray(u)
    _check_event(u, i, g)
    amp = permanent(submatrix(u, zeta(g), i))
    return float(abs(amp) ** 2 / (multi_factorial(g) * multi_factorial(xi(i, u.shape[1]))))


def distinguishable_probability(u: np.ndarray, i: Sequence[int], g: Sequence[int]) -> float:
    """``Perm(|U|^2(zeta(g)|i)) / g!`` for perfectly distinguishable particles."""
    u = np.asarray(u)
    _check_event(u, i, g)
    weights = np.abs(submatrix(u, zeta(g), i)) ** 2
    return float(permanent(weights).real / multi_factorial(g))


def beam_splitter() -> np.ndarray:
    """The balanced two-mode beam splitter ``[[1, -1], [1, 1]] / sqrt 2``."""
    return np.array([[1.0, -1.0], [1.0, 1.0]], dtype=np.complex128) / np.sqrt(2.0)


def random_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary (QR of a complex Ginibre matrix with phase fix)."""
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


# ---------------------------------------------------------------- Gell-Mann parameterization


def gellmann_basis(d: int) -> list[np.ndarray]:
    """Orthonormal Hermitian basis of d x d matrices in row-major (k, l) order.

    ``k < l``: symmetric pair, ``k > l``: antisymmetric imaginary pair,
    ``k == l < d``: traceless diagonal, ``k == l == d``: identity / sqrt d.
    """
    if d < 1:
        raise InputError("dimension must be positive")
    basis = []
    for k in range(1, d + 1):
        for l in range(1, d + 1):
            b = np.zeros((d, d), dtype=np.complex128)
            if k < l:
                b[k - 1, l - 1] = b[l - 1, k - 1] = 1 / np.sqrt(2)
            elif k > l:
                b[k - 1, l - 1] = 1j / np.sqrt(2)
                b[l - 1, k - 1] = -1j / np.sqrt(2)
            elif k < d:
                norm = np.sqrt(k * (k + 1))
                b[np.arange(k), np.arange(k)] = 1 / norm
                b[k, k] = -k / norm
            else:
                b[:, :] = np.eye(d) / np.sqrt(d)
            basis.append(b)
    return basis


def _basis_stack(d: int) -> np.ndarray:
    return np.array(gellmann_basis(d))


def hermitian_from_coeffs(c: Sequence[float]) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    d = int(round(np.sqrt(len(c))))
    if d * d != len(c):
        raise InputError(f"{len(c)} coefficients is not a square count")
    return np.tensordot(c, _basis_stack(d), axes=(0, 0))


def unitary_from_coeffs(c: Sequence[float]) -> np.ndarray:
    """``V = exp(i H)`` with ``H = sum_j c_j B_j``, via Hermitian eigendecomposition."""
    h = hermitian_from_coeffs(c)
    h = (h + h.conj().T) / 2
    phases, q = np.linalg.eigh(h)
    return (q * np.exp(1j * phases)) @ q.conj().T


def coeffs_from_unitary(v: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Principal-branch inverse of :func:`unitary_from_coeffs`.

    Eigenphases are taken in ``(-pi, pi]``; a phase numerically at ``-pi`` is
    mapped to ``+pi``.
    """
    v = np.asarray(v, dtype=np.complex128)
    if not is_unitary(v, tol):
        raise InputError("matrix is not unitary within tolerance")
    # Schur form gives an orthonormal eigenbasis even for degenerate spectra
    t, q = scipy.linalg.schur(v, output="complex")
    phases = np.angle(np.diag(t))
    phases = np.where(phases <= -np.pi + 1e-12, np.pi, phases)
    h = (q * phases) @ q.conj().T
    d = v.shape[0]
    basis = _basis_stack(d)
    return np.real(np.einsum("ij,kji->k", h, basis))


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, q = np.linalg.eigh((a + a.conj().T) / 2)
    return (q * np.sqrt(np.clip(w, 0.0, None))) @ q.conj().T


def unitary_completion(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Unitary of side ``rows + cols`` whose top-left block is ``m``.

    ``m`` is stacked over ``sqrt(I - m^dag m)`` to give an isometry, and an
    orthonormal basis of the remaining directions fills the other columns.
    """
    m = np.asarray(m, dtype=np.complex128)
    r, c = m.shape
    norm = np.linalg.norm(m, 2) if m.size else 0.0
    if norm > 1 + tol:
        raise InputError(f"spectral norm {norm:.6g} exceeds 1")
    iso = np.vstack([m, psd_sqrt(np.eye(c) - m.conj().T @ m)])
    rest = scipy.linalg.null_space(iso.conj().T)
    if rest.shape[1] != r:
        raise NumericalError("completion failed to find the complementary subspace")
    return np.hstack([iso, rest])
