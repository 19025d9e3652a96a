"""Independent reference computations used only by the tests."""

from __future__ import annotations

import itertools
from math import factorial, prod, sqrt

import numpy as np
from scipy.stats import beta


def naive_permanent(a):
    a = np.asarray(a)
    n = a.shape[0]
    return sum(prod(a[x, s[x]] for x in range(n)) for s in itertools.permutations(range(n))) if n else 1.0


def count_standard_tableaux(shape):
    """Brute force: fill the diagram with 1..n and keep rows and columns increasing."""
    n = sum(shape)
    cells = [(r, c) for r, length in enumerate(shape) for c in range(length)]
    count = 0
    for filling in itertools.permutations(range(1, n + 1)):
        t = dict(zip(cells, filling))
        if all(t[(r, c)] < t[(r, c + 1)] for r, c in cells if (r, c + 1) in t) and all(
            t[(r, c)] < t[(r + 1, c)] for r, c in cells if (r + 1, c) in t
        ):
            count += 1
    return count


def partition_count(n, largest=None):
    if largest is None:
        largest = n
    if n == 0:
        return 1
    return sum(partition_count(n - k, k) for k in range(1, min(n, largest) + 1))


def second_quantized_probability(u, sites, psi, g):
    """Probability of site occupations ``g`` from explicit label-resolved amplitudes.

    The state is ``sum_j psi[j] prod_x a^dag_{(sites_x, j_x)} |0>`` with
    distinct ``sites``; each site mode carries ``w`` internal labels and the
    interferometer acts as ``U (x) I_w``. Extended outcomes are summed over
    every label assignment compatible with ``g``.
    """
    u = np.asarray(u)
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    n, w = psi.ndim, psi.shape[0]
    out_sites = [s for s, c in enumerate(g, start=1) for _ in range(c)]
    total = 0.0
    # each extended outcome is a multiset of (site, label) pairs
    seen = set()
    for labels in itertools.product(range(w), repeat=n):
        ext = tuple(sorted(zip(out_sites, labels)))
        if ext in seen:
            continue
        seen.add(ext)
        mult = prod(factorial(ext.count(e)) for e in set(ext))
        amp = 0.0
        for j in itertools.product(range(w), repeat=n):
            coef = psi[j]
            if coef == 0:
                continue
            # U_ext[(s, l), (i, l')] = U[s, i] delta(l, l')
            mat = np.array(
                [[u[s - 1, sites[x] - 1] * (l == j[x]) for x in range(n)] for s, l in ext]
            )
            amp += coef * naive_permanent(mat)
        total += abs(amp) ** 2 / mult
    return total


def gauss_hermite_dephase(rho, omegas, sigma, t, nodes=64):
    """``E_s[U(s) U(1)^dag rho U(1) U(s)^dag]``, ``s ~ N(1, sigma^2)``, by Gauss-Hermite quadrature.

    ``rho`` is the state the nominal evolution ``U(1)`` would produce, so
    only the fluctuation ``s - 1`` enters the phases.
    """
    x, wts = np.polynomial.hermite.hermgauss(nodes)
    omegas = np.asarray(omegas)
    acc = np.zeros_like(rho, dtype=complex)
    for xk, wk in zip(x, wts):
        s = 1 + sqrt(2) * sigma * xk
        ph = np.exp(-1j * (s - 1) * omegas * t)
        acc += wk * (ph[:, None] * rho * np.conj(ph)[None, :])
    return acc / sqrt(np.pi)


def cp_beta(k, n, alpha, side):
    if side == "upper":
        return 1.0 if k == n else float(beta.ppf(1 - alpha, k + 1, n - k))
    return 0.0 if k == 0 else float(beta.ppf(alpha, k, n - k + 1))
