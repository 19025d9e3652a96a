"""Hot loops, compiled with numba when available.

Set ``BOSONID_DISABLE_NUMBA=1`` to force the pure-numpy implementations.
Both paths compute the same quantities; ``benchmarks/bench_kernels.py``
compares their speed.
"""

import os

import numpy as np

USE_NUMBA = os.environ.get("BOSONID_DISABLE_NUMBA", "0").lower() not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False


def _ryser_numpy(a: np.ndarray) -> complex:
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    # every nonempty column subset as a 0/1 row
    masks = np.arange(1, 1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(a.dtype)
    row_sums = bits @ a.T
    sizes = bits.real.sum(axis=1).astype(np.int64)
    signs = np.where((n - sizes) % 2 == 0, 1.0, -1.0)
    return complex(np.sum(signs * np.prod(row_sums, axis=1)))


def _parity_mc_numpy(cdfs, outcome_sites, m, k, n_draws, seed, chunk):
    from math import comb

    rng = np.random.default_rng(seed)
    n_inputs = len(cdfs)
    ratio = np.array(
        [comb(m - j, k - j) / comb(m, k) if j <= k else 0.0 for j in range(m + 1)]
    )
    total = 0.0
    done = 0
    while done < n_draws:
        size = min(chunk, n_draws - done)
        occ = np.zeros((size, m + 1), dtype=np.int64)
        for a in range(n_inputs):
            u = rng.random(size)
            idx = np.searchsorted(cdfs[a], u, side="right")
            idx = np.minimum(idx, len(cdfs[a]) - 1)
            sites = outcome_sites[a][idx]
            # column m collects losses; it is discarded below
            np.add.at(occ, (np.arange(size), np.where(sites < 0, m, sites)), 1)
        counts = (occ[:, :m] % 2).sum(axis=1)
        total += ratio[counts].sum()
        done += size
    return total / n_draws


if USE_NUMBA:

    @njit(cache=True)
    def _ryser_numba(a):
        n = a.shape[0]
        if n == 0:
            return 1.0 + 0.0j
        row_sums = np.zeros(n, dtype=np.complex128)
        total = 0.0 + 0.0j
        gray_prev = 0
        sign = -1.0 if n % 2 == 1 else 1.0
        for step in range(1, 1 << n):
            gray = step ^ (step >> 1)
            changed = gray ^ gray_prev
            col = 0
            while (changed >> col) != 1:
                col += 1
            if gray & changed:
                for r in range(n):
                    row_sums[r] += a[r, col]
            else:
                for r in range(n):
                    row_sums[r] -= a[r, col]
            gray_prev = gray
            sign = -sign
            prod = 1.0 + 0.0j
            for r in range(n):
                prod *= row_sums[r]
            total += sign * prod
        return total

    @njit(cache=True)
    def _parity_mc_numba(cdfs, offsets, sites, m, k, ratio, n_draws, seed):
        np.random.seed(seed)
        n_inputs = offsets.shape[0] - 1
        occ = np.zeros(m, dtype=np.int64)
        total = 0.0
        for _ in range(n_draws):
            occ[:] = 0
            for a in range(n_inputs):
                lo = offsets[a]
                hi = offsets[a + 1]
                u = np.random.random()
                j = lo
                while j < hi - 1 and cdfs[j] <= u:
                    j += 1
                s = sites[j]
                if s >= 0:
                    occ[s] += 1
            c = 0
            for s in range(m):
                c += occ[s] % 2
            total += ratio[c]
        return total / n_draws


def ryser_permanent(a: np.ndarray) -> complex:
    """Permanent of a square complex matrix by Ryser's formula."""
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if USE_NUMBA:
        return complex(_ryser_numba(a))
    return _ryser_numpy(a)


def parity_bunching_mc(probs, outcome_sites, m, k, n_draws, seed, chunk=65536):
    """Monte Carlo mean of the parity-projected binomial ratio.

    ``probs[a]`` is the empirical outcome distribution of input ``a`` and
    ``outcome_sites[a]`` the matching 0-based sites, with -1 marking a loss.
    """
    from math import comb

    cdfs = [np.cumsum(np.asarray(p, dtype=np.float64)) for p in probs]
    cdfs = [c / c[-1] for c in cdfs]
    sites = [np.asarray(s, dtype=np.int64) for s in outcome_sites]
    if not USE_NUMBA:
        return _parity_mc_numpy(cdfs, sites, m, k, n_draws, seed, chunk)
    offsets = np.zeros(len(cdfs) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(c) for c in cdfs])
    ratio = np.array(
        [comb(m - j, k - j) / comb(m, k) if j <= k else 0.0 for j in range(m + 1)]
    )
    return float(
        _parity_mc_numba(
            np.concatenate(cdfs), offsets, np.concatenate(sites), m, k, ratio, n_draws, seed
        )
    )
