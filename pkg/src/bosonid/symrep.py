"""Combinatorics and representation theory of the symmetric group.

Permutations are tuples of 0-based images: ``sigma[x]`` is the image of
``x``. Composition follows functions, ``(sigma * tau)(x) = sigma(tau(x))``.
Standard tableaux of a shape are listed in last-letter order (see
:func:`standard_tableaux`), which fixes the basis of every irrep block.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, prod
from typing import Callable, Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import InputError, SizeLimitError

MAX_N = 10

Permutation = tuple[int, ...]


@dataclass(frozen=True, order=False)
class Partition:
    """A nonincreasing tuple of positive parts."""

    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p <= 0 for p in parts):
            raise InputError(f"partition parts must be positive: {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise InputError(f"partition parts must be nonincreasing: {parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def n(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __repr__(self) -> str:
        return f"Partition{self.parts}"

    def transpose(self) -> "Partition":
        if not self.parts:
            return self
        return Partition(tuple(sum(1 for p in self.parts if p > c) for c in range(self.parts[0])))

    def b(self) -> int:
        """Sum of (row index) * (row length), rows counted from zero."""
        return sum(i * p for i, p in enumerate(self.parts))

    def hook_lengths(self) -> list[int]:
        conj = self.transpose().parts
        return [
            (row_len - c - 1) + (conj[c] - r - 1) + 1
            for r, row_len in enumerate(self.parts)
            for c in range(row_len)
        ]

    def to_list(self) -> list[int]:
        return list(self.parts)


def as_partition(lam: Union[Partition, Sequence[int]]) -> Partition:
    if isinstance(lam, Partition):
        return lam
    return Partition(tuple(p for p in lam if p != 0))


def partitions_of(n: int, max_n: int = MAX_N) -> list[Partition]:
    """All partitions of ``n`` in lexicographically descending order."""
    if n < 1 or n > max_n:
        raise SizeLimitError(f"n={n} outside supported range 1..{max_n}")
    return list(_partitions_cached(n))


@lru_cache(maxsize=None)
def _partitions_cached(n: int) -> tuple[Partition, ...]:
    out: list[Partition] = []

    def rec(remaining: int, largest: int, prefix: list[int]):
        if remaining == 0:
            out.append(Partition(tuple(prefix)))
            return
        for p in range(min(remaining, largest), 0, -1):
            prefix.append(p)
            rec(remaining - p, p, prefix)
            prefix.pop()

    rec(n, n, [])
    return tuple(out)


def hook_dimension(lam) -> int:
    """Number of standard tableaux of shape ``lam`` (hook-length formula)."""
    lam = as_partition(lam)
    return factorial(lam.n) // prod(lam.hook_lengths())


def weyl_dimension(lam, m: int) -> int:
    """Dimension of the unitary-group irrep of highest weight ``lam`` in U(m)."""
    lam = as_partition(lam)
    if m < 1:
        raise InputError("m must be positive")
    if len(lam) > m:
        return 0
    parts = list(lam.parts) + [0] * (m - len(lam))
    value = Fraction(1)
    for i in range(m):
        for j in range(i + 1, m):
            value *= Fraction(parts[i] - parts[j] + j - i, j - i)
    assert value.denominator == 1
    return int(value)


# ---------------------------------------------------------------- permutations


def identity(n: int) -> Permutation:
    return tuple(range(n))


def compose(sigma: Permutation, tau: Permutation) -> Permutation:
    """``sigma * tau``, i.e. apply ``tau`` first."""
    return tuple(sigma[t] for t in tau)


def inverse(sigma: Permutation) -> Permutation:
    inv = [0] * len(sigma)
    for x, y in enumerate(sigma):
        inv[y] = x
    return tuple(inv)


def cycle_type(sigma: Permutation) -> Partition:
    n = len(sigma)
    seen = [False] * n
    lengths = []
    for start in range(n):
        if seen[start]:
            continue
        length = 0
        x = start
        while not seen[x]:
            seen[x] = True
            x = sigma[x]
            length += 1
        lengths.append(length)
    return Partition(tuple(sorted(lengths, reverse=True)))


def permutation_of_type(mu) -> Permutation:
    """A permutation whose cycles are consecutive blocks of the given lengths."""
    mu = as_partition(mu)
    images = []
    start = 0
    for length in mu.parts:
        images.extend(start + (j + 1) % length for j in range(length))
        start += length
    return tuple(images)


def all_permutations(n: int) -> list[Permutation]:
    """S_n in ``itertools.permutations`` order (the canonical order used here)."""
    return list(itertools.permutations(range(n)))


@lru_cache(maxsize=None)
def permutation_table(n: int) -> np.ndarray:
    """Array of shape ``(n!, n)`` holding :func:`all_permutations` row by row."""
    return np.array(all_permutations(n), dtype=np.int64).reshape(factorial(n), n)


@lru_cache(maxsize=None)
def _perm_index(n: int) -> dict:
    return {p: idx for idx, p in enumerate(all_permutations(n))}


def adjacent_steps(n: int) -> Iterator[tuple[Permutation, int]]:
    """Steinhaus-Johnson-Trotter walk through S_n.

    Yields ``(sigma, j)`` where ``sigma`` is the next permutation and ``j`` is
    the adjacent transposition with ``sigma = previous * (j j+1)``; the first
    item is the identity with ``j = -1``.
    """
    perm = list(range(n))
    pos = list(range(n))
    direction = [-1] * n
    yield tuple(perm), -1
    while True:
        mobile = -1
        for value in range(n - 1, -1, -1):
            p = pos[value]
            q = p + direction[value]
            if 0 <= q < n and perm[q] < value:
                mobile = value
                break
        if mobile < 0:
            return
        p = pos[mobile]
        q = p + direction[mobile]
        other = perm[q]
        perm[p], perm[q] = other, mobile
        pos[mobile], pos[other] = q, p
        for value in range(mobile + 1, n):
            direction[value] = -direction[value]
        yield tuple(perm), min(p, q)


# ---------------------------------------------------------------- tableaux


@dataclass(frozen=True)
class StandardTableau:
    """A standard filling; ``rows[k]`` is the row holding letter ``k + 1``."""

    shape: Partition
    rows: tuple[int, ...]

    def entries(self) -> list[list[int]]:
        filled: list[list[int]] = [[] for _ in self.shape.parts]
        for letter, r in enumerate(self.rows, start=1):
            filled[r].append(letter)
        return filled

    def content(self, letter: int) -> int:
        """Column minus row of a 1-based letter."""
        r = self.rows[letter - 1]
        col = sum(1 for x in self.rows[: letter - 1] if x == r)
        return col - r

    def axial_distance(self, i: int, j: int) -> int:
        return self.content(j) - self.content(i)


@lru_cache(maxsize=None)
def standard_tableaux(lam) -> tuple[StandardTableau, ...]:
    """Standard tableaux of a shape in last-letter order.

    Tableaux are compared by the row of ``n``, then the row of ``n - 1`` and
    so on, smaller rows first.
    """
    lam = as_partition(lam)
    words: list[tuple[int, ...]] = []

    def rec(shape: list[int], suffix: tuple[int, ...]):
        if sum(shape) == 0:
            words.append(suffix)
            return
        for r in range(len(shape)):
            removable = shape[r] > 0 and (r + 1 == len(shape) or shape[r + 1] < shape[r])
            if removable:
                shape[r] -= 1
                rec(shape, (r,) + suffix)
                shape[r] += 1

    rec(list(lam.parts), ())
    words.sort(key=lambda w: w[::-1])
    return tuple(StandardTableau(lam, w) for w in words)


@lru_cache(maxsize=None)
def _generators(lam: Partition) -> tuple[np.ndarray, ...]:
    tabs = standard_tableaux(lam)
    index = {t.rows: k for k, t in enumerate(tabs)}
    f = len(tabs)
    gens = []
    for k in range(1, lam.n):
        g = np.zeros((f, f))
        for a, t in enumerate(tabs):
            d = t.axial_distance(k, k + 1)
            g[a, a] = 1.0 / d
            swapped = list(t.rows)
            swapped[k - 1], swapped[k] = swapped[k], swapped[k - 1]
            b = index.get(tuple(swapped))
            if b is not None and b != a and _is_standard(swapped):
                g[a, b] = np.sqrt(1.0 - 1.0 / d**2)
        gens.append(g)
    return tuple(gens)


def _is_standard(rows: Sequence[int]) -> bool:
    lengths: dict[int, int] = {}
    for r in rows:
        if r > 0 and lengths.get(r, 0) >= lengths.get(r - 1, 0):
            return False
        lengths[r] = lengths.get(r, 0) + 1
    return True


def adjacent_factorization(sigma: Permutation) -> list[int]:
    """Indices ``j`` (0-based) with ``sigma = s_{j_1} s_{j_2} ...``.

    Here ``s_j`` swaps ``j`` and ``j + 1``. Found by bubble sort.
    """
    arr = list(sigma)
    swaps = []
    n = len(arr)
    for end in range(n - 1, 0, -1):
        for j in range(end):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                swaps.append(j)
    # sigma * s_{a1} * ... * s_{ak} = e, so sigma = s_{ak} ... s_{a1}
    return swaps[::-1]


def young_orthogonal_rep(lam, sigma: Permutation) -> np.ndarray:
    """Real orthogonal matrix of ``sigma`` in the Young orthogonal form."""
    lam = as_partition(lam)
    sigma = tuple(sigma)
    if len(sigma) != lam.n:
        raise InputError(f"permutation on {len(sigma)} letters but partition of {lam.n}")
    f = hook_dimension(lam)
    gens = _generators(lam)
    out = np.eye(f)
    for j in adjacent_factorization(sigma):
        out = out @ gens[j]
    return out


@lru_cache(maxsize=32)
def rep_table(lam: Partition) -> np.ndarray:
    """All representation matrices of ``lam``, shape ``(n!, f, f)``.

    Rows follow :func:`all_permutations`.
    """
    lam = as_partition(lam)
    n = lam.n
    f = hook_dimension(lam)
    gens = _generators(lam)
    index = _perm_index(n)
    table = np.empty((factorial(n), f, f))
    current = np.eye(f)
    for sigma, j in adjacent_steps(n):
        if j >= 0:
            current = current @ gens[j]
        table[index[sigma]] = current
    table.setflags(write=False)
    return table


# ---------------------------------------------------------------- characters


def character(lam, mu) -> int:
    """Irreducible character of ``lam`` on the class of cycle type ``mu``.

    Evaluated exactly with the Murnaghan-Nakayama rule on bead positions.
    """
    lam = as_partition(lam)
    mu = as_partition(mu)
    if lam.n != mu.n:
        raise InputError(f"partitions of different sizes: {lam.n} and {mu.n}")
    length = len(lam)
    beads = frozenset(p + length - 1 - i for i, p in enumerate(lam.parts))
    return _mn(beads, mu.parts)


@lru_cache(maxsize=None)
def _mn(beads: frozenset, cycles: tuple[int, ...]) -> int:
    if not cycles:
        return 1
    r = cycles[0]
    rest = cycles[1:]
    total = 0
    for b in beads:
        target = b - r
        if target < 0 or target in beads:
            continue
        height = sum(1 for x in beads if target < x < b)
        total += (-1) ** height * _mn((beads - {b}) | {target}, rest)
    return total


def character_table(n: int) -> tuple[list[Partition], np.ndarray]:
    """Partitions of ``n`` and the integer matrix ``chi[lam, mu]``."""
    parts = partitions_of(n)
    table = np.array([[character(lam, mu) for mu in parts] for lam in parts], dtype=np.int64)
    return parts, table


def class_size(mu) -> int:
    mu = as_partition(mu)
    counts: dict[int, int] = {}
    for p in mu.parts:
        counts[p] = counts.get(p, 0) + 1
    z = prod(p**c * factorial(c) for p, c in counts.items())
    return factorial(mu.n) // z


@lru_cache(maxsize=None)
def class_index_table(n: int) -> np.ndarray:
    """Index into :func:`partitions_of` of each permutation's cycle type."""
    lookup = {mu: k for k, mu in enumerate(partitions_of(n))}
    return np.array([lookup[cycle_type(s)] for s in all_permutations(n)], dtype=np.int64)


@lru_cache(maxsize=None)
def pair_class_table(n: int) -> np.ndarray:
    """``T[s, t]`` = class index of ``inverse(sigma_s) * sigma_t``, shape (n!, n!)."""
    perms = permutation_table(n)
    inv = np.argsort(perms, axis=1)
    # rows of inv[s] composed with perms[t]: (s^-1 t)(x) = inv[s][t(x)]
    composed = np.take_along_axis(
        np.broadcast_to(inv[:, None, :], (len(perms), len(perms), n)),
        np.broadcast_to(perms[None, :, :], (len(perms), len(perms), n)),
        axis=2,
    )
    radix = n ** np.arange(n)
    codes = composed @ radix
    base_codes = perms @ radix
    order = np.argsort(base_codes)
    positions = order[np.searchsorted(base_codes[order], codes)]
    table = class_index_table(n)[positions]
    table.setflags(write=False)
    return table


# ---------------------------------------------------------------- Fourier analysis

IrrepBlocks = dict  # Partition -> complex ndarray of side f^lam

FunctionOnSn = Union[Mapping[Permutation, complex], Callable[[Permutation], complex], np.ndarray]


def _values(f: FunctionOnSn, n: int) -> np.ndarray:
    perms = all_permutations(n)
    if isinstance(f, np.ndarray):
        if f.shape != (len(perms),):
            raise InputError(f"expected {len(perms)} values in canonical order")
        return f.astype(np.complex128)
    if isinstance(f, Mapping):
        missing = [p for p in perms if p not in f]
        if missing:
            raise InputError(f"function undefined on {len(missing)} permutations, e.g. {missing[0]}")
        return np.array([f[p] for p in perms], dtype=np.complex128)
    return np.array([f(p) for p in perms], dtype=np.complex128)


def fourier_transform(f: FunctionOnSn, n: int) -> IrrepBlocks:
    """``F(lam) = sum_sigma f(sigma) r_lam(sigma)`` for every partition of ``n``."""
    values = _values(f, n)
    blocks = {}
    for lam in partitions_of(n):
        blocks[lam] = _fourier_block(values, lam)
    return blocks


def _fourier_block(values: np.ndarray, lam: Partition) -> np.ndarray:
    n = lam.n
    if n <= 7:
        return np.tensordot(values, rep_table(lam), axes=(0, 0))
    gens = _generators(lam)
    index = _perm_index(n)
    f = hook_dimension(lam)
    acc = np.zeros((f, f), dtype=np.complex128)
    current = np.eye(f)
    for sigma, j in adjacent_steps(n):
        if j >= 0:
            current = current @ gens[j]
        acc += values[index[sigma]] * current
    return acc


def inverse_fourier(blocks: IrrepBlocks) -> dict[Permutation, complex]:
    """``f(sigma) = (1/n!) sum_lam f^lam Tr(F(lam) r_lam(sigma^-1))``."""
    lams = [as_partition(lam) for lam in blocks]
    n = lams[0].n
    expected = set(partitions_of(n))
    if set(lams) != expected:
        raise InputError("blocks must cover every partition of n exactly once")
    perms = all_permutations(n)
    out = np.zeros(len(perms), dtype=np.complex128)
    index = _perm_index(n)
    for lam, block in blocks.items():
        lam = as_partition(lam)
        block = np.asarray(block)
        # Tr(F r(sigma^-1)) = Tr(F r(sigma)^T) = sum_ij F_ij r(sigma)_ij
        if n <= 7:
            out += hook_dimension(lam) * np.einsum("ij,sij->s", block, rep_table(lam))
            continue
        gens = _generators(lam)
        current = np.eye(hook_dimension(lam))
        for sigma, j in adjacent_steps(n):
            if j >= 0:
                current = current @ gens[j]
            out[index[sigma]] += hook_dimension(lam) * np.sum(block * current)
    out /= factorial(n)
    return dict(zip(perms, out))
