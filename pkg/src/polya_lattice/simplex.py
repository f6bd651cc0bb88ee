"""Enumeration and dense indexing of the composition simplex C_n.

Compositions of ``n`` into ``m`` parts are listed in lexicographically
decreasing order, so ``(n, 0, ..., 0)`` has index 0 and ``(0, ..., 0, n)``
is last. The order is part of the file formats and must not change.
"""

from __future__ import annotations

import math
import sys
from typing import Iterable, Iterator

import numpy as np

__all__ = ["simplex_size", "iter_compositions", "enumerate_compositions", "SimplexIndex"]


def simplex_size(m: int, n: int) -> int:
    """Number of compositions of ``n`` into ``m`` non-negative parts."""
    if m < 1 or n < 0:
        raise ValueError(f"need m >= 1 and n >= 0, got m={m}, n={n}")
    return math.comb(n + m - 1, m - 1)


def iter_compositions(m: int, n: int) -> Iterator[tuple[int, ...]]:
    simplex_size(m, n)
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in iter_compositions(m - 1, n - first):
            yield (first,) + rest


def _check_size(m: int, n: int) -> int:
    size = simplex_size(m, n)
    if size > sys.maxsize:
        raise OverflowError(f"C_{n} with m={m} has {size} states, beyond the platform integer range")
    return size


def enumerate_compositions(m: int, n: int) -> np.ndarray:
    """All compositions of ``n`` into ``m`` parts as a ``(size, m)`` int array."""
    size = _check_size(m, n)
    out = np.empty((size, m), dtype=np.int64)
    _fill(out, 0, 0, n)
    return out


def _fill(out: np.ndarray, row: int, col: int, n: int) -> int:
    # Writes all compositions of n into the trailing columns, starting at row;
    # returns the next free row.
    m = out.shape[1]
    if col == m - 1:
        out[row, col] = n
        return row + 1
    for first in range(n, -1, -1):
        block = math.comb(n - first + m - col - 2, m - col - 2)
        out[row:row + block, col] = first
        row = _fill(out, row, col + 1, n - first)
    return row


class SimplexIndex:
    """Bijection between C_n (``m`` parts) and ``0 .. size-1``."""

    def __init__(self, m: int, n: int):
        self.m = int(m)
        self.n = int(n)
        self.size = _check_size(self.m, self.n)
        self._states: np.ndarray | None = None
        self._binom: np.ndarray | None = None

    def __repr__(self):
        return f"SimplexIndex(m={self.m}, n={self.n}, size={self.size})"

    def __len__(self):
        return self.size

    def __eq__(self, other):
        return isinstance(other, SimplexIndex) and (self.m, self.n) == (other.m, other.n)

    def __hash__(self):
        return hash((self.m, self.n))

    @property
    def states(self) -> np.ndarray:
        """Materialized ``(size, m)`` array of every composition, in index order."""
        if self._states is None:
            self._states = enumerate_compositions(self.m, self.n)
            self._states.setflags(write=False)
        return self._states

    def _validate(self, x: Iterable[int]) -> tuple[int, ...]:
        x = tuple(int(v) for v in x)
        if len(x) != self.m:
            raise ValueError(f"composition {x} has {len(x)} parts, expected {self.m}")
        if any(v < 0 for v in x) or sum(x) != self.n:
            raise ValueError(f"composition {x} is not in C_{self.n}")
        return x

    def rank(self, x: Iterable[int]) -> int:
        x = self._validate(x)
        r = 0
        remaining = self.n
        for k in range(self.m - 1):
            # compositions whose k-th part exceeds x[k], with x[:k] fixed:
            # sum_{v > x_k} C(remaining - v + p, p) = C(remaining - x_k + p, p + 1)
            p = self.m - k - 2
            r += math.comb(remaining - x[k] + p, p + 1)
            remaining -= x[k]
        return r

    def rank_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`rank` for a ``(N, m)`` array of compositions in C_n."""
        xs = np.asarray(xs, dtype=np.int64)
        if xs.ndim != 2 or xs.shape[1] != self.m:
            raise ValueError(f"expected an (N, {self.m}) array, got shape {xs.shape}")
        if np.any(xs < 0) or np.any(xs.sum(axis=1) != self.n):
            raise ValueError(f"some rows are not in C_{self.n}")
        if self._binom is None:
            # only C(a, b) with a <= n + b - 1 is ever looked up; those are <= size
            self._binom = np.zeros((self.n + self.m, self.m), dtype=np.int64)
            for b in range(1, self.m):
                for a in range(b, self.n + b):
                    self._binom[a, b] = math.comb(a, b)
        ranks = np.zeros(xs.shape[0], dtype=np.int64)
        remaining = np.full(xs.shape[0], self.n, dtype=np.int64)
        for k in range(self.m - 1):
            p = self.m - k - 2
            ranks += self._binom[remaining - xs[:, k] + p, p + 1]
            remaining -= xs[:, k]
        return ranks

    def unrank(self, i: int) -> tuple[int, ...]:
        if int(i) != i or not 0 <= i < self.size:
            raise ValueError(f"index {i!r} out of range for simplex of size {self.size}")
        i = int(i)
        out = []
        remaining = self.n
        for k in range(self.m - 1):
            p = self.m - k - 2
            # largest first part comes first; each value v owns C(remaining - v + p, p) slots
            v = remaining
            while True:
                block = math.comb(remaining - v + p, p)
                if i < block:
                    break
                i -= block
                v -= 1
            out.append(v)
            remaining -= v
        out.append(remaining)
        return tuple(out)
