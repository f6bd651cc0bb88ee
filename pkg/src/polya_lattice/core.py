"""Exact Polya urn probabilities, all evaluated in natural-log space.

The rising factorial ``a^[k] = a (a+1) ... (a+k-1)`` overflows a double
around ``k ~ 170`` for moderate ``a``, so every public routine returns a
log value. Use :func:`polya_pmf` / :func:`dirichlet_density` when a
linear-space number is really needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ModelParams",
    "as_composition",
    "log_rising_factorial",
    "log_multinomial",
    "log_polya_pmf",
    "polya_pmf",
    "log_sequence_prob",
    "log_dirichlet_density",
    "dirichlet_density",
]

# Below this the product is summed term by term; above it lgamma is cheaper
# and just as accurate.
_DIRECT_SUM_MAX_K = 64


@dataclass(frozen=True)
class ModelParams:
    """Symmetric Polya prior: weight ``alpha`` on each of ``m`` colors.

    ``theta`` is always derived as ``m * alpha`` and cannot be passed in.
    """

    alpha: float
    m: int

    def __post_init__(self):
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha <= 0:
            raise ValueError(f"alpha must be a positive finite number, got {self.alpha!r}")
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "m", int(self.m))

    @property
    def theta(self) -> float:
        return self.m * self.alpha


def as_composition(x: Iterable[int], params: ModelParams | None = None) -> tuple[int, ...]:
    """Validate ``x`` as a composition and return it as a tuple of ints."""
    counts = tuple(x)
    if counts and all(type(c) is int and c >= 0 for c in counts):
        if params is not None and len(counts) != params.m:
            raise ValueError(f"composition has {len(counts)} parts, expected m={params.m}")
        return counts
    for c in counts:
        if isinstance(c, (bool, np.bool_)) or int(c) != c or c < 0:
            raise ValueError(f"composition entries must be non-negative integers, got {counts!r}")
    counts = tuple(int(c) for c in counts)
    if params is not None and len(counts) != params.m:
        raise ValueError(f"composition has {len(counts)} parts, expected m={params.m}")
    if not counts:
        raise ValueError("composition must have at least one part")
    return counts


def log_rising_factorial(a: float, k: int) -> float:
    """Return ``ln(a (a+1) ... (a+k-1))``; the empty product (k=0) gives 0."""
    if not a > 0:
        raise ValueError(f"rising factorial needs a > 0, got {a!r}")
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k!r}")
    k = int(k)
    if k == 0:
        return 0.0
    if k <= _DIRECT_SUM_MAX_K:
        return math.fsum(math.log(a + j) for j in range(k))
    return math.lgamma(a + k) - math.lgamma(a)


def log_multinomial(counts: Sequence[int]) -> float:
    n = sum(counts)
    return math.lgamma(n + 1) - math.fsum(math.lgamma(c + 1) for c in counts)


def _log_weight_product(alpha: float, counts: Sequence[int]) -> float:
    # sorted so that the result is bit-identical under permutation of counts
    return math.fsum(log_rising_factorial(alpha, c) for c in sorted(counts))


def log_polya_pmf(params: ModelParams, x: Iterable[int]) -> float:
    """Log-probability of composition ``x`` at level ``n = sum(x)``.

    p(x) = n! / (n_1! ... n_m!) * prod alpha^[n_i] / theta^[n]
    """
    counts = as_composition(x, params)
    n = sum(counts)
    logp = (
        log_multinomial(sorted(counts))
        + _log_weight_product(params.alpha, counts)
        - log_rising_factorial(params.theta, n)
    )
    return min(logp, 0.0)


def polya_pmf(params: ModelParams, x: Iterable[int]) -> float:
    return math.exp(log_polya_pmf(params, x))


def log_sequence_prob(params: ModelParams, color_sequence: Iterable[int]) -> float:
    """Log-probability of drawing the colors in exactly this order.

    Depends only on how many times each color appears (exchangeability).
    """
    colors = list(color_sequence)
    counts = [0] * params.m
    for c in colors:
        if int(c) != c or not 0 <= c < params.m:
            raise ValueError(f"color id {c!r} out of range for m={params.m}")
        counts[int(c)] += 1
    return _log_weight_product(params.alpha, counts) - log_rising_factorial(
        params.theta, len(colors)
    )


def log_dirichlet_density(params: ModelParams, w: Sequence[float]) -> float:
    """Log-density of the symmetric Dirichlet(alpha, ..., alpha) at ``w``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (params.m,):
        raise ValueError(f"w must have {params.m} entries, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("w must be finite and non-negative")
    if abs(math.fsum(w) - 1.0) > 1e-12:
        raise ValueError(f"w must sum to 1, got {math.fsum(w)!r}")
    alpha = params.alpha
    if np.any(w == 0):
        if alpha < 1:
            raise ValueError("Dirichlet density is singular on the boundary when alpha < 1")
        if alpha > 1:
            return -math.inf
    log_norm = math.lgamma(params.theta) - params.m * math.lgamma(alpha)
    if alpha == 1:
        return log_norm
    return log_norm + (alpha - 1) * math.fsum(np.log(w))


def dirichlet_density(params: ModelParams, w: Sequence[float]) -> float:
    return math.exp(log_dirichlet_density(params, w))
