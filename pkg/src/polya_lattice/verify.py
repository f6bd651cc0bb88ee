"""Enumeration-based checks of the Polya lattice equilibrium identities.

Everything here materializes whole simplexes, so it is limited to
``MAX_EXACT_STATES`` states per level. Kernels are stored as sparse
matrices: a DOWN/UP row has at most ``m**2 - m + 1`` non-zeros.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
import scipy.sparse as sp

from .core import ModelParams, log_rising_factorial
from .kernels import StepKind
from .simplex import SimplexIndex, simplex_size

__all__ = [
    "MAX_EXACT_STATES",
    "TOLERANCE",
    "SimplexTooLarge",
    "DistributionVector",
    "KernelMatrix",
    "CheckReport",
    "build_kernel",
    "polya_distribution",
    "empirical_distribution",
    "total_variation",
    "check_stationarity",
    "check_detailed_balance",
    "check_pushforward",
    "check_cross_level_balance",
    "check_factorization",
    "run_checks",
]

MAX_EXACT_STATES = 200_000
TOLERANCE = 1e-12


class SimplexTooLarge(ValueError):
    """The requested simplex is too big for exact enumeration."""


def _index(m: int, n: int) -> SimplexIndex:
    size = simplex_size(m, n)
    if size > MAX_EXACT_STATES:
        raise SimplexTooLarge(
            f"C_{n} with m={m} has {size} states (limit {MAX_EXACT_STATES}); "
            "use Monte Carlo checks (simulate) instead of exact verification"
        )
    return SimplexIndex(m, n)


@dataclass
class DistributionVector:
    index: SimplexIndex
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (self.index.size,):
            raise ValueError(f"expected {self.index.size} probabilities, got shape {self.probs.shape}")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(self.probs.sum() - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {self.probs.sum()!r}, not 1")

    def __getitem__(self, x: Sequence[int]) -> float:
        return float(self.probs[self.index.rank(x)])


@dataclass
class KernelMatrix:
    kind: StepKind
    params: ModelParams
    source: SimplexIndex
    target: SimplexIndex
    matrix: sp.csr_matrix

    def __post_init__(self):
        rows = np.asarray(self.matrix.sum(axis=1)).ravel()
        if np.max(np.abs(rows - 1.0)) > TOLERANCE:
            raise ValueError(f"{self.kind.value} kernel is not row-stochastic")

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class CheckReport:
    check: str
    params: dict[str, Any]
    residual: float
    argmax_state: Any = None
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance

    def to_dict(self) -> dict[str, Any]:
        return {
            "check": self.check,
            "params": self.params,
            "residual": self.residual,
            "argmax_state": self.argmax_state,
        }


def _sparse(rows, cols, vals, shape) -> sp.csr_matrix:
    # duplicates (several colors landing on the same target) are summed
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape
    ).tocsr()


def build_kernel(params: ModelParams, kind: StepKind, n: int) -> KernelMatrix:
    """Materialize a transition kernel out of level ``n`` as a sparse matrix."""
    kind = StepKind(kind)
    m, alpha, theta = params.m, params.alpha, params.theta
    if n < 0 or (n == 0 and kind in (StepKind.DOWN, StepKind.DOWN_UP)):
        raise ValueError(f"{kind.value} kernel needs level n >= 1, got n={n}")
    src = _index(m, n)
    states = src.states
    all_rows = np.arange(src.size)
    rows, cols, vals = [], [], []

    if kind is StepKind.UP:
        dst = _index(m, n + 1)
        for i in range(m):
            moved = states.copy()
            moved[:, i] += 1
            rows.append(all_rows)
            cols.append(dst.rank_many(moved))
            vals.append((alpha + states[:, i]) / (theta + n))
    elif kind is StepKind.DOWN:
        dst = _index(m, n - 1)
        for i in range(m):
            keep = states[:, i] > 0
            moved = states[keep].copy()
            moved[:, i] -= 1
            rows.append(all_rows[keep])
            cols.append(dst.rank_many(moved))
            vals.append(states[keep, i] / n)
    elif kind is StepKind.DOWN_UP:
        dst = src
        for i in range(m):
            keep = states[:, i] > 0
            for j in range(m):
                moved = states[keep].copy()
                moved[:, i] -= 1
                after = moved[:, j].copy()
                moved[:, j] += 1
                rows.append(all_rows[keep])
                cols.append(dst.rank_many(moved))
                vals.append(states[keep, i] / n * (after + alpha) / (n + theta - 1))
    else:
        dst = src
        for i in range(m):
            for j in range(m):
                moved = states.copy()
                moved[:, i] += 1
                after = moved[:, j].copy()
                keep = after > 0
                moved = moved[keep]
                moved[:, j] -= 1
                rows.append(all_rows[keep])
                cols.append(dst.rank_many(moved))
                vals.append((alpha + states[keep, i]) / (theta + n) * after[keep] / (n + 1))

    matrix = _sparse(rows, cols, vals, (src.size, dst.size))
    return KernelMatrix(kind, params, src, dst, matrix)


def polya_distribution(params: ModelParams, n: int) -> DistributionVector:
    """The Polya pmf over every composition of C_n, in index order."""
    index = _index(params.m, n)
    states = index.states
    ks = np.arange(n + 1)
    log_fact = np.array([log_rising_factorial(1.0, k) for k in ks])
    log_rise = np.array([log_rising_factorial(params.alpha, k) for k in ks])
    logp = (
        log_fact[n]
        - log_fact[states].sum(axis=1)
        + log_rise[states].sum(axis=1)
        - log_rising_factorial(params.theta, n)
    )
    return DistributionVector(index, np.exp(np.minimum(logp, 0.0)))


def empirical_distribution(index: SimplexIndex, states: np.ndarray) -> DistributionVector:
    """Frequency of each composition in a ``(N, m)`` sample drawn from C_n."""
    ranks = index.rank_many(states)
    counts = np.bincount(ranks, minlength=index.size)
    return DistributionVector(index, counts / counts.sum())


def total_variation(p, q) -> float:
    """Half the L1 distance between two distributions on the same simplex."""
    if isinstance(p, DistributionVector) and isinstance(q, DistributionVector):
        if p.index != q.index:
            raise ValueError(f"distributions live on different simplexes: {p.index} vs {q.index}")
    p = p.probs if isinstance(p, DistributionVector) else np.asarray(p, dtype=float)
    q = q.probs if isinstance(q, DistributionVector) else np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    return float(min(1.0, 0.5 * np.abs(p - q).sum()))


def _param_echo(params: ModelParams, n: int, **extra) -> dict[str, Any]:
    return {"alpha": params.alpha, "m": params.m, "n": n, **extra}


def _vector_report(name, params, n, index, diff, **extra) -> CheckReport:
    k = int(np.argmax(np.abs(diff)))
    return CheckReport(
        name, _param_echo(params, n, **extra), float(abs(diff[k])), list(index.unrank(k))
    )


def check_stationarity(params: ModelParams, n: int, kind: StepKind = StepKind.DOWN_UP) -> CheckReport:
    """``|| pi P - pi ||_inf`` for the composite kernel on C_n."""
    kind = StepKind(kind)
    if kind not in (StepKind.DOWN_UP, StepKind.UP_DOWN):
        raise ValueError("stationarity is defined for the composite kernels only")
    pi = polya_distribution(params, n)
    kernel = build_kernel(params, kind, n)
    diff = kernel.matrix.T @ pi.probs - pi.probs
    return _vector_report("stationarity", params, n, pi.index, diff, kernel=kind.value)


def check_detailed_balance(params: ModelParams, n: int, kind: StepKind = StepKind.DOWN_UP) -> CheckReport:
    """Largest ``|pi(a) q(a->b) - pi(b) q(b->a)|`` over all ordered pairs in C_n."""
    kind = StepKind(kind)
    pi = polya_distribution(params, n)
    kernel = build_kernel(params, kind, n)
    flows = sp.diags(pi.probs) @ kernel.matrix
    imbalance = (flows - flows.T).tocoo()
    echo = _param_echo(params, n, kernel=kind.value)
    if imbalance.nnz == 0:
        return CheckReport("detailed_balance", echo, 0.0, None)
    k = int(np.argmax(np.abs(imbalance.data)))
    pair = [list(pi.index.unrank(imbalance.row[k])), list(pi.index.unrank(imbalance.col[k]))]
    return CheckReport("detailed_balance", echo, float(abs(imbalance.data[k])), pair)


def check_pushforward(params: ModelParams, n: int, kind: StepKind) -> CheckReport:
    """Whether one UP (or DOWN) move carries pi_n onto pi_{n+1} (or pi_{n-1})."""
    kind = StepKind(kind)
    if kind not in (StepKind.UP, StepKind.DOWN):
        raise ValueError("pushforward is checked for UP and DOWN kernels")
    pi = polya_distribution(params, n)
    kernel = build_kernel(params, kind, n)
    expected = polya_distribution(params, kernel.target.n)
    diff = kernel.matrix.T @ pi.probs - expected.probs
    return _vector_report(f"pushforward_{kind.value}", params, n, expected.index, diff)


def check_cross_level_balance(params: ModelParams, n: int) -> CheckReport:
    """Flow balance between adjacent levels.

    For every ``a`` in C_{n-1} and ``b = a + e_i`` compares
    ``pi_{n-1}(a) * (alpha + a_i) / (theta + n - 1)`` with
    ``pi_n(b) * b_i / n``.
    """
    if n < 1:
        raise ValueError(f"cross-level balance needs n >= 1, got n={n}")
    lower = polya_distribution(params, n - 1)
    upper = polya_distribution(params, n)
    states = lower.index.states
    worst, where = -1.0, None
    for i in range(params.m):
        above = states.copy()
        above[:, i] += 1
        up_flow = lower.probs * (params.alpha + states[:, i]) / (params.theta + n - 1)
        down_flow = upper.probs[upper.index.rank_many(above)] * above[:, i] / n
        gap = np.abs(up_flow - down_flow)
        k = int(np.argmax(gap))
        if gap[k] > worst:
            worst, where = float(gap[k]), [states[k].tolist(), above[k].tolist()]
    return CheckReport("cross_level_balance", _param_echo(params, n), worst, where)


def check_factorization(params: ModelParams, n: int) -> CheckReport:
    """Entrywise gap between the DOWN/UP kernel and the product DOWN(n) @ UP(n-1)."""
    composite = build_kernel(params, StepKind.DOWN_UP, n)
    product = build_kernel(params, StepKind.DOWN, n).matrix @ build_kernel(params, StepKind.UP, n - 1).matrix
    gap = (composite.matrix - product).tocoo()
    if gap.nnz == 0:
        return CheckReport("factorization", _param_echo(params, n), 0.0, None)
    k = int(np.argmax(np.abs(gap.data)))
    pair = [list(composite.source.unrank(gap.row[k])), list(composite.source.unrank(gap.col[k]))]
    return CheckReport("factorization", _param_echo(params, n), float(abs(gap.data[k])), pair)


def run_checks(params: ModelParams, n: int) -> list[CheckReport]:
    """Every identity that involves level ``n`` (n >= 1)."""
    if n < 1:
        raise ValueError(f"verification needs level n >= 1, got n={n}")
    return [
        check_stationarity(params, n),
        check_stationarity(params, n, StepKind.UP_DOWN),
        check_detailed_balance(params, n),
        check_detailed_balance(params, n, StepKind.UP_DOWN),
        check_pushforward(params, n - 1, StepKind.UP),
        check_pushforward(params, n, StepKind.DOWN),
        check_cross_level_balance(params, n),
        check_factorization(params, n),
    ]
