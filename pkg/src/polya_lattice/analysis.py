"""Capital distribution curves and temporal-stability statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import kendalltau

from .simulate import Trajectory

__all__ = [
    "MarketSnapshot",
    "CapitalCurve",
    "StabilityReport",
    "capital_curve",
    "ranking",
    "rank_kendall_tau",
    "stability_stats",
]


@dataclass(frozen=True)
class MarketSnapshot:
    label: str
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        entries = tuple((str(t), float(c)) for t, c in self.entries)
        seen = set()
        for ticker, cap in entries:
            if ticker in seen:
                raise ValueError(f"duplicate ticker {ticker!r}")
            seen.add(ticker)
            if not math.isfinite(cap) or cap < 0:
                raise ValueError(f"capitalization of {ticker!r} must be finite and >= 0, got {cap!r}")
        object.__setattr__(self, "entries", entries)

    @property
    def tickers(self) -> list[str]:
        return [t for t, _ in self.entries]

    @property
    def caps(self) -> np.ndarray:
        return np.array([c for _, c in self.entries], dtype=float)


@dataclass(frozen=True)
class CapitalCurve:
    """Normalized weights ranked in descending order, plus their log10 pairs.

    ``labels[k]`` names the stock at rank ``k + 1``.
    """

    ranks: np.ndarray
    weights: np.ndarray
    labels: tuple[str, ...]

    @property
    def log10_rank(self) -> np.ndarray:
        return np.log10(self.ranks)

    @property
    def log10_weight(self) -> np.ndarray:
        return np.log10(self.weights)

    def __len__(self):
        return len(self.ranks)

    def __eq__(self, other):
        return (
            isinstance(other, CapitalCurve)
            and np.array_equal(self.ranks, other.ranks)
            and np.array_equal(self.weights, other.weights)
            and self.labels == other.labels
        )


def ranking(values: Sequence[float]) -> np.ndarray:
    """Positions sorted by decreasing value; ties keep input order."""
    return np.argsort(-np.asarray(values, dtype=float), kind="stable")


def capital_curve(x, top_k: int | None = None) -> CapitalCurve:
    """Capital distribution curve of a composition or a market snapshot.

    Zero entries count toward the total but are dropped from the curve,
    since their logarithm is undefined.
    """
    if isinstance(x, MarketSnapshot):
        caps, labels = x.caps, x.tickers
    else:
        caps = np.asarray(x, dtype=float)
        if caps.ndim != 1:
            raise ValueError("expected a one-dimensional composition")
        if np.any(caps < 0):
            raise ValueError("negative entries cannot be capitalizations")
        labels = [str(i) for i in range(len(caps))]
    total = math.fsum(caps)
    if not total > 0:
        raise ValueError("capital curve needs at least one positive entry")
    if top_k is not None and top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")

    order = ranking(caps)
    order = order[caps[order] > 0]
    if top_k is not None:
        order = order[:top_k]
    weights = caps[order] / total
    return CapitalCurve(
        ranks=np.arange(1, len(order) + 1),
        weights=weights,
        labels=tuple(labels[i] for i in order),
    )


def rank_kendall_tau(before: Sequence[float], after: Sequence[float]) -> float:
    """Kendall tau between the stock rankings implied by two weight vectors.

    Rankings break ties by stock order, so they are permutations and the
    statistic is defined even when all weights are equal.
    """
    before, after = np.asarray(before), np.asarray(after)
    if before.shape != after.shape:
        raise ValueError(f"shape mismatch: {before.shape} vs {after.shape}")
    if before.size < 2:
        return 1.0
    pos_before = np.empty(before.size)
    pos_before[ranking(before)] = np.arange(before.size)
    pos_after = np.empty(after.size)
    pos_after[ranking(after)] = np.arange(after.size)
    return float(kendalltau(pos_before, pos_after).statistic)


@dataclass(frozen=True)
class StabilityReport:
    start_step: int
    end_step: int
    max_deviation: np.ndarray  # per stock, against terminal weights
    kendall_tau: float

    @property
    def worst_deviation(self) -> float:
        return float(self.max_deviation.max())


def stability_stats(traj: Trajectory, window: tuple[int, int]) -> StabilityReport:
    """Weight stability of ``traj`` over recorded steps inside ``window``.

    Deviations are measured against the terminal weights of the whole run;
    the rank correlation compares the first and last recorded step in the
    window.
    """
    lo, hi = window
    if lo > hi:
        raise ValueError(f"empty window {window}")
    inside = np.flatnonzero((traj.steps >= lo) & (traj.steps <= hi))
    if inside.size == 0:
        raise ValueError(f"no recorded steps in window {window}")
    weights = traj.weights
    deviation = np.abs(weights[inside] - weights[-1]).max(axis=0)
    first, last = inside[0], inside[-1]
    return StabilityReport(
        start_step=int(traj.steps[first]),
        end_step=int(traj.steps[last]),
        max_deviation=deviation,
        kendall_tau=rank_kendall_tau(weights[first], weights[last]),
    )
