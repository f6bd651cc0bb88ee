"""UP, DOWN and composite transition kernels on the composition lattice.

UP adds a ball of color i with probability (alpha + n_i) / (theta + n);
DOWN removes a ball of color i with probability n_i / n. DOWN/UP composes
the two and stays on C_n; UP/DOWN is the mirror-image variant.

Samplers use inverse-CDF over colors, accumulating weights left to right
from color 0, so a fixed generator state gives a fixed trajectory.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ModelParams, as_composition

__all__ = [
    "StepKind",
    "TransitionEvent",
    "up_prob",
    "down_prob",
    "downup_prob",
    "updown_prob",
    "sample_up",
    "sample_down",
    "sample_downup",
    "sample_updown",
]


class StepKind(enum.Enum):
    UP = "up"
    DOWN = "down"
    DOWN_UP = "downup"
    UP_DOWN = "updown"


@dataclass(frozen=True)
class TransitionEvent:
    kind: StepKind
    source: tuple[int, ...]
    target: tuple[int, ...]
    moved_color_out: int | None = None
    moved_color_in: int | None = None


def _color(params: ModelParams, i: int) -> int:
    if int(i) != i or not 0 <= i < params.m:
        raise ValueError(f"color id {i!r} out of range for m={params.m}")
    return int(i)


def _nonempty(x: tuple[int, ...]) -> int:
    n = sum(x)
    if n == 0:
        raise ValueError("cannot remove a ball from the empty composition")
    return n


def up_prob(params: ModelParams, x: Sequence[int], i: int) -> float:
    x = as_composition(x, params)
    i = _color(params, i)
    return (params.alpha + x[i]) / (params.theta + sum(x))


def down_prob(params: ModelParams, x: Sequence[int], i: int) -> float:
    x = as_composition(x, params)
    i = _color(params, i)
    return x[i] / _nonempty(x)


def downup_prob(params: ModelParams, x: Sequence[int], i: int, j: int) -> float:
    """Probability that DOWN removes color ``i`` and UP then adds color ``j``.

    For ``i == j`` this is one term of the return probability; the chain
    stays put with probability ``sum_i downup_prob(x, i, i)``.
    """
    x = as_composition(x, params)
    i, j = _color(params, i), _color(params, j)
    n = _nonempty(x)
    nj = x[j] - 1 if i == j else x[j]
    return (x[i] / n) * (nj + params.alpha) / (n + params.theta - 1)


def updown_prob(params: ModelParams, x: Sequence[int], i: int, j: int) -> float:
    """Probability that UP adds color ``i`` and DOWN then removes color ``j``."""
    x = as_composition(x, params)
    i, j = _color(params, i), _color(params, j)
    n = sum(x)
    nj = x[j] + 1 if i == j else x[j]
    return (params.alpha + x[i]) / (params.theta + n) * nj / (n + 1)


# Inverse-CDF pickers shared by the event samplers and the simulation loop.

def _pick_up(counts: Sequence[int], alpha: float, total: float, u: float) -> int:
    # total must equal theta + n
    target = u * total
    acc = 0.0
    last = len(counts) - 1
    for i in range(last):
        acc += alpha + counts[i]
        if target < acc:
            return i
    return last


def _pick_down(counts: Sequence[int], n: int, u: float) -> int:
    target = u * n
    acc = 0
    chosen = -1
    for i, c in enumerate(counts):
        if c:
            chosen = i
            acc += c
            if target < acc:
                return i
    return chosen


def sample_up(params: ModelParams, x: Sequence[int], rng: np.random.Generator) -> TransitionEvent:
    x = as_composition(x, params)
    i = _pick_up(x, params.alpha, params.theta + sum(x), rng.random())
    target = list(x)
    target[i] += 1
    return TransitionEvent(StepKind.UP, x, tuple(target), moved_color_in=i)


def sample_down(params: ModelParams, x: Sequence[int], rng: np.random.Generator) -> TransitionEvent:
    x = as_composition(x, params)
    i = _pick_down(x, _nonempty(x), rng.random())
    target = list(x)
    target[i] -= 1
    return TransitionEvent(StepKind.DOWN, x, tuple(target), moved_color_out=i)


def sample_downup(params: ModelParams, x: Sequence[int], rng: np.random.Generator) -> TransitionEvent:
    down = sample_down(params, x, rng)
    up = sample_up(params, down.target, rng)
    return TransitionEvent(StepKind.DOWN_UP, down.source, up.target, down.moved_color_out, up.moved_color_in)


def sample_updown(params: ModelParams, x: Sequence[int], rng: np.random.Generator) -> TransitionEvent:
    up = sample_up(params, x, rng)
    down = sample_down(params, up.target, rng)
    return TransitionEvent(StepKind.UP_DOWN, up.source, down.target, down.moved_color_out, up.moved_color_in)
