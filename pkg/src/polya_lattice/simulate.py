"""Trajectory engine for the growth and two-phase market experiments.

A run starts from the empty composition. Growth applies UP moves; in the
two-phase protocol growth stops once the level reaches ``threshold_level``
and every later step is a DOWN-then-UP pair, so total capitalization stays
at the threshold.

Replica seeds come from ``numpy.random.SeedSequence(base_seed).spawn``:
replica ``r`` always gets child ``r``, whatever order replicas run in.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams
from .kernels import StepKind, _pick_down, _pick_up

__all__ = [
    "Mode",
    "Fluctuation",
    "ScenarioConfig",
    "Trajectory",
    "MAX_RECORDED_CELLS",
    "make_rng",
    "replica_seeds",
    "run_growth",
    "run_two_phase",
    "run_scenario",
    "run_ensemble",
    "check_levels",
]

# Upper bound on m * (number of recorded steps) held in memory for one run.
MAX_RECORDED_CELLS = 50_000_000

_UNIFORM_BLOCK = 1 << 16


class Mode(enum.Enum):
    GROWTH_ONLY = "growth"
    TWO_PHASE = "two-phase"


class Fluctuation(enum.Enum):
    # cap-conserving DOWN/UP pair per step (default)
    PAIR = "pair"
    # single DOWN or UP with probability 1/2 each; the level drifts
    ALTERNATING = "alternating"


@dataclass(frozen=True)
class ScenarioConfig:
    params: ModelParams
    mode: Mode = Mode.GROWTH_ONLY
    total_steps: int = 3000
    threshold_level: int | None = None
    seed: int = 0
    record_every: int = 1
    fluctuation: Fluctuation = Fluctuation.PAIR

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "fluctuation", Fluctuation(self.fluctuation))
        if self.total_steps < 0:
            raise ValueError(f"total_steps must be >= 0, got {self.total_steps}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.mode is Mode.TWO_PHASE:
            if self.threshold_level is None:
                raise ValueError("two-phase mode needs threshold_level")
            if not 0 <= self.threshold_level <= self.total_steps:
                raise ValueError(
                    f"threshold_level must lie in [0, total_steps={self.total_steps}], "
                    f"got {self.threshold_level}"
                )
        recorded = self.total_steps // self.record_every + 2
        if recorded * self.params.m > MAX_RECORDED_CELLS:
            raise ValueError(
                f"recording {recorded} steps x {self.params.m} stocks exceeds "
                f"{MAX_RECORDED_CELLS} cells; raise record_every"
            )

    @property
    def growth_steps(self) -> int:
        if self.mode is Mode.GROWTH_ONLY:
            return self.total_steps
        return self.threshold_level


@dataclass
class Trajectory:
    """Recorded states of one run.

    ``counts[k]`` is the composition after step ``steps[k]`` and ``kinds[k]``
    the kind of that step. The final step is always recorded, and so is the
    step at which a two-phase run reaches its threshold.
    """

    config: ScenarioConfig
    steps: np.ndarray
    counts: np.ndarray
    kinds: list[StepKind] = field(repr=False)

    @property
    def terminal(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.counts[-1])

    @property
    def levels(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def weights(self) -> np.ndarray:
        levels = self.levels[:, None].astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(levels > 0, self.counts / levels, 0.0)

    def phases(self) -> list[str]:
        threshold = self.config.growth_steps
        return ["growth" if s <= threshold else "equilibrium" for s in self.steps]

    def at_step(self, step: int) -> tuple[int, ...]:
        k = np.searchsorted(self.steps, step)
        if k == len(self.steps) or self.steps[k] != step:
            raise KeyError(f"step {step} was not recorded")
        return tuple(int(c) for c in self.counts[k])

    def __eq__(self, other):
        return (
            isinstance(other, Trajectory)
            and self.config == other.config
            and np.array_equal(self.steps, other.steps)
            and np.array_equal(self.counts, other.counts)
            and self.kinds == other.kinds
        )


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def replica_seeds(base_seed: int, replicas: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(base_seed).spawn(replicas)


class _Uniforms:
    """Block-buffered U(0,1) draws from a Generator."""

    def __init__(self, rng: np.random.Generator, expected: int):
        self._rng = rng
        self._block = max(1, min(_UNIFORM_BLOCK, expected))
        self._buf = rng.random(self._block).tolist()
        self._pos = 0

    def __call__(self) -> float:
        if self._pos == self._block:
            self._block = _UNIFORM_BLOCK
            self._buf = self._rng.random(self._block).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


def _simulate(cfg: ScenarioConfig, rng: np.random.Generator) -> Trajectory:
    params = cfg.params
    alpha, theta, m = params.alpha, params.theta, params.m
    growth = cfg.growth_steps
    alternating = cfg.fluctuation is Fluctuation.ALTERNATING
    if cfg.mode is Mode.TWO_PHASE and growth == 0 and cfg.total_steps > 0:
        raise ValueError("threshold 0 would start with a DOWN move from the empty composition")

    uniform = _Uniforms(rng, growth + 2 * (cfg.total_steps - growth))
    counts = [0] * m
    n = 0
    steps, rows, kinds = [], [], []
    every = cfg.record_every

    for t in range(1, cfg.total_steps + 1):
        if t <= growth:
            i = _pick_up(counts, alpha, theta + n, uniform())
            counts[i] += 1
            n += 1
            kind = StepKind.UP
        elif alternating:
            if n > 0 and uniform() < 0.5:
                counts[_pick_down(counts, n, uniform())] -= 1
                n -= 1
                kind = StepKind.DOWN
            else:
                counts[_pick_up(counts, alpha, theta + n, uniform())] += 1
                n += 1
                kind = StepKind.UP
        else:
            counts[_pick_down(counts, n, uniform())] -= 1
            counts[_pick_up(counts, alpha, theta + n - 1, uniform())] += 1
            kind = StepKind.DOWN_UP
        if t % every == 0 or t == cfg.total_steps or t == growth:
            steps.append(t)
            rows.append(tuple(counts))
            kinds.append(kind)

    return Trajectory(
        config=cfg,
        steps=np.asarray(steps, dtype=np.int64),
        counts=np.asarray(rows, dtype=np.int64).reshape(len(rows), m),
        kinds=kinds,
    )


def run_growth(cfg: ScenarioConfig, rng: np.random.Generator | None = None) -> Trajectory:
    """Pure UP dynamics for ``total_steps`` steps from the empty composition."""
    if cfg.mode is not Mode.GROWTH_ONLY:
        raise ValueError(f"run_growth needs mode={Mode.GROWTH_ONLY.value}, got {cfg.mode.value}")
    return _simulate(cfg, rng if rng is not None else make_rng(cfg.seed))


def run_two_phase(cfg: ScenarioConfig, rng: np.random.Generator | None = None) -> Trajectory:
    """UP moves up to ``threshold_level``, then DOWN/UP fluctuation."""
    if cfg.mode is not Mode.TWO_PHASE:
        raise ValueError(f"run_two_phase needs mode={Mode.TWO_PHASE.value}, got {cfg.mode.value}")
    return _simulate(cfg, rng if rng is not None else make_rng(cfg.seed))


def run_scenario(cfg: ScenarioConfig, rng: np.random.Generator | None = None) -> Trajectory:
    if cfg.mode is Mode.GROWTH_ONLY:
        return run_growth(cfg, rng)
    return run_two_phase(cfg, rng)


def _run_replica(args) -> Trajectory:
    cfg, seed_seq = args
    return run_scenario(cfg, make_rng(seed_seq))


def run_ensemble(cfg: ScenarioConfig, replicas: int, base_seed: int | None = None,
                 n_jobs: int = 1) -> list[Trajectory]:
    """Independent replicas of ``cfg``; replica ``r`` is seeded by child ``r``
    of ``SeedSequence(base_seed)`` (``cfg.seed`` when ``base_seed`` is None).
    """
    if replicas < 1:
        raise ValueError(f"replicas must be >= 1, got {replicas}")
    base_seed = cfg.seed if base_seed is None else base_seed
    jobs = [(cfg, s) for s in replica_seeds(base_seed, replicas)]
    if n_jobs == 1:
        return [_run_replica(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_run_replica, jobs, chunksize=max(1, replicas // (4 * n_jobs))))


def check_levels(traj: Trajectory) -> None:
    """Raise AssertionError if recorded levels break the bookkeeping rules."""
    cfg = traj.config
    levels = traj.levels
    if cfg.mode is Mode.GROWTH_ONLY:
        expected = traj.steps
    elif cfg.fluctuation is Fluctuation.PAIR:
        expected = np.minimum(traj.steps, cfg.threshold_level)
    else:
        expected = np.where(traj.steps <= cfg.threshold_level, traj.steps, levels)
    bad = np.flatnonzero(levels != expected)
    if bad.size:
        k = bad[0]
        raise AssertionError(
            f"level {levels[k]} at step {traj.steps[k]}, expected {expected[k]}"
        )
