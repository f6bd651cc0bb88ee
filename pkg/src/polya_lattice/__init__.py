"""Polya urn on the lattice of integer compositions.

Exact probabilities, UP / DOWN / DOWN-UP kernels, enumeration-based
equilibrium checks, and the growth / two-phase market simulations.
"""

from .analysis import CapitalCurve, MarketSnapshot, capital_curve, rank_kendall_tau, stability_stats
from .core import (
    ModelParams,
    dirichlet_density,
    log_dirichlet_density,
    log_polya_pmf,
    log_rising_factorial,
    log_sequence_prob,
    polya_pmf,
)
from .kernels import (
    StepKind,
    TransitionEvent,
    down_prob,
    downup_prob,
    sample_down,
    sample_downup,
    sample_up,
    sample_updown,
    up_prob,
    updown_prob,
)
from .simplex import SimplexIndex, enumerate_compositions, simplex_size
from .simulate import Mode, ScenarioConfig, Trajectory, run_ensemble, run_growth, run_two_phase
from .verify import (
    DistributionVector,
    KernelMatrix,
    build_kernel,
    check_cross_level_balance,
    check_detailed_balance,
    check_pushforward,
    check_stationarity,
    polya_distribution,
    total_variation,
)

__version__ = "0.1.0"
