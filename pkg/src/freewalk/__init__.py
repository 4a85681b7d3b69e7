"""Harmonic measure, drift, entropy and volume of nearest-neighbour random
walks on free products of finite cyclic groups."""

from .core import (
    BadOrder,
    FactorGroup,
    FreeProduct,
    FreeProductError,
    GeneratorSet,
    InfiniteDihedral,
    InvalidGenerators,
    InvalidWord,
    Letter,
    NormalForm,
    make_cyclic_free_product,
    multiply,
    right_multiply,
    s_length,
)
from .equations import (
    DegenerateDenominator,
    FirstPassageSolution,
    InvalidMeasure,
    NoConvergence,
    NoSolution,
    SolverOptions,
    StepDistribution,
    TrafficSolution,
    first_passage_map,
    solve_first_passage,
    solve_stationary_traffic,
    solve_traffic,
    traffic_map,
)
from .harmonic import (
    HarmonicMeasure,
    cylinder_probability,
    rn_log_ratio,
    stationary_distribution,
)
from .observables import (
    Family,
    analyze,
    ball_counts,
    drift_s,
    drift_sigma,
    entropy,
    extremality_ratio,
    maximize,
    sweep,
    volume_s,
    volume_sigma,
)

__version__ = "0.1.0"
