"""Periodic wind-tree billiard: exact event-driven simulation, a recurrence
statistic swept over initial slopes, and a Gaussian hidden Markov model of
the resulting series with Baum-Welch fitting and pseudo-residual checks."""

from .billiard import (
    CollisionEvent,
    DegenerateVelocity,
    NoHitWithinHorizon,
    ParticleState,
    TrajectoryLog,
    Vec2,
    Wall,
    distance_series,
    locate_cell,
    next_collision,
    reflect,
    simulate,
    state_from_angle,
    state_from_slope,
)
from .config import HmmConfig, PipelineConfig, SimulateConfig
from .hmm import (
    FitReport,
    ForwardBackwardTables,
    HmmParams,
    PosteriorTables,
    PseudoResiduals,
    ResidualVariant,
    baum_welch,
    default_init,
    emission_density,
    forward_backward,
    log_likelihood,
    posterior_pairs,
    pseudo_residuals,
    residual_histogram,
)
from .sweep import (
    CorridorTruncation,
    InsufficientData,
    MotionClass,
    MotionLabel,
    SlopeObservation,
    SweepResult,
    SweepSpec,
    build_sweep,
    classify_motion,
    estimate_diffusion_exponent,
    growth_exponent,
    recurrence_statistic,
)

__all__ = [
    "CollisionEvent", "DegenerateVelocity", "NoHitWithinHorizon",
    "ParticleState", "TrajectoryLog", "Vec2", "Wall",
    "distance_series", "locate_cell", "next_collision", "reflect",
    "simulate", "state_from_angle", "state_from_slope",
    "HmmConfig", "PipelineConfig", "SimulateConfig",
    "FitReport", "ForwardBackwardTables", "HmmParams", "PosteriorTables",
    "PseudoResiduals", "ResidualVariant", "baum_welch", "default_init",
    "emission_density", "forward_backward", "log_likelihood",
    "posterior_pairs", "pseudo_residuals", "residual_histogram",
    "CorridorTruncation", "InsufficientData", "MotionClass", "MotionLabel",
    "SlopeObservation", "SweepResult", "SweepSpec", "build_sweep",
    "classify_motion", "estimate_diffusion_exponent", "growth_exponent",
    "recurrence_statistic",
]

__version__ = "0.1.0"
