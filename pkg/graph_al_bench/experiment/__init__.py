"""Active-learning loop, sweeps and the sampled-distance analysis."""
from .distance import distance_to_sampled_curve, write_distance_curve
from .runner import CURVE_COLUMNS, ActiveLearningRun, CurveRecord, RunSeeds, run_active_learning
from .state import ALState, GroundTruthOracle, Oracle, PoolExhaustedError, initial_seed
from .sweep import SweepJob, SweepResult, final_deltas, final_points, plan_jobs, run_sweep, summarize

__all__ = [
    "ALState",
    "ActiveLearningRun",
    "CURVE_COLUMNS",
    "CurveRecord",
    "GroundTruthOracle",
    "Oracle",
    "PoolExhaustedError",
    "RunSeeds",
    "SweepJob",
    "SweepResult",
    "distance_to_sampled_curve",
    "final_deltas",
    "final_points",
    "initial_seed",
    "plan_jobs",
    "run_active_learning",
    "run_sweep",
    "summarize",
    "write_distance_curve",
]
