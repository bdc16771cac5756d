"""Threshold-theta contact process on configuration-model random graphs."""

__version__ = "0.1.0"

from .degree_model import (  # noqa: E402
    CoreThresholdResult,
    DegreeDistribution,
    DivergenceError,
    NoCoreError,
    er_core_threshold,
    solve_core_threshold,
)
from .graph_gen import DegreeSequence, MultiGraph, generate, random_graph, sample_degree_sequence  # noqa: E402
from .core_peeler import CoreResult, generate_core_direct, peel_core  # noqa: E402
from .process_engine import ProcessConfig, ProcessState, Trajectory, run, run_coupled, step  # noqa: E402
from .harness import ExperimentResult, ExperimentSpec, derive_seed, run_experiment  # noqa: E402

__all__ = [
    "CoreResult",
    "CoreThresholdResult",
    "DegreeDistribution",
    "DegreeSequence",
    "DivergenceError",
    "ExperimentResult",
    "ExperimentSpec",
    "MultiGraph",
    "NoCoreError",
    "ProcessConfig",
    "ProcessState",
    "Trajectory",
    "derive_seed",
    "er_core_threshold",
    "generate",
    "generate_core_direct",
    "peel_core",
    "random_graph",
    "run",
    "run_coupled",
    "run_experiment",
    "sample_degree_sequence",
    "solve_core_threshold",
    "step",
]
