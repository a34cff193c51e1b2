"""Demonstration tracking that widens into ergodic exploration when
execution stagnates.

The pieces: trajectory geometry and nearest-state retrieval
(`geometry`), a phase clock measuring progress against the demonstration
(`phase`), an SDE-evolved particle target around the demonstration
(`particles`), a receding-horizon planner minimising a coverage MMD
(`planner`), a gated-wall maze testbed (`maze`), and episode/sweep
orchestration (`harness`).
"""

from .geometry import (
    DemoDataset,
    GridIndex,
    Projection,
    Trajectory,
    build_arc_table,
    load_dataset,
    load_trajectory,
    nearest_in_dataset,
    project_to_trajectory,
    save_trajectory,
    tangent_at,
)
from .harness import EpisodeTrace, RunConfig, SweepConfig, run_episode, run_sweep
from .maze import MazeLayout, load_layout, nominal_layout, perturb_gates, save_layout, scripted_expert
from .particles import (
    ParticleSet,
    SdeParams,
    anisotropic_increment,
    apply_envelope_bound,
    attraction_drift,
    envelope,
    evolve,
    heat_kernel,
    init_particles,
    kernel_score,
)
from .phase import PhaseConfig, PhaseState, phase_error, temperature, update
from .planner import (
    CoverageMemory,
    Plan,
    PlannerConfig,
    mmd_sq,
    objective,
    objective_gradient,
    plan,
    push_memory,
)

__version__ = "0.1.0"

__all__ = [
    "DemoDataset",
    "GridIndex",
    "Projection",
    "Trajectory",
    "build_arc_table",
    "load_dataset",
    "load_trajectory",
    "nearest_in_dataset",
    "project_to_trajectory",
    "save_trajectory",
    "tangent_at",
    "EpisodeTrace",
    "RunConfig",
    "SweepConfig",
    "run_episode",
    "run_sweep",
    "MazeLayout",
    "load_layout",
    "nominal_layout",
    "perturb_gates",
    "save_layout",
    "scripted_expert",
    "ParticleSet",
    "SdeParams",
    "anisotropic_increment",
    "apply_envelope_bound",
    "attraction_drift",
    "envelope",
    "evolve",
    "heat_kernel",
    "init_particles",
    "kernel_score",
    "PhaseConfig",
    "PhaseState",
    "phase_error",
    "temperature",
    "update",
    "CoverageMemory",
    "Plan",
    "PlannerConfig",
    "mmd_sq",
    "objective",
    "objective_gradient",
    "plan",
    "push_memory",
]
