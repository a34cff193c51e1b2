"""Episode orchestration and the perturbation sweep.

One episode runs the full loop: retrieve the nearest expert state, update
the phase clock, evolve the particle target with the current temperature,
plan a horizon against the coverage memory, execute a few controls, and
repeat until the goal is reached or the step budget runs out. Retrieval
and the phase update happen every control step (the counter and clock are
calibrated in control steps); particles and the plan refresh once per
planning cycle.

Everything is keyed off integer seed tuples, so a run is reproducible to
the byte.
"""

from __future__ import annotations

import concurrent.futures
import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import DemoDataset, Trajectory, load_dataset, nearest_in_dataset
from .maze import EnvState, MazeLayout, at_goal, load_layout, perturb_gates, step
from .particles import ParticleSet, SdeParams, evolve, init_particles
from .phase import PhaseConfig, PhaseState, temperature, update
from .planner import CoverageMemory, Plan, PlannerConfig, plan, push_memory

TRACE_HEADER = "step,x0,x1,tau,c,theta,e,cycle"
PLANNER_HEADER = "cycle,objective,mmd,effort,iters_used"
PARTICLES_HEADER = "cycle,j,x0,x1"
SWEEP_HEADER = "sigma,trials,successes,success_rate,mean_steps_success"


@dataclass(frozen=True)
class SweepConfig:
    sigmas: tuple = (0.0, 0.02, 0.05, 0.08)
    trials: int = 50

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.sigmas) == 0:
            raise ValueError("sigma grid must be non-empty")


@dataclass
class RunConfig:
    phase: PhaseConfig = field(default_factory=PhaseConfig)
    sde: SdeParams = field(default_factory=SdeParams)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    layout_path: str | None = None
    dataset_path: str | None = None
    seed: int = 0
    step_budget: int = 1000
    tracking_only: bool = False  # baseline: evolve particles with theta forced to 0


@dataclass
class StepRow:
    step: int
    x: np.ndarray
    tau: float
    c: int
    theta: float
    e: float
    cycle: int


@dataclass
class EpisodeTrace:
    rows: list[StepRow] = field(default_factory=list)
    planner_rows: list[tuple] = field(default_factory=list)  # (cycle, obj, mmd, effort, iters)
    particle_snapshots: list[tuple] = field(default_factory=list)  # (cycle, (N, d) array)
    success: bool = False
    steps_used: int = 0
    seed: object = 0
    perturbation: np.ndarray | None = None


def run_episode(
    cfg: RunConfig,
    layout: MazeLayout,
    dataset: DemoDataset,
    seed,
    record_particles: bool = False,
) -> EpisodeTrace:
    """Run one episode; fully deterministic given the seed."""
    if len(dataset) == 0:
        raise ValueError("cannot run an episode with an empty dataset")
    trace = EpisodeTrace(seed=seed)
    env = EnvState(position=np.asarray(layout.start, dtype=float).copy())
    if cfg.step_budget <= 0:
        trace.success = at_goal(env.position, layout)
        return trace
    base = tuple(int(s) for s in seed) if isinstance(seed, (tuple, list)) else (int(seed),)

    proj = nearest_in_dataset(env.position, dataset)
    phase = PhaseState(tau=float(proj.time_index), c=0, last_error=0.0, active_demo=proj.demo_id)
    active = dataset.demo_by_id(proj.demo_id)
    particles = init_particles(
        active, cfg.sde.n_particles, seed=base + (0,), jitter_std=cfg.sde.h / 2.0
    )
    memory = CoverageMemory(maxlen=cfg.planner.memory_len)
    prev_plan: Plan | None = None
    cycle = 0

    while not env.done:
        theta = 0.0 if cfg.tracking_only else temperature(phase, cfg.phase)
        if cfg.sde.reinit_each_cycle:
            particles = init_particles(
                active, cfg.sde.n_particles, seed=base + (0, cycle), jitter_std=cfg.sde.h / 2.0
            )
        particles = evolve(
            particles, active, theta, phase.c, proj.arc_s, cfg.sde, seed=base + (1, cycle)
        )
        if record_particles:
            trace.particle_snapshots.append((cycle, particles.particles.copy()))
        current = plan(env.position, particles, memory, cfg.planner, warm_start=prev_plan)
        trace.planner_rows.append(
            (cycle, current.objective_value, current.mmd_value, current.effort_value, current.iters_used)
        )
        executed = []
        for k in range(cfg.planner.exec_steps):
            env = step(env, current.controls[k], layout, step_budget=cfg.step_budget)
            executed.append(env.position.copy())
            proj = nearest_in_dataset(env.position, dataset)
            if proj.demo_id != phase.active_demo:
                active = dataset.demo_by_id(proj.demo_id)
            phase = update(phase, proj, cfg.phase)
            trace.rows.append(
                StepRow(
                    step=env.step_count,
                    x=env.position.copy(),
                    tau=phase.tau,
                    c=phase.c,
                    theta=temperature(phase, cfg.phase),
                    e=phase.last_error,
                    cycle=cycle,
                )
            )
            if env.done:
                break
        memory = push_memory(memory, np.asarray(executed))
        prev_plan = current
        cycle += 1

    trace.success = env.success
    trace.steps_used = env.step_count
    return trace


@dataclass
class SweepRow:
    sigma: float
    trials: int
    successes: int
    success_rate: float
    mean_steps_success: float  # nan when no trial succeeded


def _sweep_trial(cfg: RunConfig, layout: MazeLayout, dataset: DemoDataset, si: int, trial: int):
    sigma = cfg.sweep.sigmas[si]
    perturbed, pert = perturb_gates(layout, sigma, seed=(cfg.seed, 1000 + si, trial))
    trace = run_episode(cfg, perturbed, dataset, seed=(cfg.seed, si, trial))
    return si, trial, trace.success, trace.steps_used, pert.offsets


def run_sweep(
    cfg: RunConfig,
    layout: MazeLayout | None = None,
    dataset: DemoDataset | None = None,
    jobs: int = 1,
) -> list[SweepRow]:
    """Per-sigma success statistics over independently perturbed episodes.

    Trial seeds derive from (master seed, sigma index, trial index); results
    do not depend on the number of worker processes.
    """
    if layout is None:
        if cfg.layout_path is None:
            raise ValueError("sweep needs a layout (path or object)")
        layout = load_layout(cfg.layout_path)
    if dataset is None:
        if cfg.dataset_path is None:
            raise ValueError("sweep needs a dataset (path or object)")
        dataset = load_dataset(cfg.dataset_path)
    tasks = [
        (si, trial) for si in range(len(cfg.sweep.sigmas)) for trial in range(cfg.sweep.trials)
    ]
    results = {}
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(_sweep_trial, cfg, layout, dataset, si, trial): (si, trial)
                for si, trial in tasks
            }
            for fut in concurrent.futures.as_completed(futures):
                si, trial, success, steps, _ = fut.result()
                results[(si, trial)] = (success, steps)
    else:
        for si, trial in tasks:
            _, _, success, steps, _ = _sweep_trial(cfg, layout, dataset, si, trial)
            results[(si, trial)] = (success, steps)
    rows = []
    for si, sigma in enumerate(cfg.sweep.sigmas):
        outcomes = [results[(si, t)] for t in range(cfg.sweep.trials)]
        successes = sum(1 for ok, _ in outcomes if ok)
        steps = [n for ok, n in outcomes if ok]
        rows.append(
            SweepRow(
                sigma=float(sigma),
                trials=cfg.sweep.trials,
                successes=successes,
                success_rate=successes / cfg.sweep.trials,
                mean_steps_success=float(np.mean(steps)) if steps else float("nan"),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# CSV emission. Floats are written with repr() (shortest round-trip form) so
# identical runs produce identical bytes.
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def export_trace(trace: EpisodeTrace, path: str) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(TRACE_HEADER + "\n")
        for r in trace.rows:
            f.write(
                ",".join(
                    [str(r.step), _fmt(r.x[0]), _fmt(r.x[1]), _fmt(r.tau), str(r.c), _fmt(r.theta), _fmt(r.e), str(r.cycle)]
                )
                + "\n"
            )


def load_trace(path: str) -> EpisodeTrace:
    trace = EpisodeTrace()
    with open(path) as f:
        header = f.readline().strip()
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: bad trace header {header!r}")
        for ln, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise ValueError(f"{path}:{ln}: expected 8 fields, got {len(parts)}")
            trace.rows.append(
                StepRow(
                    step=int(parts[0]),
                    x=np.array([float(parts[1]), float(parts[2])]),
                    tau=float(parts[3]),
                    c=int(parts[4]),
                    theta=float(parts[5]),
                    e=float(parts[6]),
                    cycle=int(parts[7]),
                )
            )
    trace.steps_used = trace.rows[-1].step if trace.rows else 0
    return trace


def export_planner_rows(trace: EpisodeTrace, path: str) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(PLANNER_HEADER + "\n")
        for cycle, obj, mmd, effort, iters in trace.planner_rows:
            f.write(f"{cycle},{_fmt(obj)},{_fmt(mmd)},{_fmt(effort)},{iters}\n")


def export_particles(trace: EpisodeTrace, path: str) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(PARTICLES_HEADER + "\n")
        for cycle, pts in trace.particle_snapshots:
            for j, p in enumerate(pts):
                f.write(f"{cycle},{j},{_fmt(p[0])},{_fmt(p[1])}\n")


def export_sweep(rows: list[SweepRow], path: str) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(SWEEP_HEADER + "\n")
        for r in rows:
            f.write(
                f"{_fmt(r.sigma)},{r.trials},{r.successes},{_fmt(r.success_rate)},{_fmt(r.mean_steps_success)}\n"
            )


def planner_sidecar_path(trace_path: str) -> str:
    root, ext = os.path.splitext(trace_path)
    return f"{root}_planner{ext or '.csv'}"
