"""Receding-horizon planner minimising a sample-based squared MMD.

The plan is a sequence of bounded velocity controls for a single
integrator. Its objective is the squared maximum mean discrepancy between
the coverage samples (states remembered from recently executed segments
plus the states the candidate plan would visit) and the particle target,
plus a small control-effort penalty. Keeping remembered states in the
coverage set makes already-visited regions look covered, so each new plan
is pushed toward target mass that past execution missed.

All kernel sums use the squared-exponential kernel with bandwidth h_mmd
and fixed summation order, so results are deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .particles import ParticleSet


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int = 25  # planned steps H
    exec_steps: int = 5  # steps executed before replanning
    memory_len: int = 10  # executed segments kept in the coverage set
    h_mmd: float = 0.05  # kernel bandwidth of the coverage metric
    u_max: float = 0.02  # per-step control norm bound
    lambda_u: float = 0.1  # control effort weight
    iters: int = 100  # gradient iterations per plan
    step_size: float = 0.5  # initial descent step, halved on non-decrease

    def __post_init__(self):
        if self.horizon < 1 or self.exec_steps < 1 or self.memory_len < 1 or self.iters < 1:
            raise ValueError("horizon, exec_steps, memory_len and iters must be >= 1")
        if self.exec_steps > self.horizon:
            raise ValueError("exec_steps must not exceed horizon")
        if self.h_mmd <= 0 or self.u_max <= 0 or self.step_size <= 0:
            raise ValueError("h_mmd, u_max and step_size must be > 0")
        if self.lambda_u < 0:
            raise ValueError("lambda_u must be >= 0")


@dataclass
class CoverageMemory:
    """Ring buffer of the most recent executed state segments."""

    maxlen: int = 10
    segments: deque = field(default_factory=deque)

    def __post_init__(self):
        self.segments = deque(self.segments, maxlen=self.maxlen)

    def __len__(self) -> int:
        return len(self.segments)

    def states(self, d: int = 2) -> np.ndarray:
        if not self.segments:
            return np.zeros((0, d))
        return np.concatenate(list(self.segments), axis=0)


def push_memory(memory: CoverageMemory, executed) -> CoverageMemory:
    """Append one executed segment, evicting the oldest beyond maxlen."""
    seg = np.atleast_2d(np.asarray(executed, dtype=float))
    if seg.shape[0] == 0:
        raise ValueError("executed segment must be non-empty")
    memory.segments.append(seg.copy())
    return memory


@dataclass
class Plan:
    controls: np.ndarray  # (H, d), each row norm-bounded by u_max
    predicted_states: np.ndarray  # (H+1, d), rollout incl. the start state
    objective_value: float
    mmd_value: float = 0.0
    effort_value: float = 0.0
    iters_used: int = 0


def _as_points(samples) -> np.ndarray:
    if isinstance(samples, ParticleSet):
        return samples.particles
    return np.atleast_2d(np.asarray(samples, dtype=float))


def _kernel(a: np.ndarray, b: np.ndarray, h: float) -> np.ndarray:
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-d2 / (2.0 * h * h))


def mmd_sq(traj_samples, target, h_mmd: float) -> float:
    """Squared MMD between two sample sets under the squared-exponential
    kernel, diagonal terms included:

        (1/T^2) sum k(x,x') - (2/TN) sum k(x,q) + (1/N^2) sum k(q,q')

    Zero iff the two multisets coincide; always >= 0 up to roundoff.
    """
    if h_mmd <= 0:
        raise ValueError("h_mmd must be > 0")
    X = _as_points(traj_samples)
    Q = _as_points(target)
    T, N = X.shape[0], Q.shape[0]
    if T == 0 or N == 0:
        raise ValueError("mmd_sq needs non-empty sample sets")
    return float(
        _kernel(X, X, h_mmd).sum() / (T * T)
        - 2.0 * _kernel(X, Q, h_mmd).sum() / (T * N)
        + _kernel(Q, Q, h_mmd).sum() / (N * N)
    )


def rollout(x0, controls) -> np.ndarray:
    """Single-integrator rollout: states[k+1] = states[k] + controls[k]."""
    x0 = np.asarray(x0, dtype=float).reshape(1, -1)
    u = np.atleast_2d(np.asarray(controls, dtype=float))
    return np.concatenate([x0, x0 + np.cumsum(u, axis=0)], axis=0)


class _Workspace:
    """Per-plan cache: everything about the target and the memory is
    constant while optimising one plan, so their kernel sums are computed
    once."""

    def __init__(self, x0, memory: CoverageMemory | None, target, cfg: PlannerConfig):
        self.x0 = np.asarray(x0, dtype=float).reshape(-1)
        self.cfg = cfg
        self.Q = _as_points(target)
        if self.Q.shape[0] == 0:
            raise ValueError("target must be non-empty")
        d = self.x0.shape[0]
        self.M = memory.states(d) if memory is not None else np.zeros((0, d))
        self.T = self.M.shape[0] + cfg.horizon
        self.N = self.Q.shape[0]
        h = cfg.h_mmd
        self.z = _kernel(self.Q, self.Q, h).sum() / (self.N * self.N)
        if self.M.shape[0]:
            self.k_mm_sum = _kernel(self.M, self.M, h).sum()
            self.k_mq_sum = _kernel(self.M, self.Q, h).sum()
        else:
            self.k_mm_sum = 0.0
            self.k_mq_sum = 0.0

    def forward(self, controls: np.ndarray):
        """Objective value plus the kernel matrices the gradient reuses."""
        cfg = self.cfg
        h = cfg.h_mmd
        P = self.x0 + np.cumsum(controls, axis=0)  # planned states x_1..x_H
        k_pp = _kernel(P, P, h)
        k_pq = _kernel(P, self.Q, h)
        T, N = self.T, self.N
        if self.M.shape[0]:
            k_pm = _kernel(P, self.M, h)
            k_xx = k_pp.sum() + 2.0 * k_pm.sum() + self.k_mm_sum
        else:
            k_pm = None
            k_xx = k_pp.sum()
        k_xq = k_pq.sum() + self.k_mq_sum
        mmd = k_xx / (T * T) - 2.0 * k_xq / (T * N) + self.z
        effort = (controls**2).sum() / cfg.horizon
        obj = mmd + cfg.lambda_u * effort
        return obj, mmd, effort, (P, k_pp, k_pq, k_pm)

    def gradient(self, controls: np.ndarray, cache) -> np.ndarray:
        """Analytic gradient from a forward pass's kernel matrices.

        d/dP of each kernel double sum; memory and target states are
        constants, then the chain rule through the rollout (u_k reaches
        every state from k on) turns per-state into per-control gradients.
        """
        cfg = self.cfg
        P, k_pp, k_pq, k_pm = cache
        T, N = self.T, self.N
        g = (2.0 / (T * T)) * ((k_pp @ P) - k_pp.sum(axis=1)[:, None] * P)
        if k_pm is not None:
            g += (2.0 / (T * T)) * ((k_pm @ self.M) - k_pm.sum(axis=1)[:, None] * P)
        g -= (2.0 / (T * N)) * ((k_pq @ self.Q) - k_pq.sum(axis=1)[:, None] * P)
        g /= cfg.h_mmd * cfg.h_mmd
        g_u = np.cumsum(g[::-1], axis=0)[::-1]
        return g_u + (2.0 * cfg.lambda_u / cfg.horizon) * controls


def objective(controls, x0, memory, target, cfg: PlannerConfig) -> float:
    """Coverage MMD^2 of (memory states + rollout states) against the
    target, plus lambda_u * mean squared control norm."""
    ws = _Workspace(x0, memory, target, cfg)
    u = np.atleast_2d(np.asarray(controls, dtype=float))
    if u.shape[0] != cfg.horizon:
        raise ValueError(f"expected {cfg.horizon} controls, got {u.shape[0]}")
    return float(ws.forward(u)[0])


def objective_gradient(controls, x0, memory, target, cfg: PlannerConfig) -> np.ndarray:
    """Analytic gradient of ``objective`` w.r.t. every control."""
    ws = _Workspace(x0, memory, target, cfg)
    u = np.atleast_2d(np.asarray(controls, dtype=float))
    if u.shape[0] != cfg.horizon:
        raise ValueError(f"expected {cfg.horizon} controls, got {u.shape[0]}")
    obj, _, _, cache = ws.forward(u)
    return ws.gradient(u, cache)


def _project_controls(u: np.ndarray, u_max: float) -> np.ndarray:
    norms = np.linalg.norm(u, axis=1)
    over = norms > u_max
    if over.any():
        u = u.copy()
        u[over] *= (u_max / norms[over])[:, None]
    return u


def plan(x0, target, memory, cfg: PlannerConfig, warm_start: Plan | None = None) -> Plan:
    """Projected gradient descent on the coverage objective.

    Warm start: the previous plan's controls shifted by exec_steps with a
    zero-padded tail (or all-zero controls). Each accepted iterate does not
    increase the objective; the step is halved on non-decrease and the
    search stops early once no decrease is possible.
    """
    ws = _Workspace(x0, memory, target, cfg)
    d = ws.x0.shape[0]
    H = cfg.horizon
    if warm_start is None:
        u = np.zeros((H, d))
    elif isinstance(warm_start, Plan):
        prev = warm_start.controls
        u = np.zeros((H, d))
        keep = prev[cfg.exec_steps :]
        u[: keep.shape[0]] = keep
    else:
        u = np.atleast_2d(np.asarray(warm_start, dtype=float)).copy()
        if u.shape != (H, d):
            raise ValueError(f"warm start must be ({H}, {d}) controls")
    u = _project_controls(u, cfg.u_max)
    obj, mmd, effort, cache = ws.forward(u)
    if not np.isfinite(obj):
        raise ValueError("objective is not finite; check configuration scales")
    grad = ws.gradient(u, cache)
    step = cfg.step_size
    iters_used = 0
    for _ in range(cfg.iters):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= 1e-14:
            break
        accepted = False
        while step > 1e-14:
            cand = _project_controls(u - step * grad, cfg.u_max)
            c_obj, c_mmd, c_effort, c_cache = ws.forward(cand)
            if c_obj <= obj:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        iters_used += 1
        prev_obj = obj
        u, obj, mmd, effort, cache = cand, c_obj, c_mmd, c_effort, c_cache
        grad = ws.gradient(u, cache)
        step = min(step * 2.0, cfg.step_size)
        # stop once an iteration stops paying: replanning happens shortly anyway
        if prev_obj - obj <= 1e-5 * max(1.0, abs(prev_obj)):
            break
    if not np.isfinite(obj):
        raise ValueError("objective is not finite; check configuration scales")
    return Plan(
        controls=u,
        predicted_states=rollout(ws.x0, u),
        objective_value=float(obj),
        mmd_value=float(mmd),
        effort_value=float(effort),
        iters_used=iters_used,
    )
