"""Particle-based target distribution synthesized around a demonstration.

Particles follow an Euler-Maruyama discretization of

    dq = [ kappa(theta) (x*(q) - q) + alpha(theta) score(q) ] dt
         + sqrt(2 Sigma(theta, q)) dW

where x*(q) is the discrete projection of q onto the demonstration and
score(q) is the gradient of the log kernel density over the demonstration
states. The diffusion is split into tangential and orthogonal parts with
coefficients D_par(theta) and D_perp(theta); choosing D_perp >> D_par
spreads particles sideways from the curve rather than along it. Gains are
linear in the temperature: drift scales with (1 - theta), diffusion with
theta, so theta = 0 contracts onto the demonstration and theta = 1
diffuses around it.

Deviation from the curve is capped by a double-exponential envelope
centred at the arc-length position s_star of the follower; the envelope
decay length grows with the stagnation count, widening the explorable
neighbourhood the longer execution stalls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Trajectory, all_tangents, as_states, build_arc_table, project_to_trajectory, tangent_at


@dataclass(frozen=True)
class SdeParams:
    n_particles: int = 200
    kappa0: float = 8.0  # curve attraction gain at theta = 0, per unit time
    alpha0: float = 0.05  # score gain at theta = 0; keep alpha0 * sde_dt < h**2
    d_par0: float = 0.002  # tangential diffusion at theta = 1
    d_perp0: float = 0.02  # orthogonal diffusion at theta = 1
    h: float = 0.03  # kernel bandwidth, workspace units
    A: float = 1.0  # envelope amplitude
    b0: float = 0.1  # envelope decay length at c = 0, arc-length units
    gamma: float = 0.05  # envelope broadening per stagnation count
    rho_max: float = 0.15  # orthogonal deviation cap at s = s_star
    sde_steps: int = 20  # Euler-Maruyama steps per planning cycle
    sde_dt: float = 0.01
    reinit_each_cycle: bool = False  # re-draw particles instead of warm-starting

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.d_perp0 < self.d_par0:
            raise ValueError("d_perp0 must be >= d_par0")
        for name in ("kappa0", "alpha0", "d_par0", "d_perp0", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("h", "A", "b0", "rho_max", "sde_dt"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.sde_steps < 1:
            raise ValueError("sde_steps must be >= 1")


@dataclass
class ParticleSet:
    particles: np.ndarray  # (N, d), clamped to the unit box
    seed: object = 0
    theta_used: float = 0.0

    def __len__(self) -> int:
        return self.particles.shape[0]


def _entropy(seed) -> tuple:
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


def init_particles(traj, n: int, seed, jitter_std: float = 0.015) -> ParticleSet:
    """Particles at n uniformly chosen (with replacement) demo states plus
    isotropic Gaussian jitter of the given std, clamped to the unit box."""
    if n < 1:
        raise ValueError("need at least one particle")
    states = as_states(traj)
    rng = np.random.default_rng(_entropy(seed))
    idx = rng.integers(0, states.shape[0], size=n)
    pts = states[idx] + rng.normal(0.0, 1.0, size=(n, states.shape[1])) * jitter_std
    np.clip(pts, 0.0, 1.0, out=pts)
    return ParticleSet(particles=pts, seed=seed, theta_used=0.0)


def heat_kernel(q, x, h: float) -> float:
    """Squared-exponential kernel exp(-||q - x||^2 / (2 h^2))."""
    if h <= 0:
        raise ValueError("bandwidth h must be > 0")
    q = np.asarray(q, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(np.exp(-((q - x) ** 2).sum() / (2.0 * h * h)))


def kernel_score(q, traj, h: float) -> np.ndarray:
    """Gradient of the log kernel density of the demo states at q.

    Equals the kernel-weighted mean of the per-state scores (x_t - q)/h^2.
    Weights are normalised against the largest kernel value, so far from the
    demonstration the score degrades gracefully to attraction toward the
    nearest state instead of underflowing to 0/0.
    """
    if h <= 0:
        raise ValueError("bandwidth h must be > 0")
    states = as_states(traj)
    if states.shape[0] == 0:
        raise ValueError("kernel score needs a non-empty trajectory")
    q = np.asarray(q, dtype=float).reshape(-1)
    d2 = ((states - q) ** 2).sum(axis=1)
    w = np.exp(-(d2 - d2.min()) / (2.0 * h * h))
    mean = w @ states / w.sum()
    return (mean - q) / (h * h)


def attraction_drift(q, traj, kappa: float) -> np.ndarray:
    """kappa * (x*(q) - q): pull toward the nearest demo state."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    q = np.asarray(q, dtype=float).reshape(-1)
    return kappa * (project_to_trajectory(q, traj).point - q)


def anisotropic_increment(q, traj, d_par: float, d_perp: float, dt: float, rng) -> np.ndarray:
    """One diffusion increment with the noise split along/normal to the curve.

    Draws w ~ N(0, I dt) and returns sqrt(2 d_par) P w + sqrt(2 d_perp) (I - P) w
    with P the projector onto the unit tangent at the projection of q. A
    degenerate trajectory (no tangent) falls back to isotropic d_perp noise.
    """
    if d_par < 0 or d_perp < 0:
        raise ValueError("diffusion coefficients must be >= 0")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    q = np.asarray(q, dtype=float).reshape(-1)
    w = rng.normal(0.0, 1.0, size=q.shape[0]) * np.sqrt(dt)
    try:
        proj = project_to_trajectory(q, traj)
        that = tangent_at(traj, proj.time_index)
    except ValueError:
        return np.sqrt(2.0 * d_perp) * w
    w_par = (that @ w) * that
    return np.sqrt(2.0 * d_par) * w_par + np.sqrt(2.0 * d_perp) * (w - w_par)


def envelope(s, A: float, b: float):
    """Double-exponential profile E(s) = A/(2b) exp(-|s|/b); integrates to A."""
    if b <= 0:
        raise ValueError("decay length b must be > 0")
    return (A / (2.0 * b)) * np.exp(-np.abs(s) / b)


def deviation_bound(s, s_star: float, b_eff: float, rho_max: float):
    """Allowed deviation from the curve at arc position s when the follower
    sits at s_star: rho(s) = rho_max * exp(-|s - s_star| / b_eff)."""
    if b_eff <= 0:
        raise ValueError("b_eff must be > 0")
    return rho_max * np.exp(-np.abs(np.asarray(s, dtype=float) - s_star) / b_eff)


def apply_envelope_bound(q, traj, s_star: float, b_eff: float, rho_max: float) -> np.ndarray:
    """Reflect q back inside the deviation envelope if it escaped.

    With n the offset of q from its projection and rho the local bound:
    inside (||n|| <= rho) the point is untouched; otherwise the offset is
    reflected about the boundary to 2 rho - ||n||, or set onto the boundary
    when the overshoot exceeds rho itself.
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    proj = project_to_trajectory(q, traj)
    rho = float(deviation_bound(proj.arc_s, s_star, b_eff, rho_max))
    n = q - proj.point
    dist = float(np.linalg.norm(n))
    if dist <= rho:
        return q.copy()
    scale = (2.0 * rho - dist) / dist if 2.0 * rho > dist else rho / dist
    return proj.point + n * scale


def _dist2(Q, states):
    """Squared distances (N, T) without a (N, T, d) temporary."""
    out = (Q[:, 0:1] - states[None, :, 0]) ** 2
    for a in range(1, states.shape[1]):
        out += (Q[:, a : a + 1] - states[None, :, a]) ** 2
    return out


def _bound_pass(Q, d2, states, arc, s_star, b_eff, rho_max):
    """Vectorised single reflection pass against precomputed distances.

    Returns (Q', d2', any_violation) with d2' refreshed only for the rows
    that moved.
    """
    idx = d2.argmin(axis=1)
    xstar = states[idx]
    n = Q - xstar
    dist = np.sqrt(d2[np.arange(Q.shape[0]), idx])
    rho = deviation_bound(arc[idx], s_star, b_eff, rho_max)
    viol = dist > rho + 1e-15
    if not viol.any():
        return Q, d2, False
    d_v = dist[viol]
    r_v = rho[viol]
    scale = np.where(2.0 * r_v > d_v, (2.0 * r_v - d_v) / d_v, r_v / d_v)
    Q = Q.copy()
    Q[viol] = xstar[viol] + n[viol] * scale[:, None]
    d2 = d2.copy()
    d2[viol] = _dist2(Q[viol], states)
    return Q, d2, True


def evolve(
    ps: ParticleSet,
    traj,
    theta: float,
    c: int,
    s_star: float,
    params: SdeParams,
    seed,
) -> ParticleSet:
    """Run sde_steps Euler-Maruyama steps on every particle.

    Gains: kappa = kappa0 (1 - theta), alpha = alpha0 (1 - theta),
    D_par = d_par0 theta, D_perp = d_perp0 theta. After every step the
    particles are clamped to the unit box and pushed back inside the
    deviation envelope (decay length b0 (1 + gamma c), centred at s_star).
    Each particle draws from its own RNG stream keyed by (seed, particle
    index), so the result is independent of evaluation order.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    states = as_states(traj)
    arc = traj.arc if isinstance(traj, Trajectory) else build_arc_table(states)
    tangents = all_tangents(states)
    n, dim = ps.particles.shape
    kappa = params.kappa0 * (1.0 - theta)
    alpha = params.alpha0 * (1.0 - theta)
    d_par = params.d_par0 * theta
    d_perp = params.d_perp0 * theta
    b_eff = params.b0 * (1.0 + params.gamma * c)
    h2 = params.h * params.h
    base = _entropy(seed)
    noise = np.empty((n, params.sde_steps, dim))
    for j in range(n):
        noise[j] = np.random.default_rng(base + (j,)).normal(
            0.0, 1.0, size=(params.sde_steps, dim)
        )
    noise *= np.sqrt(params.sde_dt)
    s_par = np.sqrt(2.0 * d_par)
    s_perp = np.sqrt(2.0 * d_perp)

    Q = ps.particles.copy()
    d2 = _dist2(Q, states)
    for step in range(params.sde_steps):
        idx = d2.argmin(axis=1)
        drift = 0.0
        if kappa > 0.0:
            drift = kappa * (states[idx] - Q)
        if alpha > 0.0:
            w = np.exp(-(d2 - d2.min(axis=1, keepdims=True)) / (2.0 * h2))
            mean = (w @ states) / w.sum(axis=1)[:, None]
            drift = drift + alpha * (mean - Q) / h2
        Q = Q + drift * params.sde_dt
        if d_par > 0.0 or d_perp > 0.0:
            wn = noise[:, step, :]
            that = tangents[idx]
            w_par = (wn * that).sum(axis=1)[:, None] * that
            Q = Q + s_par * w_par + s_perp * (wn - w_par)
        np.clip(Q, 0.0, 1.0, out=Q)
        d2 = _dist2(Q, states)
        for _ in range(16):
            Q, d2, violated = _bound_pass(Q, d2, states, arc, s_star, b_eff, params.rho_max)
            if not violated:
                break
    return ParticleSet(particles=Q, seed=seed, theta_used=theta)
