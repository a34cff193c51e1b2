"""Progress tracking against a demonstration timeline.

A virtual reference clock tau advances while the executed motion keeps up
with the retrieved expert time index t'. The phase error e = tau - t'
decides between two branches on every update:

* ``e <= epsilon``  tracking: the stagnation counter resets to 0 and the
  clock advances by ``clock_rate``.
* ``e > epsilon``   stagnating: the clock freezes and the counter
  increments by 1.

The counter feeds a temperature theta = min(1, c / c_max) that the target
distribution uses to trade tracking against exploration.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import Projection


@dataclass(frozen=True)
class PhaseConfig:
    epsilon: float = 10.0  # phase-error threshold, demo time-index units
    c_max: int = 50  # updates of stagnation until theta saturates at 1
    clock_rate: float = 1.0  # demo indices the clock advances per tracking update

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.c_max < 1:
            raise ValueError("c_max must be >= 1")


@dataclass(frozen=True)
class PhaseState:
    tau: float = 0.0
    c: int = 0
    last_error: float = 0.0
    active_demo: str | None = None


def phase_error(tau: float, t_prime: int) -> float:
    """e = tau - t' (positive when execution lags the reference clock)."""
    return tau - t_prime


def update(phase: PhaseState, proj: Projection, cfg: PhaseConfig) -> PhaseState:
    """Advance the phase state given the current retrieval result.

    Two extra rules beyond the branch pair: if retrieval switched to a
    different demonstration, tau restarts on the new timeline (the counter
    is carried over so exploration pressure is kept); if retrieval runs
    ahead of the clock (t' > tau), the clock catches up before the branch
    test so a negative error cannot park tau behind forever.
    """
    tau = phase.tau
    t = float(proj.time_index)
    switched = phase.active_demo is not None and proj.demo_id != phase.active_demo
    if switched:
        tau = t
    if t > tau:
        tau = t
    e = phase_error(tau, proj.time_index)
    if e <= cfg.epsilon:
        new_tau = tau + cfg.clock_rate
        new_c = phase.c if switched else 0
    else:
        new_tau = tau
        new_c = phase.c + 1
    return PhaseState(tau=new_tau, c=new_c, last_error=e, active_demo=proj.demo_id)


def temperature(phase: PhaseState, cfg: PhaseConfig) -> float:
    """theta = min(1, c / c_max); 0 while tracking, 1 at saturation."""
    return min(1.0, phase.c / cfg.c_max)
