"""2D maze: vertical walls pierced by gates, clutter, a goal disc, and a
point agent with slide-along-wall collision resolution.

Walls are thin axis-aligned rectangles spanning a y-interval at a fixed x;
gates cut passable openings out of them. Motion is resolved by sweeping
the step segment against every solid rectangle (including four slabs that
box in the unit workspace): the earliest hit stops the normal component at
the face and lets the tangential remainder continue.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .geometry import Trajectory

CONTACT_TOL = 1e-9


@dataclass(frozen=True)
class Wall:
    x: float
    y_min: float
    y_max: float
    thickness: float = 0.01


@dataclass(frozen=True)
class Gate:
    wall: int  # index into MazeLayout.walls
    center: float  # gate center y
    half_width: float


@dataclass(frozen=True)
class Rect:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def contains(self, p, tol: float = 0.0) -> bool:
        return (
            self.x_min + tol < p[0] < self.x_max - tol
            and self.y_min + tol < p[1] < self.y_max - tol
        )


@dataclass(frozen=True)
class Perturbation:
    offsets: np.ndarray  # applied per-gate y-offsets


# slabs that enclose the unit box so bounds are handled like any other wall
_BOUNDARY = (
    Rect(-0.5, 0.0, -0.5, 1.5),
    Rect(1.0, 1.5, -0.5, 1.5),
    Rect(-0.5, 1.5, -0.5, 0.0),
    Rect(-0.5, 1.5, 1.0, 1.5),
)


@dataclass
class MazeLayout:
    walls: list[Wall]
    gates: list[Gate]
    goal_center: np.ndarray
    goal_radius: float
    start: np.ndarray
    clutter: list[Rect] = field(default_factory=list)

    def __post_init__(self):
        self.goal_center = np.asarray(self.goal_center, dtype=float)
        self.start = np.asarray(self.start, dtype=float)
        for g in self.gates:
            if not 0 <= g.wall < len(self.walls):
                raise ValueError(f"gate references missing wall {g.wall}")
            w = self.walls[g.wall]
            if g.center - g.half_width < w.y_min - 1e-12 or g.center + g.half_width > w.y_max + 1e-12:
                raise ValueError(f"gate at y={g.center} does not fit inside wall {g.wall}")
        for name, p in (("start", self.start), ("goal", self.goal_center)):
            if not ((0 <= p) & (p <= 1)).all():
                raise ValueError(f"{name} lies outside the unit box")
            if any(r.contains(p) for r in self.solid_rects()):
                raise ValueError(f"{name} lies inside an obstacle")

    def solid_rects(self) -> list[Rect]:
        """Wall rectangles minus their gate openings, plus clutter."""
        rects = []
        for wi, w in enumerate(self.walls):
            openings = sorted(
                (g.center - g.half_width, g.center + g.half_width)
                for g in self.gates
                if g.wall == wi
            )
            x0, x1 = w.x - w.thickness / 2.0, w.x + w.thickness / 2.0
            lo = w.y_min
            for o_lo, o_hi in openings:
                if o_lo > lo:
                    rects.append(Rect(x0, x1, lo, o_lo))
                lo = max(lo, o_hi)
            if w.y_max > lo:
                rects.append(Rect(x0, x1, lo, w.y_max))
        rects.extend(self.clutter)
        return rects


@dataclass
class EnvState:
    position: np.ndarray
    step_count: int = 0
    done: bool = False
    success: bool = False


def at_goal(pos, layout: MazeLayout) -> bool:
    pos = np.asarray(pos, dtype=float)
    return float(np.linalg.norm(pos - layout.goal_center)) <= layout.goal_radius


def _swept_hit(p, d, rect: Rect):
    """Earliest t in [0, 1] at which p + t d enters the open rectangle.

    Returns (t, axis, face) or None. A point resting on a face counts as
    outside; pushing into the face from there is a t = 0 hit.
    """
    t_enter, t_exit = -np.inf, np.inf
    axis, face = -1, 0.0
    lims = ((rect.x_min, rect.x_max), (rect.y_min, rect.y_max))
    for a in range(2):
        lo, hi = lims[a]
        if d[a] > 0.0:
            te, tx, f = (lo - p[a]) / d[a], (hi - p[a]) / d[a], lo
        elif d[a] < 0.0:
            te, tx, f = (hi - p[a]) / d[a], (lo - p[a]) / d[a], hi
        else:
            if p[a] <= lo or p[a] >= hi:
                return None
            continue
        if te > t_enter:
            t_enter, axis, face = te, a, f
        t_exit = min(t_exit, tx)
    if t_enter >= t_exit or t_enter >= 1.0 or t_exit <= 0.0:
        return None
    if t_enter < 0.0:
        # started on (or marginally inside) the boundary: treat as immediate contact
        t_enter = 0.0
    return t_enter, axis, face


def resolve_motion(p, u, rects) -> np.ndarray:
    """Move p by u, sliding along rectangle faces on contact."""
    p = np.asarray(p, dtype=float).copy()
    remaining = np.asarray(u, dtype=float).copy()
    for _ in range(4):
        if not np.any(remaining):
            break
        best = None
        for rect in rects:
            hit = _swept_hit(p, remaining, rect)
            if hit is not None and (best is None or hit[0] < best[0]):
                best = hit
        if best is None:
            p = p + remaining
            break
        t, axis, face = best
        p = p + t * remaining
        p[axis] = face
        remaining = (1.0 - t) * remaining
        remaining[axis] = 0.0
    return p


def step(env: EnvState, u, layout: MazeLayout, step_budget: int = 1000) -> EnvState:
    """Advance one control step; sets done/success on goal or budget."""
    if env.done:
        return env
    rects = layout.solid_rects() + list(_BOUNDARY)
    pos = resolve_motion(env.position, u, rects)
    count = env.step_count + 1
    success = at_goal(pos, layout)
    done = success or count >= step_budget
    return EnvState(position=pos, step_count=count, done=done, success=success)


def perturb_gates(layout: MazeLayout, sigma: float, seed) -> tuple[MazeLayout, Perturbation]:
    """Shift every gate center by an independent N(0, sigma^2) draw, clamped
    so the opening stays inside its wall's y-interval."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    entropy = tuple(int(s) for s in seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    rng = np.random.default_rng(entropy)
    raw = rng.normal(0.0, sigma, size=len(layout.gates)) if sigma > 0 else np.zeros(len(layout.gates))
    new_gates = []
    offsets = np.zeros(len(layout.gates))
    for i, g in enumerate(layout.gates):
        w = layout.walls[g.wall]
        lo, hi = w.y_min + g.half_width, w.y_max - g.half_width
        center = float(np.clip(g.center + raw[i], lo, hi))
        offsets[i] = center - g.center
        new_gates.append(replace(g, center=center))
    perturbed = MazeLayout(
        walls=list(layout.walls),
        gates=new_gates,
        goal_center=layout.goal_center.copy(),
        goal_radius=layout.goal_radius,
        start=layout.start.copy(),
        clutter=list(layout.clutter),
    )
    return perturbed, Perturbation(offsets=offsets)


def scripted_expert(layout: MazeLayout, speed: float = 0.01) -> Trajectory:
    """Piecewise-linear path start -> each gate center (walls in x order)
    -> goal, resampled at constant speed per timestep."""
    if speed <= 0:
        raise ValueError("speed must be > 0")
    sx, gx = float(layout.start[0]), float(layout.goal_center[0])
    lo, hi = min(sx, gx), max(sx, gx)
    between = [
        (w.x, wi) for wi, w in enumerate(layout.walls) if lo < w.x < hi
    ]
    between.sort(reverse=sx > gx)
    waypoints = [np.asarray(layout.start, dtype=float)]
    for wx, wi in between:
        gates = [g for g in layout.gates if g.wall == wi]
        if not gates:
            raise ValueError(f"no feasible gate sequence: wall at x={wx} has no gate")
        prev_y = waypoints[-1][1]
        gate = min(gates, key=lambda g: abs(g.center - prev_y))
        waypoints.append(np.array([wx, gate.center]))
    waypoints.append(np.asarray(layout.goal_center, dtype=float))
    pts = np.asarray(waypoints)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    total = float(cum[-1])
    dists = np.arange(0.0, total, speed)
    if total - dists[-1] > 1e-12:
        dists = np.concatenate([dists, [total]])
    states = np.empty((dists.shape[0], 2))
    for k, s in enumerate(dists):
        i = min(int(np.searchsorted(cum, s, side="right")) - 1, len(seg) - 1)
        f = 0.0 if seg[i] == 0 else (s - cum[i]) / seg[i]
        states[k] = pts[i] + f * (pts[i + 1] - pts[i])
    return Trajectory(states=states, timestep=1.0, id="expert")


def nominal_layout() -> MazeLayout:
    """Two full-height gated walls plus clutter near the goal."""
    return MazeLayout(
        walls=[Wall(x=0.35, y_min=0.0, y_max=1.0), Wall(x=0.65, y_min=0.0, y_max=1.0)],
        gates=[Gate(wall=0, center=0.7, half_width=0.05), Gate(wall=1, center=0.3, half_width=0.05)],
        goal_center=np.array([0.95, 0.9]),
        goal_radius=0.05,
        start=np.array([0.05, 0.1]),
        clutter=[Rect(0.78, 0.83, 0.72, 0.78), Rect(0.88, 0.93, 0.60, 0.68)],
    )


# ---------------------------------------------------------------------------
# Layout files: YAML with sections walls, gates, goal, start and optional
# clutter; all numeric fields plain decimals.
# ---------------------------------------------------------------------------


def save_layout(layout: MazeLayout, path: str) -> None:
    doc = {
        "walls": [
            {"x": w.x, "y_min": w.y_min, "y_max": w.y_max, "thickness": w.thickness}
            for w in layout.walls
        ],
        "gates": [
            {"wall": g.wall, "center": g.center, "half_width": g.half_width}
            for g in layout.gates
        ],
        "goal": {
            "x": float(layout.goal_center[0]),
            "y": float(layout.goal_center[1]),
            "radius": layout.goal_radius,
        },
        "start": {"x": float(layout.start[0]), "y": float(layout.start[1])},
    }
    if layout.clutter:
        doc["clutter"] = [
            {"x_min": r.x_min, "x_max": r.x_max, "y_min": r.y_min, "y_max": r.y_max}
            for r in layout.clutter
        ]
    with open(path, "w", newline="\n") as f:
        yaml.safe_dump(doc, f, sort_keys=False)


def _need(doc: dict, key: str, path: str):
    if key not in doc:
        raise ValueError(f"{path}: missing required section '{key}'")
    return doc[key]


def load_layout(path: str) -> MazeLayout:
    if not os.path.isfile(path):
        raise ValueError(f"layout file not found: {path}")
    with open(path) as f:
        doc = yaml.safe_load(f)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: layout file must be a mapping of sections")
    walls_doc = _need(doc, "walls", path)
    gates_doc = _need(doc, "gates", path)
    goal = _need(doc, "goal", path)
    start = _need(doc, "start", path)
    try:
        walls = [
            Wall(
                x=float(w["x"]),
                y_min=float(w["y_min"]),
                y_max=float(w["y_max"]),
                thickness=float(w.get("thickness", 0.01)),
            )
            for w in walls_doc
        ]
        gates = [
            Gate(wall=int(g["wall"]), center=float(g["center"]), half_width=float(g["half_width"]))
            for g in gates_doc
        ]
        clutter = [
            Rect(float(r["x_min"]), float(r["x_max"]), float(r["y_min"]), float(r["y_max"]))
            for r in doc.get("clutter", [])
        ]
        return MazeLayout(
            walls=walls,
            gates=gates,
            goal_center=np.array([float(goal["x"]), float(goal["y"])]),
            goal_radius=float(goal["radius"]),
            start=np.array([float(start["x"]), float(start["y"])]),
            clutter=clutter,
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing field {exc} in layout") from None
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: bad layout value: {exc}") from None
