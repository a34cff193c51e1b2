"""Trajectory geometry: arc length, discrete projection, tangents, and
nearest-state retrieval over a demonstration dataset.

The workspace is the unit box [0, 1]^d (d = 2 by default). A demonstration
is an ordered sequence of states; retrieval operates on the flattened set
of all states of all demonstrations. Projection is discrete: the nearest
*sampled* state wins, never an interpolated point between samples.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np


def as_states(traj_or_states) -> np.ndarray:
    """Coerce a Trajectory or array-like into a (T, d) float array."""
    if isinstance(traj_or_states, Trajectory):
        return traj_or_states.states
    arr = np.asarray(traj_or_states, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"states must be a (T, d) array, got shape {arr.shape}")
    return arr


def _check_state(q, d: int | None = None) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if not np.isfinite(q).all():
        raise ValueError("state contains non-finite coordinates")
    if d is not None and q.shape[0] != d:
        raise ValueError(f"dimension mismatch: query has d={q.shape[0]}, expected d={d}")
    return q


def build_arc_table(traj) -> np.ndarray:
    """Cumulative arc length per state index; table[0] = 0.

    table[k+1] - table[k] is exactly the Euclidean distance between
    consecutive states.
    """
    states = as_states(traj)
    if states.shape[0] < 2:
        raise ValueError("trajectory must have at least 2 states")
    seg = np.linalg.norm(np.diff(states, axis=0), axis=1)
    return np.concatenate(([0.0], np.cumsum(seg)))


@dataclass
class Trajectory:
    """A demonstration: (T, d) state sequence with a fixed timestep.

    The cumulative arc-length table is computed once on construction and
    exposed as ``arc``.
    """

    states: np.ndarray
    timestep: float = 1.0
    id: str = "demo"
    arc: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] < 2:
            raise ValueError(f"trajectory '{self.id}' needs a (T>=2, d) state array")
        if not np.isfinite(states).all():
            raise ValueError(f"trajectory '{self.id}' contains non-finite states")
        if self.timestep <= 0:
            raise ValueError(f"trajectory '{self.id}' needs timestep > 0")
        self.states = states
        self.arc = build_arc_table(states)

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def d(self) -> int:
        return self.states.shape[1]

    @property
    def total_arc(self) -> float:
        return float(self.arc[-1])


@dataclass
class Projection:
    """Result of projecting a query point onto a demo: the nearest sampled
    state, its time index, distance, and arc-length coordinate."""

    demo_id: str
    time_index: int
    point: np.ndarray
    distance: float
    arc_s: float


def project_to_trajectory(q, traj) -> Projection:
    """Nearest sampled state of ``traj`` to ``q``; ties -> smallest index."""
    states = as_states(traj)
    q = _check_state(q, states.shape[1])
    d2 = ((states - q) ** 2).sum(axis=1)
    idx = int(np.argmin(d2))
    if isinstance(traj, Trajectory):
        arc_s, demo_id = float(traj.arc[idx]), traj.id
    else:
        arc = build_arc_table(states) if states.shape[0] >= 2 else np.zeros(1)
        arc_s, demo_id = float(arc[idx]), ""
    return Projection(demo_id, idx, states[idx].copy(), float(np.sqrt(d2[idx])), arc_s)


def tangent_at(traj, index: int) -> np.ndarray:
    """Unit tangent at a state index.

    Interior indices use the central difference of the neighbouring states,
    endpoints a one-sided difference. A zero difference falls back to the
    nearest nonzero segment; an all-identical trajectory has no tangent.
    """
    states = as_states(traj)
    n = states.shape[0]
    if n < 2:
        raise ValueError("tangent needs at least 2 states")
    if not 0 <= index < n:
        raise IndexError(f"index {index} out of range for trajectory of length {n}")
    if index == 0:
        v = states[1] - states[0]
    elif index == n - 1:
        v = states[-1] - states[-2]
    else:
        v = states[index + 1] - states[index - 1]
    norm = np.linalg.norm(v)
    if norm > 0.0:
        return v / norm
    seg = np.diff(states, axis=0)
    seg_norm = np.linalg.norm(seg, axis=1)
    nonzero = np.nonzero(seg_norm > 0.0)[0]
    if nonzero.size == 0:
        raise ValueError("tangent undefined: all states identical")
    k = nonzero[np.argmin(np.abs(nonzero - index))]
    return seg[k] / seg_norm[k]


def all_tangents(traj) -> np.ndarray:
    """Unit tangents at every index (vectorized tangent_at)."""
    states = as_states(traj)
    n = states.shape[0]
    hi = np.minimum(np.arange(n) + 1, n - 1)
    lo = np.maximum(np.arange(n) - 1, 0)
    v = states[hi] - states[lo]
    norms = np.linalg.norm(v, axis=1)
    out = np.zeros_like(v)
    ok = norms > 0.0
    out[ok] = v[ok] / norms[ok, None]
    for i in np.nonzero(~ok)[0]:
        out[i] = tangent_at(states, int(i))
    return out


@dataclass
class DemoDataset:
    """A collection of demonstrations plus a flattened state index.

    Demos are stored sorted by id so that the flat index is ordered by
    (demo_id, time_index); ``np.argmin`` over it then realises the
    lexicographic tie-break for free.
    """

    demos: list[Trajectory]
    flat_states: np.ndarray = field(init=False, repr=False)
    flat_demo: np.ndarray = field(init=False, repr=False)
    flat_time: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.demos = sorted(self.demos, key=lambda t: t.id)
        if self.demos:
            dims = {t.d for t in self.demos}
            if len(dims) != 1:
                raise ValueError(f"demos mix dimensions: {sorted(dims)}")
            self.flat_states = np.concatenate([t.states for t in self.demos], axis=0)
            self.flat_demo = np.concatenate(
                [np.full(len(t), i, dtype=int) for i, t in enumerate(self.demos)]
            )
            self.flat_time = np.concatenate(
                [np.arange(len(t), dtype=int) for t in self.demos]
            )
        else:
            self.flat_states = np.zeros((0, 0))
            self.flat_demo = np.zeros(0, dtype=int)
            self.flat_time = np.zeros(0, dtype=int)

    def __len__(self) -> int:
        return self.flat_states.shape[0]

    @property
    def d(self) -> int:
        if not self.demos:
            raise ValueError("empty dataset has no dimension")
        return self.demos[0].d

    @property
    def flat_index(self) -> list[tuple[str, int, np.ndarray]]:
        return [
            (self.demos[di].id, int(ti), s)
            for di, ti, s in zip(self.flat_demo, self.flat_time, self.flat_states)
        ]

    def demo_by_id(self, demo_id: str) -> Trajectory:
        for t in self.demos:
            if t.id == demo_id:
                return t
        raise KeyError(f"no demo with id '{demo_id}'")


def nearest_in_dataset(q, ds: DemoDataset) -> Projection:
    """Exhaustive nearest-state retrieval over the flattened dataset.

    Ties are broken by smallest (demo_id, time_index).
    """
    if len(ds) == 0:
        raise ValueError("cannot retrieve from an empty dataset")
    q = _check_state(q, ds.d)
    d2 = ((ds.flat_states - q) ** 2).sum(axis=1)
    i = int(np.argmin(d2))
    demo = ds.demos[ds.flat_demo[i]]
    t = int(ds.flat_time[i])
    return Projection(demo.id, t, demo.states[t].copy(), float(np.sqrt(d2[i])), float(demo.arc[t]))


class GridIndex:
    """Uniform-bucket accelerator for nearest-state retrieval.

    Returns exactly what the exhaustive scan returns, including the
    tie-break, by expanding cell rings until the ring lower bound exceeds
    the best distance found so far.
    """

    def __init__(self, ds: DemoDataset, cell: float = 0.05):
        if len(ds) == 0:
            raise ValueError("cannot index an empty dataset")
        if cell <= 0:
            raise ValueError("cell size must be positive")
        self.ds = ds
        self.cell = float(cell)
        keys = np.floor(ds.flat_states / self.cell).astype(int)
        self._buckets: dict[tuple, np.ndarray] = {}
        order = np.arange(len(ds))
        for key in np.unique(keys, axis=0):
            mask = (keys == key).all(axis=1)
            self._buckets[tuple(key)] = order[mask]
        self._key_lo = keys.min(axis=0)
        self._key_hi = keys.max(axis=0)

    def query(self, q) -> Projection:
        ds = self.ds
        q = _check_state(q, ds.d)
        center_arr = np.floor(q / self.cell).astype(int)
        center = tuple(center_arr)
        d = len(center)
        # beyond this ring every occupied bucket has been visited
        last_ring = int(
            np.max(np.maximum(np.abs(self._key_lo - center_arr), np.abs(self._key_hi - center_arr)))
        )
        best_d2 = np.inf
        candidates: list[np.ndarray] = []
        for ring in range(last_ring + 1):
            if np.isfinite(best_d2) and (ring - 1) * self.cell > np.sqrt(best_d2):
                break
            shell = self._shell_cells(center, ring, d)
            found = [self._buckets[c] for c in shell if c in self._buckets]
            if found:
                idx = np.concatenate(found)
                d2 = ((ds.flat_states[idx] - q) ** 2).sum(axis=1)
                best_d2 = min(best_d2, float(d2.min()))
                candidates.append(idx)
        idx = np.sort(np.concatenate(candidates))
        d2 = ((ds.flat_states[idx] - q) ** 2).sum(axis=1)
        i = int(idx[np.argmin(d2)])
        demo = ds.demos[ds.flat_demo[i]]
        t = int(ds.flat_time[i])
        return Projection(
            demo.id, t, demo.states[t].copy(), float(np.sqrt(d2.min())), float(demo.arc[t])
        )

    @staticmethod
    def _shell_cells(center: tuple, ring: int, d: int) -> list[tuple]:
        if ring == 0:
            return [center]
        cells = []
        rng = range(-ring, ring + 1)
        if d == 2:
            cx, cy = center
            for dx in rng:
                for dy in rng:
                    if max(abs(dx), abs(dy)) == ring:
                        cells.append((cx + dx, cy + dy))
        else:
            from itertools import product

            for off in product(rng, repeat=d):
                if max(abs(o) for o in off) == ring:
                    cells.append(tuple(c + o for c, o in zip(center, off)))
        return cells


# ---------------------------------------------------------------------------
# Demonstration file format: one trajectory per CSV file, header t,x0,x1[,...],
# one row per timestep. A dataset is a directory of such files.
# ---------------------------------------------------------------------------


def save_trajectory(traj: Trajectory, path: str) -> None:
    cols = ["t"] + [f"x{i}" for i in range(traj.d)]
    with open(path, "w", newline="\n") as f:
        f.write(",".join(cols) + "\n")
        for k, state in enumerate(traj.states):
            t = k * traj.timestep
            f.write(",".join([repr(float(t))] + [repr(float(v)) for v in state]) + "\n")


def load_trajectory(path: str) -> Trajectory:
    with open(path) as f:
        header = f.readline().strip()
        fields = header.split(",")
        if len(fields) < 2 or fields[0] != "t" or any(
            fields[i + 1] != f"x{i}" for i in range(len(fields) - 1)
        ):
            raise ValueError(f"{path}: bad demo header {header!r}, expected t,x0,x1[,...]")
        rows = []
        for ln, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(fields):
                raise ValueError(f"{path}:{ln}: expected {len(fields)} fields, got {len(parts)}")
            try:
                rows.append([float(v) for v in parts])
            except ValueError as exc:
                raise ValueError(f"{path}:{ln}: {exc}") from None
    if len(rows) < 2:
        raise ValueError(f"{path}: trajectory needs at least 2 rows")
    data = np.asarray(rows, dtype=float)
    tcol = data[:, 0]
    timestep = float(tcol[1] - tcol[0]) if tcol.shape[0] > 1 else 1.0
    if timestep <= 0:
        raise ValueError(f"{path}: time column is not increasing")
    demo_id = os.path.splitext(os.path.basename(path))[0]
    return Trajectory(states=data[:, 1:], timestep=timestep, id=demo_id)


def load_dataset(directory: str) -> DemoDataset:
    if not os.path.isdir(directory):
        raise ValueError(f"dataset path is not a directory: {directory}")
    files = sorted(
        os.path.join(directory, f) for f in os.listdir(directory) if f.endswith(".csv")
    )
    if not files:
        raise ValueError(f"no .csv demonstration files found in {directory}")
    return DemoDataset([load_trajectory(f) for f in files])
