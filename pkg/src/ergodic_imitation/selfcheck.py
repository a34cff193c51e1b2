"""Built-in invariant and oracle checks for the ``check`` CLI subcommand.

Each check is small and fast; together they cross-validate the analytic
pieces (kernel score, MMD gradient, envelope mass, phase rules, collision
resolution) against independent brute-force or finite-difference oracles.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from . import geometry, maze, particles, phase, planner


def _check_arc_table():
    rng = np.random.default_rng(11)
    pts = rng.uniform(0, 1, size=(12, 2))
    table = geometry.build_arc_table(pts)
    expected = [0.0]
    for a, b in zip(pts[:-1], pts[1:]):
        expected.append(expected[-1] + float(np.sqrt(((a - b) ** 2).sum())))
    assert np.allclose(table, expected, atol=1e-12)


def _check_retrieval_matches_scan():
    rng = np.random.default_rng(12)
    demos = [
        geometry.Trajectory(rng.uniform(0, 1, size=(40, 2)), id=f"d{i}") for i in range(4)
    ]
    ds = geometry.DemoDataset(demos)
    index = geometry.GridIndex(ds, cell=0.07)
    for _ in range(50):
        q = rng.uniform(-0.2, 1.2, size=2)
        best = None
        for demo_id, t, s in ds.flat_index:
            dist = float(np.linalg.norm(s - q))
            key = (dist, demo_id, t)
            if best is None or key < best[0]:
                best = (key, demo_id, t)
        got = geometry.nearest_in_dataset(q, ds)
        assert (got.demo_id, got.time_index) == (best[1], best[2])
        fast = index.query(q)
        assert (fast.demo_id, fast.time_index) == (got.demo_id, got.time_index)


def _check_tangent_norms():
    angles = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    circle = 0.5 + 0.3 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    traj = geometry.Trajectory(circle, id="circle")
    for i in range(len(traj)):
        t = geometry.tangent_at(traj, i)
        assert abs(np.linalg.norm(t) - 1.0) < 1e-9


def _check_phase_rules():
    cfg = phase.PhaseConfig(epsilon=2.0, c_max=10)
    st = phase.PhaseState(tau=10.0, c=3, active_demo="d")
    proj = geometry.Projection("d", 9, np.zeros(2), 0.0, 0.0)
    nxt = phase.update(st, proj, cfg)
    assert nxt.tau == 11.0 and nxt.c == 0
    st = phase.PhaseState(tau=20.0, c=0, active_demo="d")
    proj = geometry.Projection("d", 10, np.zeros(2), 0.0, 0.0)
    nxt = phase.update(st, proj, cfg)
    assert nxt.tau == 20.0 and nxt.c == 1


def _check_mmd_identities():
    rng = np.random.default_rng(13)
    S = rng.uniform(0, 1, size=(17, 2))
    assert abs(planner.mmd_sq(S, S, 0.05)) <= 1e-12
    val = planner.mmd_sq(np.zeros((1, 2)), np.array([[0.0, 0.05]]), 0.05)
    assert abs(val - (2.0 - 2.0 * np.exp(-0.5))) <= 1e-12
    for _ in range(20):
        a = rng.uniform(0, 1, size=(8, 2))
        b = rng.uniform(0, 1, size=(11, 2))
        assert planner.mmd_sq(a, b, 0.08) >= -1e-12


def _check_objective_gradient():
    rng = np.random.default_rng(14)
    cfg = planner.PlannerConfig(horizon=5, exec_steps=2, memory_len=4, h_mmd=0.07)
    target = rng.uniform(0, 1, size=(8, 2))
    mem = planner.CoverageMemory(maxlen=4)
    planner.push_memory(mem, rng.uniform(0, 1, size=(3, 2)))
    x0 = rng.uniform(0, 1, size=2)
    u = rng.uniform(-1, 1, size=(5, 2)) * cfg.u_max
    grad = planner.objective_gradient(u, x0, mem, target, cfg)
    fd = np.zeros_like(u)
    eps = 1e-6
    for i in range(u.shape[0]):
        for j in range(u.shape[1]):
            up, dn = u.copy(), u.copy()
            up[i, j] += eps
            dn[i, j] -= eps
            fd[i, j] = (
                planner.objective(up, x0, mem, target, cfg)
                - planner.objective(dn, x0, mem, target, cfg)
            ) / (2 * eps)
    rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12)
    assert rel < 1e-5


def _check_kernel_score():
    rng = np.random.default_rng(15)
    states = rng.uniform(0.3, 0.7, size=(20, 2))
    h = 0.05
    eps = 1e-6

    def logp(q):
        d2 = ((states - q) ** 2).sum(axis=1)
        return float(np.log(np.exp(-d2 / (2 * h * h)).sum()))

    for _ in range(20):
        q = states[rng.integers(0, 20)] + rng.normal(0, h, size=2)
        score = particles.kernel_score(q, states, h)
        fd = np.array(
            [
                (logp(q + eps * e) - logp(q - eps * e)) / (2 * eps)
                for e in np.eye(2)
            ]
        )
        rel = np.linalg.norm(score - fd) / max(np.linalg.norm(fd), 1e-12)
        assert rel < 1e-4


def _check_envelope():
    assert particles.envelope(0.0, 1.0, 1.0) == 0.5
    mass, _ = quad(lambda s: particles.envelope(s, 2.5, 0.3), -6.0, 6.0)
    assert abs(mass - 2.5) < 1e-6
    s = np.linspace(-1, 1, 41)
    lo = particles.deviation_bound(s, 0.0, 0.1 * (1 + 0.05 * 2), 0.15)
    hi = particles.deviation_bound(s, 0.0, 0.1 * (1 + 0.05 * 9), 0.15)
    assert (hi >= lo).all()


def _check_anisotropy():
    rng = np.random.default_rng(16)
    line = np.stack([np.linspace(0, 1, 11), np.full(11, 0.5)], axis=1)
    traj = geometry.Trajectory(line, id="line")
    incs = np.array(
        [
            particles.anisotropic_increment(np.array([0.5, 0.5]), traj, 0.002, 0.02, 0.01, rng)
            for _ in range(10_000)
        ]
    )
    ratio = incs[:, 1].var() / incs[:, 0].var()
    assert 7.0 < ratio < 13.0
    assert abs(incs.mean(axis=0)).max() < 4 * incs.std(axis=0).max() / np.sqrt(len(incs))


def _check_maze_penetration():
    layout = maze.nominal_layout()
    rects = layout.solid_rects()
    rng = np.random.default_rng(17)
    env = maze.EnvState(position=layout.start.copy())
    for _ in range(10_000):
        u = rng.uniform(-0.02, 0.02, size=2)
        env = maze.EnvState(position=env.position, step_count=0)
        env = maze.step(env, u, layout, step_budget=10**9)
        p = env.position
        assert ((0 <= p) & (p <= 1)).all()
        for r in rects:
            assert not r.contains(p, tol=maze.CONTACT_TOL)


def _check_expert_replay():
    layout = maze.nominal_layout()
    demo = maze.scripted_expert(layout, speed=0.01)
    env = maze.EnvState(position=demo.states[0].copy())
    for k in range(1, len(demo)):
        u = demo.states[k] - env.position
        env = maze.step(env, u, layout, step_budget=10**9)
        if env.done:
            break
        # no sliding: every commanded state is reached exactly
        assert np.linalg.norm(env.position - demo.states[k]) < 1e-9
    assert env.success and maze.at_goal(env.position, layout)


def _check_plan_contract():
    rng = np.random.default_rng(18)
    cfg = planner.PlannerConfig(horizon=10, exec_steps=3, iters=40)
    target = rng.uniform(0.4, 0.6, size=(12, 2))
    mem = planner.CoverageMemory(maxlen=cfg.memory_len)
    result = planner.plan(np.array([0.5, 0.5]), target, mem, cfg)
    assert (np.linalg.norm(result.controls, axis=1) <= cfg.u_max + 1e-12).all()
    zero_obj = planner.objective(np.zeros((10, 2)), np.array([0.5, 0.5]), mem, target, cfg)
    assert result.objective_value <= zero_obj + 1e-15


CHECKS = [
    ("arc table vs segment-sum oracle", _check_arc_table),
    ("retrieval vs exhaustive scan (and grid index)", _check_retrieval_matches_scan),
    ("tangent unit norms", _check_tangent_norms),
    ("phase branch rules", _check_phase_rules),
    ("mmd identities", _check_mmd_identities),
    ("objective gradient vs finite differences", _check_objective_gradient),
    ("kernel score vs finite differences", _check_kernel_score),
    ("envelope analytics", _check_envelope),
    ("anisotropic diffusion statistics", _check_anisotropy),
    ("maze non-penetration", _check_maze_penetration),
    ("expert replay reaches goal", _check_expert_replay),
    ("planner descent and control bound", _check_plan_contract),
]


def run_checks(verbose: bool = True) -> bool:
    ok = True
    for name, fn in CHECKS:
        try:
            fn()
            status = "PASS"
        except AssertionError:
            status = "FAIL"
            ok = False
        except Exception as exc:  # noqa: BLE001 - report, keep checking
            status = f"FAIL ({type(exc).__name__}: {exc})"
            ok = False
        if verbose:
            print(f"[{status.split()[0]:4s}] {name}" + ("" if status.startswith("PASS") else f" -> {status}"))
    return ok
