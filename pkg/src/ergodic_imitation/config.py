"""Run configuration files: a YAML mapping with one section per component.

Every default can be overridden; unknown keys are rejected so typos fail
loudly. Relative layout/dataset paths resolve against the config file's
directory.

Schema (all keys optional):

    seed: 0
    step_budget: 1000
    tracking_only: false
    layout: nominal_maze.yaml
    dataset: demos/
    phase:   {epsilon, c_max, clock_rate}
    sde:     {n_particles, kappa0, alpha0, d_par0, d_perp0, h, A, b0,
              gamma, rho_max, sde_steps, sde_dt, reinit_each_cycle}
    planner: {horizon, exec_steps, memory_len, h_mmd, u_max, lambda_u,
              iters, step_size}
    sweep:   {sigmas: [...], trials}
"""

from __future__ import annotations

import dataclasses
import os

import yaml

from .harness import RunConfig, SweepConfig
from .particles import SdeParams
from .phase import PhaseConfig
from .planner import PlannerConfig


class ConfigError(ValueError):
    """Bad configuration input; the message names the file and field."""


def _build_section(cls, doc: dict, section: str, path: str):
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: section '{section}' must be a mapping")
    valid = {f.name for f in dataclasses.fields(cls)}
    unknown = set(doc) - valid
    if unknown:
        raise ConfigError(
            f"{path}: unknown key '{sorted(unknown)[0]}' in section '{section}' "
            f"(valid: {sorted(valid)})"
        )
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad value in section '{section}': {exc}") from None


_TOP_KEYS = {"seed", "step_budget", "tracking_only", "layout", "dataset", "phase", "sde", "planner", "sweep"}


def load_config(path: str) -> RunConfig:
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as f:
        try:
            doc = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown top-level key '{sorted(unknown)[0]}'")
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        if p is None:
            return None
        p = str(p)
        return p if os.path.isabs(p) else os.path.join(base, p)

    sweep_doc = doc.get("sweep") or {}
    if "sigmas" in sweep_doc:
        sweep_doc = dict(sweep_doc)
        sweep_doc["sigmas"] = tuple(float(s) for s in sweep_doc["sigmas"])
    cfg = RunConfig(
        phase=_build_section(PhaseConfig, doc.get("phase"), "phase", path),
        sde=_build_section(SdeParams, doc.get("sde"), "sde", path),
        planner=_build_section(PlannerConfig, doc.get("planner"), "planner", path),
        sweep=_build_section(SweepConfig, sweep_doc, "sweep", path),
        layout_path=resolve(doc.get("layout")),
        dataset_path=resolve(doc.get("dataset")),
        seed=int(doc.get("seed", 0)),
        step_budget=int(doc.get("step_budget", 1000)),
        tracking_only=bool(doc.get("tracking_only", False)),
    )
    if cfg.step_budget < 0:
        raise ConfigError(f"{path}: step_budget must be >= 0")
    return cfg


def save_config(cfg: RunConfig, path: str) -> None:
    doc = {
        "seed": cfg.seed,
        "step_budget": cfg.step_budget,
        "tracking_only": cfg.tracking_only,
        "layout": cfg.layout_path,
        "dataset": cfg.dataset_path,
        "phase": dataclasses.asdict(cfg.phase),
        "sde": dataclasses.asdict(cfg.sde),
        "planner": dataclasses.asdict(cfg.planner),
        "sweep": {"sigmas": list(cfg.sweep.sigmas), "trials": cfg.sweep.trials},
    }
    with open(path, "w", newline="\n") as f:
        yaml.safe_dump(doc, f, sort_keys=False)
