"""JSON scenario files and design reports.

A scenario bundles the model, the partition schedule, simulation settings
and design options.  Matrices are nested arrays of finite numbers; vectors
are flat arrays.  See README.md for the full schema.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .graph import SignedDigraph
from .partition import PartitionSchedule, PartitionTransform
from .plant import Exosystem, FollowerModel, MasModel
from .sim import SimConfig
from .synth import ControllerDesign, DesignOptions, FollowerDesign, Strategy

SCHEMA_VERSION = 1
BUILTINS = (
    "remark4",
    "remark8_phi_not_theta",
    "remark8_theta_not_phi",
    "remark8_intersection",
    "experiment1",
    "example2",
    "example3",
)
_FOLLOWER_KEYS = ("a", "b", "c", "d", "e", "g", "f")


class ScenarioError(ValueError):
    """The scenario file is unreadable or does not follow the schema."""


@dataclass(eq=False)
class Scenario:
    name: str
    model: MasModel
    schedule: PartitionSchedule
    sim: SimConfig
    strategy: Strategy = Strategy.PARTITION_INDEPENDENT
    options: DesignOptions = field(default_factory=DesignOptions)
    bench: dict = field(default_factory=dict)
    description: str = ""


def _finite(value, where):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{where}: entries must be finite numbers")
    return arr


def _matrix(value, where) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ScenarioError(f"{where}: expected a nested array (list of rows)")
    if len({len(r) for r in value}) != 1:
        raise ScenarioError(f"{where}: rows have different lengths")
    return _finite(value, where)


def _vector(value, where) -> np.ndarray:
    if not isinstance(value, list) or any(isinstance(v, list) for v in value):
        raise ScenarioError(f"{where}: expected a flat array")
    return _finite(value, where)


def _require(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ScenarioError(f"{where}: missing '{key}'")
    return obj[key]


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    if data.get("version") != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported scenario version {data.get('version')!r}")
    try:
        exo = Exosystem(_matrix(_require(_require(data, "exosystem", "scenario"), "a0", "exosystem"),
                                "exosystem.a0"))
        followers = []
        for i, fd in enumerate(_require(data, "followers", "scenario")):
            where = f"followers[{i}]"
            followers.append(FollowerModel(**{k: _matrix(_require(fd, k, where), f"{where}.{k}")
                                              for k in _FOLLOWER_KEYS}))
        gd = _require(data, "graph", "scenario")
        graph = SignedDigraph(_matrix(_require(gd, "adjacency", "graph"), "graph.adjacency"),
                              _vector(_require(gd, "pinning", "graph"), "graph.pinning"))
        sim = dict(_require(data, "sim", "scenario"))
        segments = []
        for j, seg in enumerate(_require(data, "schedule", "scenario")):
            terms = _vector(_require(seg, "terms", f"schedule[{j}]"), f"schedule[{j}].terms")
            segments.append((float(_require(seg, "t_start", f"schedule[{j}]")),
                             PartitionTransform(tuple(terms.tolist()))))
        horizon = float(_require(sim, "horizon", "sim"))
        schedule = PartitionSchedule(tuple(segments), horizon)
        cfg = SimConfig(
            dt=float(sim.get("dt", 1e-3)),
            horizon=horizon,
            x0=[_vector(x, f"sim.x0[{i}]") for i, x in enumerate(sim["x0"])] if "x0" in sim else None,
            eta0=[_vector(x, f"sim.eta0[{i}]") for i, x in enumerate(sim["eta0"])] if "eta0" in sim else None,
            v0=_vector(sim["v0"], "sim.v0") if "v0" in sim else None,
            tail_fraction=float(sim.get("tail_fraction", 0.1)),
            stride=int(sim.get("stride", 10)),
        )
        dd = data.get("design", {})
        opts = DesignOptions(
            mu_min=float(dd.get("mu_min", 1.0)),
            q_scale=float(dd.get("q_scale", 1.0)),
            r_scale=float(dd.get("r_scale", 1.0)),
        )
        strategy = Strategy(dd.get("strategy", "two"))
    except ScenarioError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ScenarioError(str(exc)) from exc
    model = MasModel(exo, tuple(followers), graph)
    if schedule.n != model.n_followers:
        raise ScenarioError(f"schedule has {schedule.n} terms for {model.n_followers} followers")
    return Scenario(
        name=str(data.get("name", "")),
        model=model,
        schedule=schedule,
        sim=cfg,
        strategy=strategy,
        options=opts,
        bench=dict(data.get("bench", {})),
        description=str(data.get("description", "")),
    )


def _mat(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def scenario_to_dict(sc: Scenario) -> dict:
    m = sc.model
    sim: dict = {"dt": sc.sim.dt, "horizon": sc.sim.horizon}
    if sc.sim.x0 is not None:
        sim["x0"] = [np.asarray(x, dtype=float).ravel().tolist() for x in sc.sim.x0]
    if sc.sim.eta0 is not None:
        sim["eta0"] = [np.asarray(x, dtype=float).ravel().tolist() for x in sc.sim.eta0]
    if sc.sim.v0 is not None:
        sim["v0"] = np.asarray(sc.sim.v0, dtype=float).ravel().tolist()
    sim["tail_fraction"] = sc.sim.tail_fraction
    sim["stride"] = sc.sim.stride
    out = {
        "version": SCHEMA_VERSION,
        "name": sc.name,
        "description": sc.description,
        "exosystem": {"a0": _mat(m.exosystem.a0)},
        "followers": [{k: _mat(getattr(fm, k)) for k in _FOLLOWER_KEYS} for fm in m.followers],
        "graph": {"adjacency": _mat(m.graph.adjacency), "pinning": m.graph.pinning.tolist()},
        "schedule": [{"t_start": t, "terms": list(p.terms)} for t, p in sc.schedule.segments],
        "sim": sim,
        "design": {
            "strategy": sc.strategy.value,
            "mu_min": sc.options.mu_min,
            "q_scale": sc.options.q_scale,
            "r_scale": sc.options.r_scale,
        },
    }
    if sc.bench:
        out["bench"] = dict(sc.bench)
    return out


def builtin_path(name: str):
    stem = name[:-5] if name.endswith(".json") else name
    if stem not in BUILTINS:
        raise ScenarioError(f"unknown built-in scenario {name!r}")
    return resources.files("morp").joinpath("scenarios", f"{stem}.json")


def load_scenario(source: str | Path) -> Scenario:
    """Load a scenario from a file path or a built-in name such as ``experiment1``."""
    path = Path(source)
    try:
        if path.exists():
            text = path.read_text(encoding="utf-8")
        else:
            text = builtin_path(str(source)).read_text(encoding="utf-8")
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON: {exc}") from exc
    except OSError as exc:
        raise ScenarioError(str(exc)) from exc
    return scenario_from_dict(data)


_NUMBER_ROW = re.compile(r"\[\s*(-?[0-9.eE+-]+(?:,\s*-?[0-9.eE+-]+)*)\s*\]")


def dump_scenario(sc: Scenario, path) -> None:
    """Write ``sc`` as indented JSON with each numeric row on one line."""
    text = json.dumps(scenario_to_dict(sc), indent=1)
    text = _NUMBER_ROW.sub(lambda m: "[" + ", ".join(v.strip() for v in m.group(1).split(",")) + "]", text)
    Path(path).write_text(text + "\n", encoding="utf-8")


# -- design reports ----------------------------------------------------------

def _opt_mat(a):
    return None if a is None else _mat(a)


def design_to_dict(d: ControllerDesign) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "strategy": d.strategy.value,
        "mu": d.mu,
        "mu_bound": d.mu_bound,
        "terms": list(d.terms.terms),
        "solver_calls": dict(d.solver_calls),
        "followers": [
            {
                "k1": _mat(f.k1),
                "k2": _mat(f.k2),
                "x": _mat(f.x),
                "u": _mat(f.u),
                "y": _opt_mat(f.y),
                "x_tilde": _mat(f.x_tilde),
                "u_tilde": _mat(f.u_tilde),
                "residual": f.residual,
            }
            for f in d.followers
        ],
    }


def design_from_dict(data: dict) -> ControllerDesign:
    try:
        followers = []
        for fd in data["followers"]:
            arr = {k: np.array(fd[k], dtype=float) for k in ("k1", "k2", "x", "u", "x_tilde", "u_tilde")}
            y = None if fd.get("y") is None else np.array(fd["y"], dtype=float)
            followers.append(FollowerDesign(y=y, residual=float(fd["residual"]), **arr))
        mu = float(data["mu"])
        if not math.isfinite(mu):
            raise ScenarioError("design mu must be finite")
        return ControllerDesign(
            strategy=Strategy(data["strategy"]),
            mu=mu,
            mu_bound=float(data["mu_bound"]),
            terms=PartitionTransform(tuple(data["terms"])),
            followers=tuple(followers),
            solver_calls=dict(data.get("solver_calls", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed design report: {exc}") from exc


def design_compatible(d: ControllerDesign, model: MasModel) -> list[str]:
    """Shape problems between a stored design and a model; empty if compatible."""
    if len(d.followers) != model.n_followers:
        return [f"design has {len(d.followers)} followers, model has {model.n_followers}"]
    n0 = model.exosystem.n0
    out = []
    for i, (fd, fm) in enumerate(zip(d.followers, model.followers)):
        if fd.k1.shape != (fm.m, fm.n):
            out.append(f"follower {i}: k1 shape {fd.k1.shape}, expected {(fm.m, fm.n)}")
        if fd.k2.shape != (fm.m, n0):
            out.append(f"follower {i}: k2 shape {fd.k2.shape}, expected {(fm.m, n0)}")
        if fd.x.shape != (fm.n, n0) or fd.u.shape != (fm.m, n0):
            out.append(f"follower {i}: regulator solution has wrong shape")
    return out
