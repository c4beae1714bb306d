"""JSON scenario files: strict parsing and canonical emission."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from attacklab.attack import (
    AttackScenario,
    Constant,
    Cosine,
    DegreeProportional,
    ExpDecay,
    Explicit,
    GaussianNoise,
    Sampled,
    ScenarioError,
    Sine,
    Uniform,
    validate_scenario,
)
from attacklab.dynamics import DynamicsError, LocalDynamics
from attacklab.graph import GraphError, cycle_graph, explicit_graph, path_graph, random_geometric_graph

TOP_KEYS = ("graph", "dynamics", "dbar", "t_c", "strategy", "costs", "budget", "u_bar", "g_bar",
            "quad_step")
GRAPH_KEYS = {"type", "n", "edges", "width", "radius", "seed"}
DYNAMICS_KEYS = {"m", "A", "B"}
STRATEGY_KEYS = {"kind", "K", "seed", "step", "times", "values"}
COST_KEYS = {"kind", "c", "values"}


class ConfigError(ValueError):
    """Parse or validation failure; the message names the offending key."""


def _obj(d, key: str, allowed: set, required: tuple) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(f"{key}: expected an object")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{key}.{unknown[0]}: unknown key")
    for r in required:
        if r not in d:
            raise ConfigError(f"{key}.{r}: missing key")
    return d


def _num(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite")
    return float(value)


def _int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {type(value).__name__}")
    return value


def _array(value, key: str) -> np.ndarray:
    if not isinstance(value, list):
        raise ConfigError(f"{key}: expected an array")
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: expected numbers ({exc})") from None
    if arr.dtype == object or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{key}: expected finite numbers")
    return arr


def _square(value, m: int, key: str) -> np.ndarray:
    arr = _array(value, key)
    if arr.size != m * m:
        raise ConfigError(f"{key}: expected {m * m} entries for m={m}, got {arr.size}")
    return arr.reshape(m, m)


def _graph(d):
    d = _obj(d, "graph", GRAPH_KEYS, ("type", "n"))
    n = _int(d["n"], "graph.n")
    kind = d["type"]
    try:
        if kind == "path":
            return path_graph(n)
        if kind == "cycle":
            return cycle_graph(n)
        if kind == "explicit":
            _obj(d, "graph", GRAPH_KEYS, ("edges",))
            edges = d["edges"]
            if not isinstance(edges, list) or not all(
                isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e)
                for e in edges
            ):
                raise ConfigError("graph.edges: expected a list of [i, j] integer pairs")
            return explicit_graph(n, edges)
        if kind == "geometric":
            _obj(d, "graph", GRAPH_KEYS, ("width", "radius", "seed"))
            return random_geometric_graph(
                n, _num(d["width"], "graph.width"), _num(d["radius"], "graph.radius"),
                _int(d["seed"], "graph.seed"),
            )
    except GraphError as exc:
        raise ConfigError(f"graph: {exc}") from None
    raise ConfigError(f"graph.type: unknown graph type {kind!r}")


def _strategy(d, m: int, quad_step: float):
    d = _obj(d, "strategy", STRATEGY_KEYS, ("kind", "K"))
    kind = d["kind"]
    try:
        if kind == "sampled":
            _obj(d, "strategy", STRATEGY_KEYS, ("times", "values"))
            return Sampled(_array(d["times"], "strategy.times"),
                           _array(d["values"], "strategy.values"))
        K = _array(d["K"], "strategy.K")
        if K.ndim != 1 or K.size != m:
            raise ConfigError(f"strategy.K: expected {m} entries, got {K.size}")
        simple = {"constant": Constant, "cos": Cosine, "sin": Sine, "expdecay": ExpDecay}
        if kind in simple:
            return simple[kind](K)
        if kind == "gauss":
            _obj(d, "strategy", STRATEGY_KEYS, ("seed",))
            step = _num(d["step"], "strategy.step") if "step" in d else quad_step
            return GaussianNoise(K, seed=_int(d["seed"], "strategy.seed"), step=step)
    except ScenarioError as exc:
        raise ConfigError(f"strategy: {exc}") from None
    raise ConfigError(f"strategy.kind: unknown strategy {kind!r}")


def _costs(d):
    d = _obj(d, "costs", COST_KEYS, ("kind",))
    kind = d["kind"]
    if kind == "uniform":
        _obj(d, "costs", COST_KEYS, ("c",))
        return Uniform(_num(d["c"], "costs.c"))
    if kind == "degree":
        return DegreeProportional()
    if kind == "explicit":
        _obj(d, "costs", COST_KEYS, ("values",))
        return Explicit(tuple(_array(d["values"], "costs.values").reshape(-1)))
    raise ConfigError(f"costs.kind: unknown cost model {kind!r}")


def scenario_from_dict(raw: dict, validate: bool = True) -> AttackScenario:
    raw = _obj(raw, "config", set(TOP_KEYS), TOP_KEYS)
    dyn = _obj(raw["dynamics"], "dynamics", DYNAMICS_KEYS, ("m", "A", "B"))
    m = _int(dyn["m"], "dynamics.m")
    if m < 1:
        raise ConfigError("dynamics.m: must be >= 1")
    try:
        local = LocalDynamics(_square(dyn["A"], m, "dynamics.A"), _square(dyn["B"], m, "dynamics.B"))
    except DynamicsError as exc:
        raise ConfigError(f"dynamics: {exc}") from None
    quad_step = _num(raw["quad_step"], "quad_step")
    try:
        s = AttackScenario(
            graph=_graph(raw["graph"]),
            local=local,
            dbar=_num(raw["dbar"], "dbar"),
            t_c=_num(raw["t_c"], "t_c"),
            strategy=_strategy(raw["strategy"], m, quad_step),
            costs=_costs(raw["costs"]),
            budget=_num(raw["budget"], "budget"),
            u_bar=_num(raw["u_bar"], "u_bar"),
            g_bar=_num(raw["g_bar"], "g_bar"),
            quad_step=quad_step,
        )
    except ScenarioError as exc:
        raise ConfigError(str(exc)) from None
    if validate:
        report = validate_scenario(s)
        if not report.ok:
            raise ConfigError("; ".join(report.violations))
    return s


def parse_config(path: str | Path, validate: bool = True) -> AttackScenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON: {exc}") from None
    return scenario_from_dict(raw, validate=validate)


def dump_config(s: AttackScenario, path: str | Path) -> None:
    """Write ``s`` as a canonical config (graph as explicit edges)."""
    Path(path).write_text(json.dumps(s.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
