"""Attack strategies, cost models, scenarios and their feasibility checks."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from attacklab.dynamics import (
    LocalDynamics,
    check_consensus_conditions,
    GlobalSystem,
    half_step_times,
    time_grid,
)
from attacklab.graph import Graph, is_connected, laplacian


class ScenarioError(ValueError):
    pass


def _vec(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ScenarioError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


def _times(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t < 0):
        raise ScenarioError("attack strategies are defined for t >= 0")
    return t


# --- strategies -----------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    K: np.ndarray
    kind = "constant"

    def __post_init__(self):
        object.__setattr__(self, "K", _vec(self.K, "K"))

    @property
    def m(self) -> int:
        return self.K.size

    def values(self, times) -> np.ndarray:
        t = _times(times)
        return np.broadcast_to(self.K, (t.size, self.m)).copy()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "K": self.K.tolist()}


@dataclass(frozen=True)
class _Shaped:
    K: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "K", _vec(self.K, "K"))

    @property
    def m(self) -> int:
        return self.K.size

    def values(self, times) -> np.ndarray:
        t = _times(times)
        return self._shape(t)[:, None] * self.K[None, :]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "K": self.K.tolist()}


@dataclass(frozen=True)
class Cosine(_Shaped):
    kind = "cos"

    @staticmethod
    def _shape(t):
        return np.cos(t)


@dataclass(frozen=True)
class Sine(_Shaped):
    kind = "sin"

    @staticmethod
    def _shape(t):
        return np.sin(t)


@dataclass(frozen=True)
class ExpDecay(_Shaped):
    kind = "expdecay"

    @staticmethod
    def _shape(t):
        return np.exp(-t)


@dataclass(frozen=True)
class Sampled:
    """Piecewise-linear interpolation of ``values`` over a strictly increasing grid."""

    times: np.ndarray
    samples: np.ndarray
    kind = "sampled"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        v = np.asarray(self.samples, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.size < 2 or v.shape[0] != t.size:
            raise ScenarioError("sampled strategy needs >= 2 times and one value row per time")
        if np.any(np.diff(t) <= 0):
            raise ScenarioError("sampled strategy grid must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ScenarioError("sampled strategy has non-finite entries")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "samples", v)

    @property
    def m(self) -> int:
        return self.samples.shape[1]

    def values(self, times) -> np.ndarray:
        t = _times(times)
        span = 1e-12 * max(1.0, abs(self.times[-1]))
        if t.size and (t.min() < self.times[0] - span or t.max() > self.times[-1] + span):
            raise ScenarioError(
                f"time outside sampled range [{self.times[0]}, {self.times[-1]}]"
            )
        t = np.clip(t, self.times[0], self.times[-1])
        return np.column_stack([np.interp(t, self.times, self.samples[:, c]) for c in range(self.m)])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "K": [], "times": self.times.tolist(),
                "values": self.samples.tolist()}


@dataclass(frozen=True)
class GaussianNoise:
    """``K * z_k`` with ``z_k`` standard normal, held constant on ``[k step, (k+1) step)``.

    Draw ``k`` comes from a Philox generator keyed by ``seed`` with counter
    ``k``, so any time can be evaluated independently of all others.
    """

    K: np.ndarray
    seed: int
    step: float = 1e-3
    kind = "gauss"

    def __post_init__(self):
        object.__setattr__(self, "K", _vec(self.K, "K"))
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ScenarioError("gauss step must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ScenarioError("gauss seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def m(self) -> int:
        return self.K.size

    def draw(self, index: int) -> np.ndarray:
        bitgen = np.random.Philox(key=self.seed, counter=[int(index), 0, 0, 0])
        return np.random.Generator(bitgen).standard_normal(self.m)

    def values(self, times) -> np.ndarray:
        t = _times(times)
        idx = np.floor(t / self.step + 1e-9).astype(np.int64)
        uniq, inv = np.unique(idx, return_inverse=True)
        # one generator, counter rewound per index; same draws as self.draw
        bitgen = np.random.Philox(key=self.seed)
        gen = np.random.Generator(bitgen)
        state = bitgen.state
        draws = np.empty((uniq.size, self.m))
        for row, k in enumerate(uniq):
            state["state"]["counter"][:] = (int(k), 0, 0, 0)
            state["buffer_pos"] = 4
            state["has_uint32"] = 0
            bitgen.state = state
            draws[row] = gen.standard_normal(self.m)
        return draws[inv.reshape(-1)] * self.K[None, :]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "K": self.K.tolist(), "seed": self.seed, "step": self.step}


AttackStrategy = Union[Constant, Cosine, Sine, ExpDecay, Sampled, GaussianNoise]


def theta_at(strategy: AttackStrategy, t: float) -> np.ndarray:
    return strategy.values([t])[0]


def is_time_invariant(strategy: AttackStrategy) -> bool:
    return isinstance(strategy, Constant)


# --- costs ----------------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    c: float = 1.0
    kind = "uniform"

    def costs_for(self, g: Graph) -> np.ndarray:
        return np.full(g.n, float(self.c))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c": float(self.c)}


@dataclass(frozen=True)
class DegreeProportional:
    kind = "degree"

    def costs_for(self, g: Graph) -> np.ndarray:
        return g.degrees().astype(float)

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class Explicit:
    values: tuple
    kind = "explicit"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def costs_for(self, g: Graph) -> np.ndarray:
        if len(self.values) != g.n:
            raise ScenarioError(f"explicit costs have {len(self.values)} entries for {g.n} agents")
        return np.array(self.values)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "values": list(self.values)}


CostModel = Union[Uniform, DegreeProportional, Explicit]


# --- indicator vectors ----------------------------------------------------


@dataclass(frozen=True)
class IndicatorVector:
    bits: tuple

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=float)


def _check_ids(ids: Iterable[int], n: int) -> frozenset:
    out = frozenset(int(i) for i in ids)
    bad = [i for i in out if not 1 <= i <= n]
    if bad:
        raise ScenarioError(f"agent IDs {sorted(bad)} outside [1, {n}]")
    return out


def indicator(agents: Iterable[int], n: int) -> IndicatorVector:
    ids = _check_ids(agents, n)
    return IndicatorVector(tuple(1 if i in ids else 0 for i in range(1, n + 1)))


def set_from_indicator(mu: IndicatorVector) -> frozenset:
    return frozenset(i + 1 for i, b in enumerate(mu.bits) if b)


# --- scenarios ------------------------------------------------------------


@dataclass(frozen=True)
class AttackScenario:
    graph: Graph
    local: LocalDynamics
    dbar: float
    t_c: float
    strategy: AttackStrategy
    costs: CostModel
    budget: float
    u_bar: float
    g_bar: float
    quad_step: float = 1e-3

    def __post_init__(self):
        for name in ("dbar", "t_c", "budget", "u_bar", "g_bar", "quad_step"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ScenarioError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.t_c <= 0:
            raise ScenarioError("t_c must be positive")
        if self.quad_step <= 0:
            raise ScenarioError("quad_step must be positive")
        for name in ("budget", "u_bar", "g_bar"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"{name} must be non-negative")
        if self.strategy.m != self.local.m:
            raise ScenarioError(
                f"strategy dimension {self.strategy.m} does not match state dimension {self.local.m}"
            )

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return self.local.m

    def cost_vector(self) -> np.ndarray:
        return self.costs.costs_for(self.graph)

    def cost_of(self, agents: Iterable[int]) -> float:
        c = self.cost_vector()
        return float(sum(c[i - 1] for i in _check_ids(agents, self.n)))

    def system_matrix(self) -> np.ndarray:
        L = laplacian(self.graph)
        return np.kron(np.eye(self.n), self.local.A) - self.dbar * np.kron(L, self.local.B)

    def with_(self, **changes) -> "AttackScenario":
        from dataclasses import replace

        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "graph": {"type": "explicit", "n": self.n,
                      "edges": [list(e) for e in self.graph.sorted_edges()]},
            "dynamics": {"m": self.m, "A": self.local.A.reshape(-1).tolist(),
                         "B": self.local.B.reshape(-1).tolist()},
            "dbar": self.dbar,
            "t_c": self.t_c,
            "strategy": self.strategy.to_dict(),
            "costs": self.costs.to_dict(),
            "budget": self.budget,
            "u_bar": self.u_bar,
            "g_bar": self.g_bar,
            "quad_step": self.quad_step,
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple = field(default_factory=tuple)


def quadrature_grid(s: AttackScenario) -> tuple[np.ndarray, float]:
    steps, h = time_grid(s.t_c, s.quad_step)
    return half_step_times(steps, h), h


def theta_integral(s: AttackScenario) -> np.ndarray:
    """Composite Simpson integral of theta over ``[0, t_c]``, one panel per quad step."""
    times, h = quadrature_grid(s)
    th = s.strategy.values(times)
    return (h / 6.0) * (th[0:-1:2] + 4.0 * th[1::2] + th[2::2]).sum(axis=0)


def validate_scenario(s: AttackScenario) -> ValidationReport:
    v = []
    times, _ = quadrature_grid(s)
    try:
        peak = float(np.max(np.linalg.norm(s.strategy.values(times), axis=1)))
    except ScenarioError as exc:
        v.append(f"strategy: {exc}")
    else:
        if peak > s.u_bar:
            v.append(f"u_bar: peak |theta| {peak:.6g} exceeds u_bar {s.u_bar:.6g}")
        energy = float(np.linalg.norm(theta_integral(s)))
        if energy > s.g_bar:
            v.append(f"g_bar: |integral of theta| {energy:.6g} exceeds g_bar {s.g_bar:.6g}")
    connected = is_connected(s.graph)
    if not connected:
        v.append("graph: communication graph is not connected")
    dmax = s.graph.max_degree
    upper = math.inf if dmax == 0 else 1.0 / dmax
    if not 0 < s.dbar < upper:
        v.append(f"dbar: {s.dbar} outside (0, 1/d_max) = (0, {upper:.6g})")
    try:
        c = s.cost_vector()
        if np.any(c <= 0) or not np.all(np.isfinite(c)):
            bad = [i + 1 for i in np.flatnonzero(~(c > 0))]
            v.append(f"costs: agents {bad} have non-positive cost")
    except ScenarioError as exc:
        v.append(f"costs: {exc}")
    sys = GlobalSystem(M=s.system_matrix(), n=s.n, m=s.m, dbar=s.dbar)
    if not check_consensus_conditions(sys).holds:
        v.append("dynamics: consensus conditions fail for the attack-free system")
    return ValidationReport(ok=not v, violations=tuple(v))


def require_valid(s: AttackScenario) -> None:
    report = validate_scenario(s)
    if not report.ok:
        raise ScenarioError("invalid scenario: " + "; ".join(report.violations))
