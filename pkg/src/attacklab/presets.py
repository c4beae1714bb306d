"""Named experiment presets that write CSV tables into an output directory."""
from __future__ import annotations

import csv
import time
from pathlib import Path

from attacklab.attack import (
    AttackScenario,
    Constant,
    Cosine,
    DegreeProportional,
    ExpDecay,
    Explicit,
    GaussianNoise,
    Sine,
    Uniform,
    require_valid,
)
from attacklab.convergence import build_influence_cache
from attacklab.dynamics import LocalDynamics
from attacklab.graph import (
    connectivity_radius,
    cycle_graph,
    explicit_graph,
    path_graph,
    random_geometric_graph,
    write_graph,
)
from attacklab.selection import (
    brute_force,
    degree_baseline,
    fdi_assa,
    format_set,
    ifdi_assa,
    random_baseline,
)
from attacklab.submodularity import (
    check_monotone_condition,
    check_submodular_condition,
    gamma_ratio,
    pairwise_h,
    verify,
)

A2 = [[-0.5, 0.0], [1.0, -1.0]]
B2 = [[0.1, 0.1], [0.5, 0.2]]
K2 = [0.25, 0.1]
A3 = [[-0.4037, -0.2052, 0.0], [-0.684, -0.8825, 0.0], [-0.1175, -0.2875, -0.3]]
B3 = [[0.02394, 0.0, 0.0], [0.0, 0.01371, 0.0], [0.0, 0.0, -0.00146]]
K3 = [0.25, 0.1, 0.2]
X0_2D = [-7, -3, -2, -2, 0, 1, 1, -1, 2, 3, 6, 2]
FIXED_EDGES = [(1, 2), (2, 3), (2, 4), (3, 5), (4, 5), (5, 6)]
DBAR = 0.25
T_C = 30.0
SLACK = 1e6  # attack magnitude/energy bounds that never bind
GAUSS_SEED = 1
RANDOM_SEED = 0
GEO_N, GEO_WIDTH, GEO_RADIUS, GEO_SEED = 50, 100.0, 15.0, 42
BUDGETS = (1, 2, 3, 4, 5, 6)
TIMING_REPEATS = 20

PRESETS = ("table1", "example1", "example2", "fig3", "fig4", "fig5", "fig7")


def local_2d() -> LocalDynamics:
    return LocalDynamics(A2, B2)


def strategy(kind: str, K=K2, step: float = 1e-3):
    table = {"constant": Constant, "cos": Cosine, "sin": Sine, "expdecay": ExpDecay}
    if kind == "gauss":
        return GaussianNoise(K, seed=GAUSS_SEED, step=step)
    return table[kind](K)


def fixed_graph():
    return explicit_graph(6, FIXED_EDGES)


def base_scenario(kind: str = "constant", t_c: float = T_C, graph=None, costs=None,
                  budget: float = 2.0) -> AttackScenario:
    """The six-agent planar setup: path graph, unit costs, budget 2."""
    return AttackScenario(
        graph=graph or path_graph(6),
        local=local_2d(),
        dbar=DBAR,
        t_c=t_c,
        strategy=strategy(kind),
        costs=costs or Uniform(1.0),
        budget=budget,
        u_bar=SLACK,
        g_bar=SLACK,
    )


def geometric_scenario(costs=None, budget: float = 6.0) -> AttackScenario:
    """50 agents with 3-D dynamics on a seeded geometric layout.

    The nominal radius leaves this layout disconnected, so it is raised to
    the smallest connecting radius; the coupling weight is set to half its
    admissible maximum.
    """
    g = random_geometric_graph(GEO_N, GEO_WIDTH, geometric_radius(), GEO_SEED)
    return AttackScenario(
        graph=g,
        local=LocalDynamics(A3, B3),
        dbar=0.5 / g.max_degree,
        t_c=T_C,
        strategy=Constant(K3),
        costs=costs or Uniform(1.0),
        budget=budget,
        u_bar=SLACK,
        g_bar=SLACK,
    )


def geometric_radius() -> float:
    return max(GEO_RADIUS, connectivity_radius(GEO_N, GEO_WIDTH, GEO_SEED) * (1 + 1e-9))


def _g(x) -> str:
    return f"{x:.17g}"


def _write(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _cost_models():
    return (("uniform", Uniform(1.0)), ("degree", DegreeProportional()))


# --- presets --------------------------------------------------------------


def run_table1(out: Path) -> list[Path]:
    rows = []
    for kind in ("constant", "cos", "sin", "expdecay", "gauss"):
        for t_c in (30.0, 60.0):
            s = base_scenario(kind, t_c)
            cache = build_influence_cache(s)
            r = fdi_assa(s, cache)
            rep = verify(s, cache=cache)
            rows.append([kind, _g(t_c), format_set(r.set), _g(r.f_value),
                         str(rep.monotone).lower(), str(rep.submodular).lower(),
                         rep.violation_text()])
    header = ["strategy", "t_c", "set", "f_value", "monotone", "submodular", "violation"]
    return [_write(out / "table1.csv", header, rows)]


def example1_values(s: AttackScenario | None = None) -> list[tuple[str, float]]:
    s = s or base_scenario("constant")
    A, B = {1}, {1, 3, 4, 5}
    cache = build_influence_cache(s)
    vals = [
        ("h(B,{3})", pairwise_h(s, B, {3})),
        ("h(B,{4})", pairwise_h(s, B, {4})),
        ("h(B,{5})", pairwise_h(s, B, {5})),
        ("h(A,{2})", pairwise_h(s, A, {2})),
        ("h(B,{2})", pairwise_h(s, B, {2})),
        ("h({2},{2})", pairwise_h(s, {2}, {2})),
        ("h(A,{6})", pairwise_h(s, A, {6})),
        ("h(B,{6})", pairwise_h(s, B, {6})),
        ("h({6},{6})", pairwise_h(s, {6}, {6})),
        ("gamma(j=2)", gamma_ratio(s, A, B, 2, cache=cache)),
        ("gamma(j=6)", gamma_ratio(s, A, B, 6, cache=cache)),
        ("monotone_condition", float(check_monotone_condition(s, A, B))),
        ("submodular_condition(j=2)", float(check_submodular_condition(s, A, B, 2, cache=cache))),
        ("submodular_condition(j=6)", float(check_submodular_condition(s, A, B, 6, cache=cache))),
    ]
    return vals


def run_example1(out: Path) -> list[Path]:
    rows = [[name, _g(v)] for name, v in example1_values()]
    return [_write(out / "example1.csv", ["quantity", "value"], rows)]


def example2_scenario() -> AttackScenario:
    return base_scenario("constant", costs=Explicit((1, 2, 2, 2, 2, 1)), budget=6.0)


def run_example2(out: Path) -> list[Path]:
    s = example2_scenario()
    cache = build_influence_cache(s)
    rows = []
    for algo in (fdi_assa, ifdi_assa):
        r = algo(s, cache)
        rows.append([r.algorithm, _g(s.budget), _g(r.cost), format_set(r.set), _g(r.f_value),
                     _g(r.bound), "" if r.discarded is None else r.discarded, r.evaluations])
    header = ["algorithm", "omega", "cost", "set", "f_value", "bound", "discarded", "evaluations"]
    return [_write(out / "example2.csv", header, rows)]


def _sweep_rows(s: AttackScenario, label: list, with_brute: bool):
    cache = build_influence_cache(s)
    rows = []
    for omega in BUDGETS:
        sw = s.with_(budget=float(omega))
        results = [fdi_assa(sw, cache)]
        if with_brute:
            results.append(brute_force(sw, cache))
        results += [random_baseline(sw, RANDOM_SEED, cache), degree_baseline(sw, cache)]
        for r in results:
            rows.append(label + [r.algorithm, omega, _g(r.cost), format_set(r.set),
                                 _g(r.f_value), _g(r.bound)])
    return rows


SWEEP_HEADER = ["algorithm", "omega", "cost", "set", "f_value", "bound"]


def run_fig3(out: Path) -> list[Path]:
    rows = []
    for kind in ("constant", "sin"):
        for cname, cm in _cost_models():
            rows += _sweep_rows(base_scenario(kind, costs=cm), [kind, cname], with_brute=True)
    return [_write(out / "fig3.csv", ["strategy", "costs"] + SWEEP_HEADER, rows)]


def fig4_graphs():
    return (("path", path_graph(6)), ("cycle", cycle_graph(6)), ("fixed", fixed_graph()))


def run_fig4(out: Path) -> list[Path]:
    rows, vrows = [], []
    for gname, g in fig4_graphs():
        for cname, cm in _cost_models():
            s = base_scenario("constant", graph=g, costs=cm)
            cache = build_influence_cache(s)
            for omega in BUDGETS:
                r = fdi_assa(s.with_(budget=float(omega)), cache)
                rows.append([gname, cname, omega, _g(r.cost), format_set(r.set), _g(r.f_value)])
            rep = verify(s, cache=cache)
            vrows.append([gname, cname, str(rep.monotone).lower(), str(rep.submodular).lower(),
                          rep.violation_text()])
    return [
        _write(out / "fig4.csv", ["graph", "costs", "omega", "cost", "set", "f_value"], rows),
        _write(out / "fig4_verify.csv",
               ["graph", "costs", "monotone", "submodular", "violation"], vrows),
    ]


def run_fig5(out: Path) -> list[Path]:
    rows = []
    for cname, cm in _cost_models():
        s = geometric_scenario(costs=cm)
        rows += _sweep_rows(s, [cname], with_brute=False)
    s = geometric_scenario()
    graph_path = out / "fig5_graph.txt"
    write_graph(s.graph, graph_path)
    meta = [["n", GEO_N], ["width", _g(GEO_WIDTH)], ["seed", GEO_SEED],
            ["radius", _g(geometric_radius())], ["dbar", _g(s.dbar)],
            ["max_degree", s.graph.max_degree]]
    return [
        _write(out / "fig5.csv", ["costs"] + SWEEP_HEADER, rows),
        _write(out / "fig5_meta.csv", ["parameter", "value"], meta),
        graph_path,
    ]


def time_selection(algo, s, cache, repeats: int = TIMING_REPEATS):
    """Best-of-``repeats`` wall time (seconds) and the last result."""
    best, result = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = algo(s, cache)
        best = min(best, time.perf_counter() - t0)
    return best, result


def run_fig7(out: Path) -> list[Path]:
    rows = []
    for cname, cm in _cost_models():
        s = geometric_scenario(costs=cm)
        cache = build_influence_cache(s)
        for omega in BUDGETS:
            sw = s.with_(budget=float(omega))
            for algo in (fdi_assa, ifdi_assa):
                wall, r = time_selection(algo, sw, cache)
                rows.append([cname, omega, r.algorithm, _g(wall * 1e3), r.evaluations,
                             format_set(r.set), _g(r.f_value)])
    header = ["costs", "omega", "algorithm", "wall_ms", "evaluations", "set", "f_value"]
    return [_write(out / "fig7.csv", header, rows)]


RUNNERS = {
    "table1": run_table1,
    "example1": run_example1,
    "example2": run_example2,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "fig5": run_fig5,
    "fig7": run_fig7,
}


def all_scenarios() -> list[AttackScenario]:
    """Every base scenario the presets resolve to (before budget sweeps)."""
    out = [base_scenario(k, t) for k in ("constant", "cos", "sin", "expdecay", "gauss")
           for t in (30.0, 60.0)]
    out.append(example2_scenario())
    for _, cm in _cost_models():
        out += [base_scenario(k, costs=cm) for k in ("constant", "sin")]
        out += [base_scenario("constant", graph=g, costs=cm) for _, g in fig4_graphs()]
        out.append(geometric_scenario(costs=cm))
    return out


def reproduce(name: str, out_dir: str | Path) -> list[Path]:
    if name != "all" and name not in RUNNERS:
        raise KeyError(name)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = PRESETS if name == "all" else (name,)
    written = []
    for n in names:
        written += RUNNERS[n](out)
    return written


def validate_presets() -> None:
    for s in all_scenarios():
        require_valid(s)
