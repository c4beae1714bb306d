"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeats 5] [--n 12]

Both backends are fed identical inputs; results are compared before
timings are reported so a speedup never hides a wrong answer.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from attacklab.convergence import build_influence_cache, spectral_form
from attacklab.graph import path_graph
from attacklab.kernels import available_backends
from attacklab.presets import base_scenario
from attacklab.submodularity import TOL_COND, TOL_DEF, _condition_tables


def best_of(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads(n: int):
    s = base_scenario("constant", graph=path_graph(n))
    cache = build_influence_cache(s)
    form = spectral_form(s)
    Fc, q, hj, hdiag = _condition_tables(form, n)
    rng = np.random.default_rng(0)
    M = s.system_matrix()
    X0 = np.zeros((M.shape[0], n))
    E = rng.standard_normal((s.m, M.shape[0], n))
    theta = rng.standard_normal((2 * 3000 + 1, s.m))

    def rk4(k):
        return lambda: k.rk4_linear(M, X0, E, theta, 1e-2)

    def norms(k):
        return lambda: k.subset_norms(cache.g.T)

    def scan(k):
        F = k.subset_norms(cache.g.T)
        return lambda: k.scan_chains(F, n, TOL_DEF, Fc=Fc, q=q, hj=hj, hdiag=hdiag, tol_cond=TOL_COND)

    return {"rk4_linear": rk4, "subset_norms": norms, "scan_chains": scan}


def same(a, b) -> bool:
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(same(a[k], b[k]) for k in a)
    if isinstance(a, (tuple, list)):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.allclose(a, b, rtol=1e-10, atol=1e-12)
    return a == b


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--n", type=int, default=12, help="agents on the path graph (<= 14)")
    args = p.parse_args(argv)
    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the python backend is available")
    print(f"{'kernel':<14}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for name, make in workloads(args.n).items():
        times, outs = {}, {}
        for b, k in backends.items():
            times[b], outs[b] = best_of(make(k), args.repeats)
        if "cython" in outs and not same(outs["python"], outs["cython"]):
            print(f"{name}: backends disagree")
            return 1
        row = f"{name:<14}" + "".join(f"{times[b] * 1e3:>12.2f}ms" for b in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
