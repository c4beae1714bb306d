"""Command-line entry point: ``attacklab {select,verify,simulate,reproduce}``."""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from attacklab import presets
from attacklab.attack import ScenarioError, indicator
from attacklab.config import ConfigError, parse_config
from attacklab.dynamics import (
    DynamicsError,
    GlobalSystem,
    simulate_trajectory,
    write_trajectory_csv,
)
from attacklab.selection import (
    ALGORITHMS,
    SelectionError,
    random_baseline,
    selection_row,
    write_selection_csv,
    write_trace_csv,
)
from attacklab.submodularity import VerificationError, verify, write_verification_csv

EXIT_OK, EXIT_INPUT, EXIT_ALGO = 0, 1, 2
ALGORITHM_NAMES = ("greedy", "greedy-improved", "brute", "random", "degree")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 like every other input error."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fail(msg: str, code: int = EXIT_INPUT) -> int:
    print(f"attacklab: {msg}", file=sys.stderr)
    return code


def sibling(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}.{suffix}.csv")


def cmd_select(args) -> int:
    if args.algorithm not in ALGORITHM_NAMES:
        return _fail(f"unknown algorithm {args.algorithm!r}; choose from {', '.join(ALGORITHM_NAMES)}")
    if args.algorithm == "random" and args.seed is None:
        return _fail("the random baseline needs --seed")
    try:
        s = parse_config(args.config)
    except ConfigError as exc:
        return _fail(str(exc))
    try:
        if args.algorithm == "random":
            r = random_baseline(s, args.seed)
        else:
            r = ALGORITHMS[args.algorithm](s)
    except (SelectionError, ScenarioError, ValueError) as exc:
        return _fail(str(exc), EXIT_ALGO)
    out = Path(args.out)
    write_selection_csv([selection_row(r, s.budget)], out)
    write_trace_csv(r, sibling(out, "trace"))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        s = parse_config(args.config)
    except ConfigError as exc:
        return _fail(str(exc))
    try:
        report = verify(s, mode=args.mode, samples=args.samples, seed=args.seed)
    except VerificationError as exc:
        return _fail(str(exc))
    write_verification_csv([report], args.out)
    return EXIT_OK


def parse_vector(text: str) -> np.ndarray:
    """Inline ``"1,2,3"`` / ``"1 2 3"`` or a path to a file holding the numbers."""
    p = Path(text)
    if p.is_file():
        text = p.read_text(encoding="utf-8")
    tokens = text.replace(",", " ").replace("[", " ").replace("]", " ").split()
    return np.array([float(t) for t in tokens])


def parse_agent_list(text: str) -> list[int]:
    tokens = text.replace("+", ",").replace(" ", ",").split(",")
    return [int(t) for t in tokens if t.strip()]


def cmd_simulate(args) -> int:
    try:
        s = parse_config(args.config)
    except ConfigError as exc:
        return _fail(str(exc))
    try:
        x0 = parse_vector(args.x0)
        agents = parse_agent_list(args.set)
        mu = indicator(agents, s.n).as_array()
    except (ValueError, OSError) as exc:
        return _fail(f"bad --x0 or --set: {exc}")
    if x0.size != s.n * s.m:
        return _fail(f"--x0 has {x0.size} entries, expected m*n = {s.n * s.m}")
    sys_ = GlobalSystem(M=s.system_matrix(), n=s.n, m=s.m, dbar=s.dbar)
    t_end = args.t_end if args.t_end is not None else s.t_c
    try:
        clean = simulate_trajectory(sys_, x0, None, t_end, args.step)
        attacked = simulate_trajectory(sys_, x0, (mu, s.strategy), t_end, args.step)
    except (DynamicsError, ScenarioError) as exc:
        return _fail(str(exc))
    out = Path(args.out)
    write_trajectory_csv(attacked, s.m, out, args.stride)
    write_trajectory_csv(clean, s.m, sibling(out, "clean"), args.stride)
    diff = np.linalg.norm(attacked.states - clean.states, axis=1)
    with open(sibling(out, "diff"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "diff_norm"])
        for k in range(0, len(diff), args.stride):
            w.writerow([f"{attacked.times[k]:.17g}", f"{diff[k]:.17g}"])
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.preset != "all" and args.preset not in presets.RUNNERS:
        return _fail(f"unknown preset {args.preset!r}; choose from {', '.join(presets.PRESETS)} or all")
    for path in presets.reproduce(args.preset, args.out_dir):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="attacklab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("select", help="choose an attack set under the budget")
    sp.add_argument("--config", required=True)
    sp.add_argument("--algorithm", required=True, help=" | ".join(ALGORITHM_NAMES))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_select)

    vp = sub.add_parser("verify", help="check monotonicity and diminishing returns")
    vp.add_argument("--config", required=True)
    vp.add_argument("--mode", required=True, choices=("exhaustive", "sampled"))
    vp.add_argument("--samples", type=int)
    vp.add_argument("--seed", type=int)
    vp.add_argument("--out", required=True)
    vp.set_defaults(func=cmd_verify)

    mp = sub.add_parser("simulate", help="attacked and clean trajectories")
    mp.add_argument("--config", required=True)
    mp.add_argument("--x0", required=True, help="comma-separated values or a file")
    mp.add_argument("--set", required=True, help="agent IDs, e.g. 1,2 (empty for none)")
    mp.add_argument("--out", required=True)
    mp.add_argument("--t-end", type=float)
    mp.add_argument("--step", type=float, default=1e-3)
    mp.add_argument("--stride", type=int, default=1)
    mp.set_defaults(func=cmd_simulate)

    rp = sub.add_parser("reproduce", help="run a named experiment preset")
    rp.add_argument("--preset", required=True)
    rp.add_argument("--out-dir", required=True)
    rp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
