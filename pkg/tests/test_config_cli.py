import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from attacklab.cli import main
from attacklab.config import ConfigError, dump_config, parse_config
from attacklab.convergence import build_influence_cache, conv_error
from attacklab.presets import X0_2D, base_scenario


def _config(**over):
    cfg = {
        "graph": {"type": "path", "n": 6},
        "dynamics": {"m": 2, "A": [-0.5, 0, 1, -1], "B": [0.1, 0.1, 0.5, 0.2]},
        "dbar": 0.25,
        "t_c": 30,
        "strategy": {"kind": "constant", "K": [0.25, 0.1]},
        "costs": {"kind": "uniform", "c": 1},
        "budget": 2,
        "u_bar": 1e6,
        "g_bar": 1e6,
        "quad_step": 0.001,
    }
    cfg.update(over)
    return cfg


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_minimal_config_matches_reference(tmp_path):
    s = parse_config(_write(tmp_path, _config()))
    assert s.fingerprint() == base_scenario().fingerprint()


def test_nested_matrices_accepted(tmp_path):
    cfg = _config(dynamics={"m": 2, "A": [[-0.5, 0], [1, -1]], "B": [[0.1, 0.1], [0.5, 0.2]]})
    assert parse_config(_write(tmp_path, cfg)).fingerprint() == base_scenario().fingerprint()


def test_missing_key_named(tmp_path):
    cfg = _config()
    del cfg["budget"]
    with pytest.raises(ConfigError, match="budget"):
        parse_config(_write(tmp_path, cfg))


@pytest.mark.parametrize("over,key", [
    (dict(dbar=0.6), "dbar"),
    (dict(extra=1), "extra"),
    (dict(budget="two"), "budget"),
    (dict(graph={"type": "star", "n": 6}), "graph.type"),
    (dict(strategy={"kind": "constant", "K": [1.0]}), "strategy.K"),
    (dict(strategy={"kind": "gauss", "K": [0.25, 0.1]}), "strategy.seed"),
    (dict(costs={"kind": "explicit", "values": [1, 1, 0, 1, 1, 1]}), "costs"),
    (dict(u_bar=0.1), "u_bar"),
    (dict(dynamics={"m": 2, "A": [1, 2, 3], "B": [0, 0, 0, 0]}), "dynamics.A"),
])
def test_bad_configs(tmp_path, over, key):
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        parse_config(_write(tmp_path, _config(**over)))


def test_invalid_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{nope")
    with pytest.raises(ConfigError):
        parse_config(p)


@pytest.mark.parametrize("over", [
    {},
    dict(strategy={"kind": "gauss", "K": [0.25, 0.1], "seed": 3, "step": 0.01}),
    dict(strategy={"kind": "sampled", "K": [], "times": [0, 40], "values": [[1, 0], [0, 1]]}),
    dict(graph={"type": "geometric", "n": 8, "width": 10.0, "radius": 8.0, "seed": 1},
         dbar=0.1, costs={"kind": "degree"}),
    dict(graph={"type": "explicit", "n": 4, "edges": [[1, 2], [2, 3], [3, 4], [4, 1]]},
         costs={"kind": "explicit", "values": [1, 2, 3, 4]}),
])
def test_canonical_round_trip(tmp_path, over):
    s = parse_config(_write(tmp_path, _config(**over)))
    dump_config(s, tmp_path / "canon.json")
    assert parse_config(tmp_path / "canon.json").fingerprint() == s.fingerprint()


# --- select ---------------------------------------------------------------


def test_select_greedy(tmp_path):
    cfg = _write(tmp_path, _config())
    out = tmp_path / "sel.csv"
    assert main(["select", "--config", str(cfg), "--algorithm", "greedy", "--out", str(out)]) == 0
    row = _rows(out)[0]
    assert float(row["f_value"]) == pytest.approx(1.0315, abs=0.005)
    assert row["set"] in ("1+2", "5+6")
    assert (tmp_path / "sel.trace.csv").exists()


def test_select_errors(tmp_path):
    cfg = _write(tmp_path, _config())
    out = str(tmp_path / "o.csv")
    assert main(["select", "--config", str(cfg), "--algorithm", "foo", "--out", out]) == 1
    assert main(["select", "--config", str(cfg), "--algorithm", "random", "--out", out]) == 1
    bad = _write(tmp_path, _config(dbar=0.6), "bad.json")
    assert main(["select", "--config", str(bad), "--algorithm", "greedy", "--out", out]) == 1
    big = _write(tmp_path, _config(graph={"type": "path", "n": 21}), "big.json")
    assert main(["select", "--config", str(big), "--algorithm", "brute", "--out", out]) == 2


def test_select_brute_beats_greedy(tmp_path):
    cfg = _write(tmp_path, _config(costs={"kind": "degree"}, budget=3))
    fs = {}
    for algo in ("brute", "greedy", "greedy-improved", "degree"):
        out = tmp_path / f"{algo}.csv"
        assert main(["select", "--config", str(cfg), "--algorithm", algo, "--out", str(out)]) == 0
        fs[algo] = float(_rows(out)[0]["f_value"])
    assert main(["select", "--config", str(cfg), "--algorithm", "random", "--seed", "4",
                 "--out", str(tmp_path / "r.csv")]) == 0
    assert all(fs["brute"] >= v - 1e-12 for v in fs.values())


def test_usage_error_exit_code(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["select", "--config", "x.json"])
    assert exc.value.code == 1


# --- verify ---------------------------------------------------------------


def test_verify_sine(tmp_path):
    cfg = _write(tmp_path, _config(strategy={"kind": "sin", "K": [0.25, 0.1]}))
    out = tmp_path / "v.csv"
    assert main(["verify", "--config", str(cfg), "--mode", "exhaustive", "--out", str(out)]) == 0
    row = _rows(out)[0]
    assert (row["monotone"], row["submodular"]) == ("true", "true")


def test_verify_gauss_witness(tmp_path):
    cfg = _write(tmp_path, _config(strategy={"kind": "gauss", "K": [0.25, 0.1], "seed": 1}))
    out = tmp_path / "v.csv"
    assert main(["verify", "--config", str(cfg), "--mode", "exhaustive", "--out", str(out)]) == 0
    row = _rows(out)[0]
    assert row["submodular"] == "false" and row["violation"].count("|") == 2


def test_verify_sampled_and_cap(tmp_path):
    cfg = _write(tmp_path, _config())
    out = str(tmp_path / "v.csv")
    assert main(["verify", "--config", str(cfg), "--mode", "sampled", "--samples", "50",
                 "--seed", "2", "--out", out]) == 0
    assert _rows(out)[0]["mode"] == "sampled"
    assert main(["verify", "--config", str(cfg), "--mode", "sampled", "--out", out]) == 1
    big = _write(tmp_path, _config(graph={"type": "path", "n": 20}), "big.json")
    assert main(["verify", "--config", str(big), "--mode", "exhaustive", "--out", out]) == 1


# --- simulate -------------------------------------------------------------


def _diff_column(path):
    return np.array([float(r["diff_norm"]) for r in _rows(path)])


def test_simulate_empty_set(tmp_path):
    cfg = _write(tmp_path, _config())
    out = tmp_path / "sim.csv"
    x0 = ",".join(str(v) for v in X0_2D)
    assert main(["simulate", "--config", str(cfg), f"--x0={x0}", "--set", "", "--out", str(out),
                 "--t-end", "2", "--step", "0.01"]) == 0
    a = np.loadtxt(out, delimiter=",", skiprows=1)
    b = np.loadtxt(tmp_path / "sim.clean.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(a - b)) <= 1e-12


def test_simulate_difference_is_convergence_error(tmp_path):
    cfg = _write(tmp_path, _config())
    target = conv_error(build_influence_cache(base_scenario()), {1, 2})
    cols = []
    for k, x0 in enumerate([X0_2D, list(np.linspace(4, -4, 12))]):
        out = tmp_path / f"sim{k}.csv"
        args = ["simulate", "--config", str(cfg), "--x0=" + ",".join(map(str, x0)),
                "--set", "1,2", "--out", str(out), "--stride", "100"]
        assert main(args) == 0
        d = _diff_column(tmp_path / f"sim{k}.diff.csv")
        assert abs(d[-1] - target) <= 2e-4
        cols.append(d)
    assert np.max(np.abs(cols[0] - cols[1])) <= 2e-4


def test_simulate_bad_dimension(tmp_path):
    cfg = _write(tmp_path, _config())
    assert main(["simulate", "--config", str(cfg), "--x0", "1,2,3", "--set", "1",
                 "--out", str(tmp_path / "s.csv")]) == 1


def test_simulate_x0_from_file(tmp_path):
    cfg = _write(tmp_path, _config())
    x0 = tmp_path / "x0.txt"
    x0.write_text(" ".join(map(str, X0_2D)))
    assert main(["simulate", "--config", str(cfg), "--x0", str(x0), "--set", "3",
                 "--out", str(tmp_path / "s.csv"), "--t-end", "0.5", "--step", "0.01"]) == 0


# --- reproduce ------------------------------------------------------------


def test_reproduce_unknown_preset(tmp_path):
    assert main(["reproduce", "--preset", "nosuch", "--out-dir", str(tmp_path)]) == 1


def test_reproduce_bilinear_preset(tmp_path):
    assert main(["reproduce", "--preset", "example1", "--out-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "example1.csv")
    assert rows[0]["quantity"] == "h(B,{3})"
    assert len(rows) == 14


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "attacklab.cli", "reproduce", "--preset",
                           "example2", "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert len(_rows(tmp_path / "example2.csv")) == 2
