import itertools

import numpy as np
import pytest

from attacklab.attack import GaussianNoise
from attacklab.convergence import InfluenceCache, closed_form_error, conv_error
from attacklab.graph import cycle_graph, path_graph
from attacklab.presets import base_scenario, fixed_graph
from attacklab.submodularity import (
    VerificationError,
    check_monotone_condition,
    check_submodular_condition,
    gamma_ratio,
    marginal_gain,
    pairwise_h,
    verify,
    write_verification_csv,
)

A1, B1 = {1}, {1, 3, 4, 5}


def test_h_of_empty_set(s2):
    assert pairwise_h(s2, set(), {1, 2}) == 0.0
    assert pairwise_h(s2, {3}, set()) == 0.0


def test_h_diagonal_is_squared_error(s2):
    for r in range(1, 5):
        for c in itertools.combinations(range(1, 7), r):
            assert abs(pairwise_h(s2, c, c) - closed_form_error(s2, c) ** 2) <= 1e-10


def test_h_root_matches_cache(s2, s2_cache):
    for r in range(1, 5):
        for c in itertools.combinations(range(1, 7), r):
            ref = conv_error(s2_cache, c)
            assert abs(np.sqrt(pairwise_h(s2, c, c)) - ref) <= 1e-8 * ref


def test_h_is_symmetric_and_bilinear(s2):
    assert pairwise_h(s2, {1, 2}, {4}) == pytest.approx(pairwise_h(s2, {4}, {1, 2}), abs=1e-14)
    split = pairwise_h(s2, {1}, {4}) + pairwise_h(s2, {2}, {4})
    assert pairwise_h(s2, {1, 2}, {4}) == pytest.approx(split, abs=1e-14)


def test_h_time_variant_rejected(sine30):
    with pytest.raises(ValueError):
        pairwise_h(sine30, {1}, {2})


def test_gamma_equal_sets_is_one(s2, s2_cache):
    assert gamma_ratio(s2, A1, A1, 2, cache=s2_cache) == 1.0


def test_gamma_in_unit_interval(s2, s2_cache):
    for j in (2, 6):
        assert 0.0 <= gamma_ratio(s2, A1, B1, j, cache=s2_cache) <= 1.0


def test_gamma_preconditions(s2, s2_cache):
    with pytest.raises(VerificationError):
        gamma_ratio(s2, {2}, B1, 6, cache=s2_cache)
    with pytest.raises(VerificationError):
        gamma_ratio(s2, A1, B1, 3, cache=s2_cache)
    zero = InfluenceCache(g=np.zeros((12, 6)), fingerprint="")
    with pytest.raises(VerificationError):
        gamma_ratio(s2, A1, B1, 2, cache=zero)


def test_marginal_gain(s2_cache):
    assert marginal_gain(s2_cache, set(), 4) == conv_error(s2_cache, {4})
    with pytest.raises(VerificationError):
        marginal_gain(s2_cache, {1, 4}, 4)


def test_condition_checks_trivial(s2):
    assert check_monotone_condition(s2, A1, A1)
    assert check_submodular_condition(s2, A1, A1, 2)
    with pytest.raises(VerificationError):
        check_monotone_condition(s2, {2}, {1})


@pytest.mark.parametrize("graph", [path_graph(6), cycle_graph(6)], ids=["path", "cycle"])
def test_routes_agree_exhaustively(graph):
    rep = verify(base_scenario("constant", graph=graph))
    assert rep.conditions is not None
    assert rep.conditions.mono_disagree == 0
    assert rep.conditions.sub_disagree == 0
    assert rep.checked_pairs == 3**6


def test_witness_is_genuine(s2, s2_cache):
    rep = verify(s2, cache=s2_cache)
    if rep.submodular:
        pytest.skip("no violation to inspect")
        return
    a, b, j, ra, rb = rep.sub_witness
    assert set(a) <= set(b) and j not in b
    assert ra == pytest.approx(marginal_gain(s2_cache, a, j), abs=1e-12)
    assert rb == pytest.approx(marginal_gain(s2_cache, b, j), abs=1e-12)
    assert ra < rb - 1e-9


def test_single_agent_trivial():
    from attacklab.attack import AttackScenario, Constant, Uniform
    from attacklab.dynamics import LocalDynamics

    s = AttackScenario(path_graph(1), LocalDynamics([[-1.0]], [[1.0]]), 0.5, 5.0,
                       Constant([1.0]), Uniform(1.0), 1.0, 10.0, 10.0)
    rep = verify(s)
    assert rep.monotone and rep.submodular and rep.first_violation is None


def test_gauss_has_violation():
    found = False
    for seed in range(1, 21):
        s = base_scenario("gauss").with_(strategy=GaussianNoise([0.25, 0.1], seed=seed))
        rep = verify(s)
        if not rep.submodular:
            assert rep.first_violation is not None and len(rep.first_violation) == 5
            found = True
            break
    assert found


def test_exhaustive_cap():
    s = base_scenario("constant", graph=path_graph(15)).with_(dbar=0.25)
    with pytest.raises(VerificationError):
        verify(s)


def test_sampled_mode(s2, s2_cache):
    a = verify(s2, mode="sampled", samples=300, seed=9, cache=s2_cache)
    b = verify(s2, mode="sampled", samples=300, seed=9, cache=s2_cache)
    assert a == b
    assert a.mode == "sampled" and a.samples == 300 and a.seed == 9
    full = verify(s2, cache=s2_cache)
    # sampling can only find violations the exhaustive scan also finds
    if not a.submodular:
        assert not full.submodular
    if not a.monotone:
        assert not full.monotone
    with pytest.raises(VerificationError):
        verify(s2, mode="sampled", cache=s2_cache)
    with pytest.raises(VerificationError):
        verify(s2, mode="bogus", cache=s2_cache)


def test_sampled_time_variant(sine30, sine30_cache):
    rep = verify(sine30, mode="sampled", samples=200, seed=1, cache=sine30_cache)
    assert rep.conditions is None
    assert rep.monotone and rep.submodular


def test_first_violation_iff_flag_false(s2, sine30):
    for s in (s2, sine30):
        rep = verify(s)
        assert (rep.first_violation is None) == (rep.monotone and rep.submodular)


@pytest.mark.parametrize("kind", ["sin", "cos", "expdecay"])
@pytest.mark.parametrize("gname", ["path", "cycle", "fixed"])
def test_time_varying_presets_pass_exhaustive(kind, gname):
    graph = {"path": path_graph(6), "cycle": cycle_graph(6), "fixed": fixed_graph()}[gname]
    rep = verify(base_scenario(kind, graph=graph))
    assert rep.monotone and rep.submodular, rep.first_violation


def test_sine_diminishing_returns_exhaustive(sine30, sine30_cache):
    for b_mask in range(64):
        b = {i + 1 for i in range(6) if b_mask >> i & 1}
        for a_mask in range(64):
            if a_mask & ~b_mask:
                continue
            a = {i + 1 for i in range(6) if a_mask >> i & 1}
            for j in set(range(1, 7)) - b:
                assert marginal_gain(sine30_cache, a, j) >= marginal_gain(sine30_cache, b, j) - 1e-9


def test_verification_csv(tmp_path, s2, sine30):
    path = tmp_path / "v.csv"
    write_verification_csv([verify(s2), verify(sine30)], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "mode,strategy,monotone,submodular,checked,violation"
    rows = [ln.split(",") for ln in lines[1:]]
    assert rows[1][:4] == ["exhaustive", "sin", "true", "true"] and rows[1][5] == ""
    assert rows[0][3] == "false" and rows[0][5].count("|") == 2
