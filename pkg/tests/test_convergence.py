import itertools
import math

import numpy as np
import pytest

from attacklab.attack import AttackScenario, Constant, Sampled, Uniform, indicator
from attacklab.convergence import (
    UnsupportedStrategyError,
    build_influence_cache,
    closed_form_error,
    conv_error,
    conv_error_oracle,
    mhat_blocks,
    spectral_form,
)
from attacklab.dynamics import GlobalSystem, LocalDynamics, exp_integral, simulate_trajectory
from attacklab.graph import path_graph
from attacklab.presets import X0_2D, base_scenario
from attacklab.submodularity import verify

SUBSETS_3 = [c for r in range(1, 4) for c in itertools.combinations(range(1, 7), r)]


def test_scalar_analytic():
    s = AttackScenario(path_graph(1), LocalDynamics([[-1.0]], [[1.0]]), 0.5, 30.0,
                       Constant([1.0]), Uniform(1.0), 1.0, 10.0, 100.0)
    cache = build_influence_cache(s)
    assert abs(cache.g[0, 0] - (1 - math.exp(-30.0))) <= 1e-9


def test_empty_set_is_zero(s2_cache, s2):
    assert conv_error(s2_cache, set()) == 0.0
    assert conv_error_oracle(s2, set()) == 0.0
    assert closed_form_error(s2, set()) == 0.0


def test_out_of_range_id(s2_cache):
    with pytest.raises(ValueError):
        conv_error(s2_cache, {7})


def test_path_reversal_symmetry(s2_cache):
    norms = np.linalg.norm(s2_cache.g, axis=0)
    assert abs(norms[0] - norms[5]) <= 1e-9
    assert abs(norms[1] - norms[4]) <= 1e-9


def test_constant_branches_agree(s2):
    # the same constant signal routed through the time-varying integrator
    K = s2.strategy.K
    sampled = s2.with_(strategy=Sampled([0.0, 30.0], [K, K]))
    a = build_influence_cache(s2).g
    b = build_influence_cache(sampled).g
    assert np.max(np.abs(a - b)) <= 1e-6


def test_closed_form_equals_cache(s2, s2_cache):
    for c in SUBSETS_3:
        ref = conv_error(s2_cache, c)
        assert abs(closed_form_error(s2, c) - ref) <= 1e-8 * ref


@pytest.mark.parametrize("kind", ["constant", "sin", "cos"])
def test_cache_equals_oracle(kind):
    s = base_scenario(kind)
    cache = build_influence_cache(s)
    for c in [(1,), (3,), (6,), (1, 2), (2, 5), (1, 3, 4)]:
        ref = conv_error_oracle(s, c)
        assert abs(conv_error(cache, c) - ref) <= 1e-6 * ref


def test_linearity_of_kappa(s2, s2_cache):
    from attacklab import kernels
    from attacklab.dynamics import forcing_tensor, half_step_times, time_grid

    steps, h = time_grid(s2.t_c, s2.quad_step / 2)
    theta = s2.strategy.values(half_step_times(steps, h))
    for c in SUBSETS_3:
        mu = indicator(c, 6).as_array()
        X, _ = kernels.rk4_linear(s2.system_matrix(), np.zeros((12, 1)), forcing_tensor(mu, 2), theta, h)
        assert np.max(np.abs(s2_cache.aggregate(c) - X[:, 0])) <= 1e-6


def test_initial_state_independence(s2, s2_cache):
    sys = GlobalSystem(M=s2.system_matrix(), n=6, m=2)
    mu = indicator({1, 2}, 6).as_array()
    target = conv_error(s2_cache, {1, 2})
    for x0 in (np.array(X0_2D, dtype=float), np.linspace(5, -5, 12)):
        clean = simulate_trajectory(sys, x0, None, s2.t_c)
        attacked = simulate_trajectory(sys, x0, (mu, s2.strategy), s2.t_c)
        diff = np.linalg.norm(attacked.states[-1] - clean.states[-1])
        assert abs(diff - target) <= 2e-4


def test_mhat_blocks(s2):
    mh = mhat_blocks(s2)
    assert len(mh) == 6
    assert np.allclose(mh.blocks[0], exp_integral(s2.local.A, s2.t_c))
    A, B = s2.local.A, s2.local.B
    checked = 0
    for lam, blk in zip(mh.eigenvalues[1:], mh.blocks[1:]):
        S = A - lam * s2.dbar * B
        if np.max(np.linalg.eigvals(S).real) <= -0.3:
            assert np.allclose(blk, -np.linalg.inv(S), atol=1e-3)
            checked += 1
    assert checked > 0


def test_closed_form_rejects_time_variant(sine30):
    with pytest.raises(UnsupportedStrategyError):
        closed_form_error(sine30, {1})


def test_spectral_form_sign_invariance(s2):
    form = spectral_form(s2)
    flipped = type(form)(U=form.U * np.array([1, -1, 1, -1, -1, 1]), weights=form.weights)
    for a, b in [({1}, {2}), ({1, 3, 4, 5}, {6}), ({2, 3}, {2, 3})]:
        assert abs(form.h(a, b) - flipped.h(a, b)) <= 1e-12


@pytest.mark.parametrize("kind", ["sin", "cos", "expdecay"])
def test_monotone_for_time_varying(kind):
    assert verify(base_scenario(kind)).monotone


def test_norm_sanity(s2_cache):
    norms = np.linalg.norm(s2_cache.g, axis=0)
    singles = [conv_error(s2_cache, {i}) for i in range(1, 7)]
    assert all(v <= norms.sum() + 1e-12 for v in singles)
    assert conv_error(s2_cache, range(1, 7)) <= sum(singles) + 1e-12


def test_cache_fingerprint(s2, s2_cache):
    assert s2_cache.fingerprint == s2.fingerprint()


def test_invalid_scenario_rejected(s2):
    with pytest.raises(ValueError):
        build_influence_cache(s2.with_(u_bar=0.0))
