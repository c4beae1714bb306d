"""Convergence error ``f(A) = ||kappa(A, t_c)||`` of an attacked consensus network.

``kappa`` is the forced response to the injected signal and is linear in
the attack set, so ``f`` is evaluated from one response column per agent.
Two independent evaluators back it up: a spectral closed form (constant
attacks only) and a direct RK4 integration of the aggregate system.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from attacklab import kernels
from attacklab.attack import (
    AttackScenario,
    ScenarioError,
    _check_ids,
    indicator,
    is_time_invariant,
    quadrature_grid,
    require_valid,
)
from attacklab.dynamics import exp_integral, forcing_tensor, half_step_times, time_grid
from attacklab.graph import laplacian, spectral_decompose


class UnsupportedStrategyError(ScenarioError):
    """Raised when a constant-only evaluator receives a time-varying attack."""


@dataclass(frozen=True)
class InfluenceCache:
    g: np.ndarray  # (m*n, n); column i-1 is agent i's forced response
    fingerprint: str

    @property
    def n(self) -> int:
        return self.g.shape[1]

    def aggregate(self, agents: Iterable[int]) -> np.ndarray:
        ids = sorted(_check_ids(agents, self.n))
        if not ids:
            return np.zeros(self.g.shape[0])
        return self.g[:, [i - 1 for i in ids]].sum(axis=1)


@dataclass(frozen=True)
class MhatBlocks:
    blocks: tuple  # n arrays of shape (m, m)
    eigenvalues: np.ndarray

    def __len__(self) -> int:
        return len(self.blocks)


def _unit_forcing(n: int, m: int) -> np.ndarray:
    """``E[c]`` with ``E[c][i*m + c, i] = 1``; drives every agent column at once."""
    E = np.zeros((m, n * m, n))
    for c in range(m):
        for i in range(n):
            E[c, i * m + c, i] = 1.0
    return E


def build_influence_cache(s: AttackScenario, validate: bool = True) -> InfluenceCache:
    if validate:
        require_valid(s)
    n, m = s.n, s.m
    M = s.system_matrix()
    if is_time_invariant(s.strategy):
        phi = exp_integral(M, s.t_c)
        K = s.strategy.K
        G = np.column_stack([phi[:, i * m:(i + 1) * m] @ K for i in range(n)])
    else:
        times, h = quadrature_grid(s)
        theta = s.strategy.values(times)
        G, _ = kernels.rk4_linear(M, np.zeros((n * m, n)), _unit_forcing(n, m), theta, h)
    return InfluenceCache(g=np.ascontiguousarray(G), fingerprint=s.fingerprint())


def conv_error(cache: InfluenceCache, agents: Iterable[int]) -> float:
    return float(np.linalg.norm(cache.aggregate(agents)))


def conv_error_oracle(s: AttackScenario, agents: Iterable[int], validate: bool = True) -> float:
    """Direct RK4 of ``kappa' = M kappa + mu (x) theta`` at half the cache's quadrature step."""
    if validate:
        require_valid(s)
    mu = indicator(agents, s.n).as_array()
    if not mu.any():
        return 0.0
    steps, h = time_grid(s.t_c, 0.5 * s.quad_step)
    theta = s.strategy.values(half_step_times(steps, h))
    X, _ = kernels.rk4_linear(s.system_matrix(), np.zeros((s.n * s.m, 1)),
                              forcing_tensor(mu, s.m), theta, h)
    return float(np.linalg.norm(X))


def mhat_blocks(s: AttackScenario, validate: bool = True) -> MhatBlocks:
    if validate:
        require_valid(s)
    spec = spectral_decompose(laplacian(s.graph))
    A, B = s.local.A, s.local.B
    blocks = [exp_integral(A, s.t_c)]
    for lam in spec.eigenvalues[1:]:
        blocks.append(exp_integral(A - lam * s.dbar * B, s.t_c))
    return MhatBlocks(blocks=tuple(blocks), eigenvalues=spec.eigenvalues)


@dataclass(frozen=True)
class SpectralForm:
    """``f(A)^2 = sum_k (u_k^T mu_A)^2 w_k`` with ``w_k = ||phi_k K||^2``."""

    U: np.ndarray
    weights: np.ndarray

    def coords(self, agents: Iterable[int]) -> np.ndarray:
        return self.U.T @ indicator(agents, self.U.shape[0]).as_array()

    def h(self, set_a: Iterable[int], set_b: Iterable[int]) -> float:
        return float(np.sum(self.coords(set_a) * self.coords(set_b) * self.weights))

    def gram(self) -> np.ndarray:
        """``H[i, j] = h({i}, {j})``, so ``h(S, T) = 1_S^T H 1_T``."""
        return (self.U * self.weights) @ self.U.T


def spectral_form(s: AttackScenario, validate: bool = True) -> SpectralForm:
    if not is_time_invariant(s.strategy):
        raise UnsupportedStrategyError(
            f"closed form needs a constant attack, got {s.strategy.kind!r}"
        )
    mh = mhat_blocks(s, validate=validate)
    K = s.strategy.K
    weights = np.array([float(np.dot(phi @ K, phi @ K)) for phi in mh.blocks])
    U = spectral_decompose(laplacian(s.graph)).eigvecs
    return SpectralForm(U=U, weights=weights)


def closed_form_error(s: AttackScenario, agents: Iterable[int], validate: bool = True) -> float:
    form = spectral_form(s, validate=validate)
    return float(np.sqrt(max(form.h(agents, agents), 0.0)))
