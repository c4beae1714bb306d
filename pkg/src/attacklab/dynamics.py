"""Global consensus dynamics ``x' = (I (x) A - dbar L (x) B) x``.

Matrix exponentials, their time integrals, the rank/spectrum/kernel
consensus test, and fixed-step RK4 trajectories.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from attacklab import kernels
from attacklab.graph import Graph, SpectralData, is_connected, laplacian, spectral_decompose

DEFAULT_STEP = 1e-3


class DynamicsError(ValueError):
    pass


@dataclass(frozen=True)
class LocalDynamics:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape[0] != A.shape[1] or B.shape != A.shape:
            raise DynamicsError(f"A and B must be square of equal size, got {A.shape} and {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def m(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class GlobalSystem:
    M: np.ndarray
    n: int
    m: int
    dbar: float = 0.0
    spectral: SpectralData | None = None
    L: np.ndarray | None = None
    local: LocalDynamics | None = None


@dataclass(frozen=True)
class ConsensusReport:
    holds: bool
    rank_condition: bool
    spectrum_condition: bool
    kernel_condition: bool
    sigma: np.ndarray
    consensus_value: np.ndarray | None = None


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), m*n)

    def agent_states(self, m: int) -> np.ndarray:
        """States reshaped to ``(time, agent, component)``."""
        return self.states.reshape(len(self.times), -1, m)


def build_global(local: LocalDynamics, g: Graph, dbar: float) -> GlobalSystem:
    dmax = g.max_degree
    upper = math.inf if dmax == 0 else 1.0 / dmax
    if not (0.0 < dbar < upper):
        raise DynamicsError(f"dbar={dbar} outside (0, 1/d_max) = (0, {upper})")
    if not is_connected(g):
        raise DynamicsError("communication graph is not connected")
    L = laplacian(g)
    M = np.kron(np.eye(g.n), local.A) - dbar * np.kron(L, local.B)
    return GlobalSystem(
        M=M, n=g.n, m=local.m, dbar=float(dbar),
        spectral=spectral_decompose(L), L=L, local=local,
    )


def matrix_exponential(S: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(S t)`` by scaling and squaring with a degree-13 Pade approximant."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if not np.all(np.isfinite(S)) or not math.isfinite(t):
        raise DynamicsError("matrix exponential of non-finite input")
    return scipy.linalg.expm(S * t)


def exp_integral(S: np.ndarray, t_c: float) -> np.ndarray:
    """``int_0^t_c exp(S s) ds`` from the upper-right block of an augmented exponential.

    Works for singular ``S``, so the zero-eigenvalue mode needs no special case.
    """
    if not t_c > 0:
        raise DynamicsError(f"integration horizon must be positive, got {t_c}")
    S = np.atleast_2d(np.asarray(S, dtype=float))
    k = S.shape[0]
    aug = np.zeros((2 * k, 2 * k))
    aug[:k, :k] = S
    aug[:k, k:] = np.eye(k)
    return matrix_exponential(aug, t_c)[:k, k:]


def _rank(S: np.ndarray, rel_tol: float = 1e-8) -> int:
    sv = np.linalg.svd(S, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def _kernel_basis(S: np.ndarray, rel_tol: float = 1e-8) -> np.ndarray:
    _, sv, vt = np.linalg.svd(S)
    scale = sv[0] if sv.size and sv[0] > 0 else 1.0
    return vt[sv <= rel_tol * scale].T


def check_consensus_conditions(sys: GlobalSystem, x0: np.ndarray | None = None,
                               tol: float = 1e-8) -> ConsensusReport:
    """Rank, spectrum and kernel-structure tests for asymptotic consensus.

    If ``x0`` is given and consensus holds, the common limit ``b`` is
    returned as ``consensus_value`` (the zero vector for Hurwitz ``M``).
    """
    M = np.asarray(sys.M, dtype=float)
    rank_ok = _rank(M) == _rank(M @ M)
    sigma = np.linalg.eigvals(M)
    scale = max(1.0, float(np.max(np.abs(sigma)))) if sigma.size else 1.0
    is_zero = np.abs(sigma) <= tol * scale
    spectrum_ok = bool(np.all(is_zero | (sigma.real < 0)))
    kernel = _kernel_basis(M)
    kernel_ok = True
    for col in kernel.T:
        blocks = col.reshape(sys.n, sys.m)
        if np.max(np.abs(blocks - blocks[0])) > tol:
            kernel_ok = False
            break
    holds = bool(rank_ok and spectrum_ok and kernel_ok)
    value = None
    if holds and x0 is not None:
        value = _limit_state(M, kernel, np.asarray(x0, dtype=float))[: sys.m]
    return ConsensusReport(holds, bool(rank_ok), spectrum_ok, kernel_ok, sigma, value)


def _limit_state(M, kernel, x0):
    """Projection onto ker M along range M; the t -> inf limit for index-one M."""
    if kernel.shape[1] == 0:
        return np.zeros_like(x0)
    u, sv, _ = np.linalg.svd(M)
    rng = u[:, sv > 1e-8 * sv[0]] if sv.size and sv[0] > 0 else u[:, :0]
    basis = np.hstack([kernel, rng])
    coef = np.linalg.solve(basis, x0)
    return kernel @ coef[: kernel.shape[1]]


def estimate_convergence_time(sys: GlobalSystem, tol: float) -> float:
    """Slowest-mode e-folding estimate ``ln(1/tol) / |Re sigma_slow|``."""
    if not (0 < tol <= 1):
        raise DynamicsError(f"tolerance must lie in (0, 1], got {tol}")
    report = check_consensus_conditions(sys)
    if not report.holds:
        raise DynamicsError("consensus conditions do not hold")
    decaying = report.sigma.real[report.sigma.real < 0]
    if decaying.size == 0:
        return 0.0
    return math.log(1.0 / tol) / abs(float(decaying.max()))


def time_grid(t_end: float, step: float) -> tuple[int, float]:
    """Number of steps and uniform step size landing exactly on ``t_end``."""
    if not (step > 0 and t_end > 0):
        raise DynamicsError("step and horizon must be positive")
    ratio = t_end / step
    steps = round(ratio) if abs(ratio - round(ratio)) < 1e-9 * max(1.0, ratio) else math.ceil(ratio)
    steps = max(int(steps), 1)
    return steps, t_end / steps


def half_step_times(steps: int, h: float) -> np.ndarray:
    return np.arange(2 * steps + 1) * (0.5 * h)


def forcing_tensor(indicator: np.ndarray, m: int) -> np.ndarray:
    """``E[c] = indicator (x) e_c`` as an ``(m, m*n, 1)`` array."""
    mu = np.asarray(indicator, dtype=float)
    E = np.zeros((m, mu.size * m, 1))
    for c in range(m):
        E[c, c::m, 0] = mu
    return E


def simulate_trajectory(sys: GlobalSystem, x0, attack=None, t_end: float = 30.0,
                        step: float = DEFAULT_STEP) -> Trajectory:
    """RK4 trajectory of ``x' = M x + mu (x) theta(t)``; ``attack`` is ``(mu, strategy)`` or None."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != sys.M.shape[0]:
        raise DynamicsError(f"x0 has {x0.size} entries, expected {sys.M.shape[0]}")
    if not np.all(np.isfinite(x0)):
        raise DynamicsError("x0 has non-finite entries")
    steps, h = time_grid(t_end, step)
    if attack is None:
        E = np.zeros((1, x0.size, 1))
        theta = np.zeros((2 * steps + 1, 1))
    else:
        mu, strategy = attack
        E = forcing_tensor(mu, sys.m)
        theta = strategy.values(half_step_times(steps, h))
    _, states = kernels.rk4_linear(sys.M, x0[:, None], E, theta, h, record=True)
    return Trajectory(times=np.arange(steps + 1) * h, states=states[:, :, 0])


def write_trajectory_csv(traj: Trajectory, m: int, path: str | Path, stride: int = 1) -> None:
    agents = traj.agent_states(m)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "agent"] + [f"comp_{c + 1}" for c in range(m)])
        for k in range(0, len(traj.times), stride):
            t = f"{traj.times[k]:.17g}"
            for i, row in enumerate(agents[k]):
                w.writerow([t, i + 1] + [f"{v:.17g}" for v in row])
