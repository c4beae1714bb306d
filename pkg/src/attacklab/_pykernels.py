"""Numpy implementations of the hot kernels.

Same signatures and results as the compiled ``_ckernels`` module; used
when the extension is not built or ``ATTACKLAB_PURE_PYTHON`` is set.
"""
from __future__ import annotations

import numpy as np


def rk4_linear(M, X0, E, theta, h, record=False):
    """Classical RK4 for ``X' = M X + sum_c theta_c(t) E[c]``.

    ``theta`` holds the forcing on the half-step grid: row ``2k`` is
    ``t_k``, row ``2k+1`` is ``t_k + h/2``. Returns the final state and,
    when ``record`` is set, every state on the full-step grid.
    """
    M = np.ascontiguousarray(M, dtype=float)
    X = np.array(X0, dtype=float, copy=True)
    E = np.asarray(E, dtype=float)
    theta = np.asarray(theta, dtype=float)
    steps = (theta.shape[0] - 1) // 2
    # forcing on the half grid, shape (2N+1, d, p)
    forcing = np.tensordot(theta, E, axes=(1, 0))
    states = np.empty((steps + 1,) + X.shape) if record else None
    if record:
        states[0] = X
    half = 0.5 * h
    sixth = h / 6.0
    for k in range(steps):
        f0 = forcing[2 * k]
        fm = forcing[2 * k + 1]
        f1 = forcing[2 * k + 2]
        k1 = M @ X + f0
        k2 = M @ (X + half * k1) + fm
        k3 = M @ (X + half * k2) + fm
        k4 = M @ (X + h * k3) + f1
        X = X + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if record:
            states[k + 1] = X
    return X, states


def _subset_sums(G):
    """All 2^k subset sums of the rows of ``G``, indexed by bitmask."""
    k, d = G.shape
    S = np.zeros((1 << k, d))
    for i in range(k):
        lo = 1 << i
        S[lo : 2 * lo] = S[:lo] + G[i]
    return S


def subset_norms(G):
    """``F[mask] = || sum_{i in mask} G[i] ||`` for every bitmask over the rows of ``G``."""
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    lo_bits = min(n, 10)
    low = _subset_sums(G[:lo_bits])
    high = _subset_sums(G[lo_bits:])
    F = np.empty(1 << n)
    width = 1 << lo_bits
    for hmask in range(high.shape[0]):
        block = low + high[hmask]
        F[hmask * width : (hmask + 1) * width] = np.sqrt(np.einsum("ij,ij->i", block, block))
    return F


def _chain_pairs(n):
    """Every pair ``a <= b`` of bitmasks, via the ternary assignment per element."""
    a = np.zeros(1, dtype=np.int64)
    b = np.zeros(1, dtype=np.int64)
    for i in range(n):
        bit = np.int64(1 << i)
        a = np.concatenate([a, a, a | bit])
        b = np.concatenate([b, b | bit, b | bit])
    return a, b


def _min_witness(*cols):
    if cols[0].size == 0:
        return None
    order = np.lexsort(cols[::-1])
    return tuple(int(c[order[0]]) for c in cols)


def scan_chains(F, n, tol, Fc=None, q=None, hj=None, hdiag=None, tol_cond=1e-10):
    """Exhaustive monotonicity / diminishing-returns scan over a subset-value table.

    Returns a dict of counts and lexicographically smallest witnesses.
    When the closed-form arrays are given, the monotone and submodular conditions are also
    evaluated per pair/triple and disagreements with the direct checks
    are counted.
    """
    F = np.asarray(F, dtype=float)
    a, b = _chain_pairs(n)
    with_cond = q is not None
    out = {"pairs": int(a.size), "triples": 0}

    bad = F[a] > F[b] + tol
    out["mono_violations"] = int(bad.sum())
    out["mono_witness"] = _min_witness(a[bad], b[bad])
    if with_cond:
        q = np.asarray(q, dtype=float)
        c13 = 0.5 * (q[b] - q[a] + q[b ^ a]) >= -tol_cond
        out["c13_violations"] = int((~c13).sum())
        out["c13_witness"] = _min_witness(a[~c13], b[~c13])
        out["mono_disagree"] = int((c13 == bad).sum())

    sub_count = 0
    wit = []
    c14_count = 0
    c14_wit = []
    disagree = 0
    for j in range(n):
        bit = np.int64(1 << j)
        sel = (b & bit) == 0
        aj, bj = a[sel], b[sel]
        out["triples"] += int(aj.size)
        ra = F[aj | bit] - F[aj]
        rb = F[bj | bit] - F[bj]
        viol = ra < rb - tol
        sub_count += int(viol.sum())
        if viol.any():
            wit.append(_min_witness(aj[viol], bj[viol], np.full(int(viol.sum()), j)))
        if with_cond:
            Fc_ = np.asarray(Fc, dtype=float)
            rpa = Fc_[aj | bit] + Fc_[aj]
            rpb = Fc_[bj | bit] + Fc_[bj]
            safe = rpb > 0
            gamma = np.where(safe, rpa / np.where(safe, rpb, 1.0), 1.0)
            rhs = 0.5 * (gamma - 1.0) * hdiag[j] + gamma * hj[bj, j]
            ok14 = (hj[aj, j] >= rhs - tol_cond) | ~safe
            c14_count += int((~ok14).sum())
            if (~ok14).any():
                c14_wit.append(
                    _min_witness(aj[~ok14], bj[~ok14], np.full(int((~ok14).sum()), j))
                )
            disagree += int((ok14 == viol).sum())
    out["sub_violations"] = sub_count
    out["sub_witness"] = min(wit) if wit else None
    if with_cond:
        out["c14_violations"] = c14_count
        out["c14_witness"] = min(c14_wit) if c14_wit else None
        out["sub_disagree"] = disagree
    return out
