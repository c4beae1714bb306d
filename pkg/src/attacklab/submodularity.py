"""Monotonicity and diminishing-returns checks for the convergence error.

Two routes are kept separate on purpose. The definitional route compares
``f`` values and marginal gains directly. The conditions route (constant
attacks only) evaluates the bilinear-form inequalities built from the
spectral closed form. Disagreements between them are counted, never
reconciled.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from attacklab import kernels
from attacklab._pykernels import _subset_sums
from attacklab.attack import AttackScenario, _check_ids, is_time_invariant
from attacklab.convergence import (
    InfluenceCache,
    SpectralForm,
    build_influence_cache,
    conv_error,
    spectral_form,
)

EXHAUSTIVE_CAP = 14
TOL_DEF = 1e-9
TOL_COND = 1e-10


class VerificationError(ValueError):
    pass


def _chain(s_n: int, set_a, set_b, j=None):
    a = _check_ids(set_a, s_n)
    b = _check_ids(set_b, s_n)
    if not a <= b:
        raise VerificationError(f"{sorted(a)} is not a subset of {sorted(b)}")
    if j is not None:
        j = int(j)
        if not 1 <= j <= s_n:
            raise VerificationError(f"agent {j} outside [1, {s_n}]")
        if j in b:
            raise VerificationError(f"agent {j} already belongs to {sorted(b)}")
    return a, b, j


def pairwise_h(s: AttackScenario, set_a: Iterable[int], set_b: Iterable[int],
               form: SpectralForm | None = None) -> float:
    """``h(A, B) = sum_k (u_k^T mu_A)(u_k^T mu_B) ||phi_k K||^2``."""
    form = form or spectral_form(s)
    return form.h(set_a, set_b)


def marginal_gain(cache: InfluenceCache, agents: Iterable[int], j: int) -> float:
    base = _check_ids(agents, cache.n)
    if int(j) in base:
        raise VerificationError(f"agent {j} already in the set")
    return conv_error(cache, base | {int(j)}) - conv_error(cache, base)


def _rho_plus(cache: InfluenceCache, agents: frozenset, j: int) -> float:
    return conv_error(cache, agents | {j}) + conv_error(cache, agents)


def gamma_ratio(s: AttackScenario, set_a, set_b, j: int,
                cache: InfluenceCache | None = None) -> float:
    a, b, j = _chain(s.n, set_a, set_b, j)
    cache = cache or build_influence_cache(s)
    denom = _rho_plus(cache, b, j)
    if denom == 0:
        raise VerificationError("rho+(B) is zero, gamma undefined")
    return _rho_plus(cache, a, j) / denom


def check_monotone_condition(s: AttackScenario, set_a, set_b,
                             form: SpectralForm | None = None) -> bool:
    a, b, _ = _chain(s.n, set_a, set_b)
    form = form or spectral_form(s)
    return form.h(b, b - a) >= -TOL_COND


def check_submodular_condition(s: AttackScenario, set_a, set_b, j: int,
                               form: SpectralForm | None = None,
                               cache: InfluenceCache | None = None) -> bool:
    a, b, j = _chain(s.n, set_a, set_b, j)
    form = form or spectral_form(s)
    gamma = gamma_ratio(s, a, b, j, cache=cache)
    rhs = 0.5 * (gamma - 1.0) * form.h({j}, {j}) + gamma * form.h(b, {j})
    return form.h(a, {j}) >= rhs - TOL_COND


@dataclass(frozen=True)
class ConditionsSummary:
    c13_violations: int
    c14_violations: int
    mono_disagree: int
    sub_disagree: int
    c13_witness: tuple | None
    c14_witness: tuple | None


@dataclass(frozen=True)
class VerificationReport:
    monotone: bool
    submodular: bool
    checked_triples: int
    checked_pairs: int
    mono_witness: tuple | None  # (A, B, f(A), f(B))
    sub_witness: tuple | None  # (A, B, j, rho_j(A), rho_j(B))
    mode: str
    samples: int | None = None
    seed: int | None = None
    strategy: str = ""
    conditions: ConditionsSummary | None = None

    @property
    def first_violation(self):
        if not self.submodular:
            return self.sub_witness
        if not self.monotone:
            return self.mono_witness
        return None

    def violation_text(self) -> str:
        w = self.first_violation
        if w is None:
            return ""
        fmt = lambda ids: "+".join(str(i) for i in ids)
        if w is self.sub_witness:
            return f"{fmt(w[0])}|{fmt(w[1])}|{w[2]}"
        return f"{fmt(w[0])}|{fmt(w[1])}"


def _ids(mask: int) -> tuple:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def _mask(ids) -> int:
    return sum(1 << (i - 1) for i in ids)


def _condition_tables(form: SpectralForm, n: int):
    H = form.gram()
    hj = _subset_sums(H)  # hj[mask, j] = sum_{i in mask} H[i, j]
    bits = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(float)
    q = np.einsum("ij,ij->i", hj, bits)
    return np.sqrt(np.maximum(q, 0.0)), q, np.ascontiguousarray(hj), np.diag(H).copy()


def verify(s: AttackScenario, mode: str = "exhaustive", samples: int | None = None,
           seed: int | None = None, cache: InfluenceCache | None = None) -> VerificationReport:
    if mode not in ("exhaustive", "sampled"):
        raise VerificationError(f"unknown verification mode {mode!r}")
    cache = cache or build_influence_cache(s)
    form = spectral_form(s) if is_time_invariant(s.strategy) else None
    if mode == "exhaustive":
        return _verify_exhaustive(s, cache, form)
    if samples is None or seed is None:
        raise VerificationError("sampled verification needs samples and seed")
    return _verify_sampled(s, cache, form, int(samples), int(seed))


def _verify_exhaustive(s, cache, form) -> VerificationReport:
    n = s.n
    if n > EXHAUSTIVE_CAP:
        raise VerificationError(f"exhaustive verification capped at n <= {EXHAUSTIVE_CAP}, got {n}")
    F = kernels.subset_norms(cache.g.T)
    extra = {}
    if form is not None:
        Fc, q, hj, hdiag = _condition_tables(form, n)
        extra = dict(Fc=Fc, q=q, hj=hj, hdiag=hdiag, tol_cond=TOL_COND)
    out = kernels.scan_chains(F, n, TOL_DEF, **extra)
    mono = None
    if out["mono_witness"] is not None:
        a, b = out["mono_witness"]
        mono = (_ids(a), _ids(b), float(F[a]), float(F[b]))
    sub = None
    if out["sub_witness"] is not None:
        a, b, j = out["sub_witness"]
        bit = 1 << j
        sub = (_ids(a), _ids(b), j + 1, float(F[a | bit] - F[a]), float(F[b | bit] - F[b]))
    cond = None
    if form is not None:
        c14 = out["c14_witness"]
        cond = ConditionsSummary(
            c13_violations=out["c13_violations"],
            c14_violations=out["c14_violations"],
            mono_disagree=out["mono_disagree"],
            sub_disagree=out["sub_disagree"],
            c13_witness=None if out["c13_witness"] is None
            else tuple(_ids(m) for m in out["c13_witness"]),
            c14_witness=None if c14 is None else (_ids(c14[0]), _ids(c14[1]), c14[2] + 1),
        )
    return VerificationReport(
        monotone=out["mono_violations"] == 0,
        submodular=out["sub_violations"] == 0,
        checked_triples=out["triples"],
        checked_pairs=out["pairs"],
        mono_witness=mono,
        sub_witness=sub,
        mode="exhaustive",
        strategy=s.strategy.kind,
        conditions=cond,
    )


def _verify_sampled(s, cache, form, samples: int, seed: int) -> VerificationReport:
    n = s.n
    rng = np.random.default_rng(seed)
    mono = sub = None
    pairs = triples = 0
    c13_v = c14_v = mono_dis = sub_dis = 0
    c13_w = c14_w = None
    for _ in range(samples):
        role = rng.integers(0, 3, size=n)  # 0: in A, 1: in B only, 2: outside B
        a = frozenset(int(i) + 1 for i in np.flatnonzero(role == 0))
        b = frozenset(int(i) + 1 for i in np.flatnonzero(role <= 1))
        fa, fb = conv_error(cache, a), conv_error(cache, b)
        pairs += 1
        bad = fa > fb + TOL_DEF
        key = (_mask(a), _mask(b))
        if bad and (mono is None or key < (_mask(mono[0]), _mask(mono[1]))):
            mono = (tuple(sorted(a)), tuple(sorted(b)), fa, fb)
        if form is not None:
            ok13 = check_monotone_condition(s, a, b, form=form)
            if not ok13:
                c13_v += 1
                if c13_w is None or key < (_mask(c13_w[0]), _mask(c13_w[1])):
                    c13_w = (tuple(sorted(a)), tuple(sorted(b)))
            mono_dis += int(ok13 == bad)
        outside = [i for i in range(1, n + 1) if i not in b]
        if not outside:
            continue
        j = int(rng.choice(outside))
        triples += 1
        ra, rb = marginal_gain(cache, a, j), marginal_gain(cache, b, j)
        viol = ra < rb - TOL_DEF
        tkey = key + (j,)
        if viol and (sub is None or tkey < (_mask(sub[0]), _mask(sub[1]), sub[2])):
            sub = (tuple(sorted(a)), tuple(sorted(b)), j, ra, rb)
        if form is not None:
            try:
                ok14 = check_submodular_condition(s, a, b, j, form=form, cache=cache)
            except VerificationError:
                ok14 = True  # rho+(B) = 0: nothing to compare
            if not ok14:
                c14_v += 1
                if c14_w is None or tkey < (_mask(c14_w[0]), _mask(c14_w[1]), c14_w[2]):
                    c14_w = (tuple(sorted(a)), tuple(sorted(b)), j)
            sub_dis += int(ok14 == viol)
    cond = None
    if form is not None:
        cond = ConditionsSummary(c13_v, c14_v, mono_dis, sub_dis, c13_w, c14_w)
    return VerificationReport(
        monotone=mono is None,
        submodular=sub is None,
        checked_triples=triples,
        checked_pairs=pairs,
        mono_witness=mono,
        sub_witness=sub,
        mode="sampled",
        samples=samples,
        seed=seed,
        strategy=s.strategy.kind,
        conditions=cond,
    )


VERIFY_HEADER = ["mode", "strategy", "monotone", "submodular", "checked", "violation"]


def write_verification_csv(reports, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VERIFY_HEADER)
        for r in reports:
            w.writerow([r.mode, r.strategy, str(r.monotone).lower(), str(r.submodular).lower(),
                        r.checked_triples, r.violation_text()])
