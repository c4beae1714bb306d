# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_pykernels`` exactly."""
import numpy as np

from libc.math cimport sqrt


cdef inline void _stage(const double[:, ::1] M, const double[:, ::1] Y,
                        const double[:, :, ::1] E, const double[:, ::1] theta,
                        Py_ssize_t row, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t d = M.shape[0], p = Y.shape[1], m = E.shape[0]
    cdef Py_ssize_t i, l, c, r
    cdef double mil, th
    for i in range(d):
        for c in range(p):
            out[i, c] = 0.0
        for l in range(d):
            mil = M[i, l]
            if mil != 0.0:
                for c in range(p):
                    out[i, c] += mil * Y[l, c]
        for r in range(m):
            th = theta[row, r]
            if th != 0.0:
                for c in range(p):
                    out[i, c] += th * E[r, i, c]


def rk4_linear(M, X0, E, theta, double h, bint record=False):
    cdef const double[:, ::1] Mv = np.ascontiguousarray(M, dtype=np.float64)
    cdef const double[:, :, ::1] Ev = np.ascontiguousarray(E, dtype=np.float64)
    cdef const double[:, ::1] Tv = np.ascontiguousarray(theta, dtype=np.float64)
    X_arr = np.array(X0, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] X = X_arr
    cdef Py_ssize_t d = X.shape[0], p = X.shape[1]
    cdef Py_ssize_t steps = (Tv.shape[0] - 1) // 2
    cdef double[:, ::1] Y = np.empty((d, p))
    cdef double[:, ::1] k1 = np.empty((d, p))
    cdef double[:, ::1] k2 = np.empty((d, p))
    cdef double[:, ::1] k3 = np.empty((d, p))
    cdef double[:, ::1] k4 = np.empty((d, p))
    states_arr = np.empty((steps + 1, d, p)) if record else None
    cdef double[:, :, ::1] S
    if record:
        S = states_arr
        S[0, :, :] = X
    cdef double half = 0.5 * h, sixth = h / 6.0
    cdef Py_ssize_t k, i, c
    with nogil:
        for k in range(steps):
            _stage(Mv, X, Ev, Tv, 2 * k, k1)
            for i in range(d):
                for c in range(p):
                    Y[i, c] = X[i, c] + half * k1[i, c]
            _stage(Mv, Y, Ev, Tv, 2 * k + 1, k2)
            for i in range(d):
                for c in range(p):
                    Y[i, c] = X[i, c] + half * k2[i, c]
            _stage(Mv, Y, Ev, Tv, 2 * k + 1, k3)
            for i in range(d):
                for c in range(p):
                    Y[i, c] = X[i, c] + h * k3[i, c]
            _stage(Mv, Y, Ev, Tv, 2 * k + 2, k4)
            for i in range(d):
                for c in range(p):
                    X[i, c] = X[i, c] + sixth * (k1[i, c] + 2.0 * k2[i, c]
                                                 + 2.0 * k3[i, c] + k4[i, c])
            if record:
                for i in range(d):
                    for c in range(p):
                        S[k + 1, i, c] = X[i, c]
    return X_arr, states_arr


def subset_norms(G):
    """Gray-code walk over all subsets, one running sum, O(d) per subset."""
    cdef const double[:, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef Py_ssize_t n = Gv.shape[0], d = Gv.shape[1]
    cdef Py_ssize_t total = (<Py_ssize_t>1) << n
    F_arr = np.empty(total)
    cdef double[::1] F = F_arr
    cdef double[::1] s = np.zeros(d)
    cdef Py_ssize_t k, gray, prev = 0, bit, i
    cdef double acc, sign
    F[0] = 0.0
    with nogil:
        for k in range(1, total):
            gray = k ^ (k >> 1)
            bit = 0
            while ((gray ^ prev) >> bit) & 1 == 0:
                bit += 1
            sign = 1.0 if (gray >> bit) & 1 else -1.0
            acc = 0.0
            for i in range(d):
                s[i] += sign * Gv[bit, i]
                acc += s[i] * s[i]
            F[gray] = sqrt(acc)
            prev = gray
    return F_arr


cdef inline bint _less3(long long a1, long long b1, long long j1,
                        long long a2, long long b2, long long j2) noexcept nogil:
    if a1 != a2:
        return a1 < a2
    if b1 != b2:
        return b1 < b2
    return j1 < j2


def scan_chains(F, int n, double tol, Fc=None, q=None, hj=None, hdiag=None,
                double tol_cond=1e-10):
    cdef const double[::1] Fv = np.ascontiguousarray(F, dtype=np.float64)
    cdef bint with_cond = q is not None
    cdef const double[::1] Fcv
    cdef const double[::1] qv
    cdef const double[:, ::1] hjv
    cdef const double[::1] hdv
    if with_cond:
        Fcv = np.ascontiguousarray(Fc, dtype=np.float64)
        qv = np.ascontiguousarray(q, dtype=np.float64)
        hjv = np.ascontiguousarray(hj, dtype=np.float64)
        hdv = np.ascontiguousarray(hdiag, dtype=np.float64)
    cdef long long total = (<long long>1) << n
    cdef long long a, b, j, bit
    cdef long long pairs = 0, triples = 0
    cdef long long mono_v = 0, sub_v = 0, c13_v = 0, c14_v = 0
    cdef long long mono_dis = 0, sub_dis = 0
    cdef long long NONE = -1
    cdef long long mw_a = NONE, mw_b = NONE
    cdef long long sw_a = NONE, sw_b = NONE, sw_j = NONE
    cdef long long c13_a = NONE, c13_b = NONE
    cdef long long c14_a = NONE, c14_b = NONE, c14_j = NONE
    cdef bint bad, ok13, viol, ok14
    cdef double ra, rb, rpa, rpb, gamma, rhs
    with nogil:
        for b in range(total):
            a = b
            while True:
                pairs += 1
                bad = Fv[a] > Fv[b] + tol
                if bad:
                    mono_v += 1
                    if mw_a == NONE or a < mw_a or (a == mw_a and b < mw_b):
                        mw_a = a
                        mw_b = b
                if with_cond:
                    ok13 = 0.5 * (qv[b] - qv[a] + qv[b ^ a]) >= -tol_cond
                    if not ok13:
                        c13_v += 1
                        if c13_a == NONE or a < c13_a or (a == c13_a and b < c13_b):
                            c13_a = a
                            c13_b = b
                    if ok13 == bad:
                        mono_dis += 1
                for j in range(n):
                    bit = (<long long>1) << j
                    if b & bit:
                        continue
                    triples += 1
                    ra = Fv[a | bit] - Fv[a]
                    rb = Fv[b | bit] - Fv[b]
                    viol = ra < rb - tol
                    if viol:
                        sub_v += 1
                        if sw_a == NONE or _less3(a, b, j, sw_a, sw_b, sw_j):
                            sw_a = a
                            sw_b = b
                            sw_j = j
                    if with_cond:
                        rpb = Fcv[b | bit] + Fcv[b]
                        if rpb > 0:
                            rpa = Fcv[a | bit] + Fcv[a]
                            gamma = rpa / rpb
                            rhs = 0.5 * (gamma - 1.0) * hdv[j] + gamma * hjv[b, j]
                            ok14 = hjv[a, j] >= rhs - tol_cond
                        else:
                            ok14 = True
                        if not ok14:
                            c14_v += 1
                            if c14_a == NONE or _less3(a, b, j, c14_a, c14_b, c14_j):
                                c14_a = a
                                c14_b = b
                                c14_j = j
                        if ok14 == viol:
                            sub_dis += 1
                if a == 0:
                    break
                a = (a - 1) & b
    out = {
        "pairs": pairs,
        "triples": triples,
        "mono_violations": mono_v,
        "mono_witness": None if mw_a == NONE else (mw_a, mw_b),
        "sub_violations": sub_v,
        "sub_witness": None if sw_a == NONE else (sw_a, sw_b, sw_j),
    }
    if with_cond:
        out.update(
            c13_violations=c13_v,
            c13_witness=None if c13_a == NONE else (c13_a, c13_b),
            mono_disagree=mono_dis,
            c14_violations=c14_v,
            c14_witness=None if c14_a == NONE else (c14_a, c14_b, c14_j),
            sub_disagree=sub_dis,
        )
    return out
