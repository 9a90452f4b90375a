# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same API and algorithms as ``_pykernels``."""

import numpy as np

from libc.math cimport log, exp, pow, floor, fabs, sqrt, copysign, isfinite
from libc.stdlib cimport malloc, free

# opcodes; keep in sync with _pykernels.py
cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_NEG = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_DIV = 6
    OP_POW = 7
    OP_LOG = 8
    OP_EXP = 9

cdef enum:
    ST_OK = 0
    ST_LOG_DOMAIN = 1
    ST_ZERO_DIV = 2
    ST_POW_DOMAIN = 3
    ST_NONFINITE = 4

cdef enum:
    DP_OK = 0
    DP_W_EVAL = 1
    DP_H_EVAL = 2
    DP_UNDERFLOW = 3
    DP_OVERFLOW = 4
    DP_MAX_STEPS = 5
    DP_W_NONPOS = 6


cdef int _eval(const int* ops, const double* args, int n, double r,
               double* stack, double* out) noexcept nogil:
    cdef int i, sp = 0
    cdef int op
    cdef double x, b, a
    for i in range(n):
        op = ops[i]
        a = args[i]
        if op == OP_CONST:
            stack[sp] = a
            sp += 1
        elif op == OP_VAR:
            stack[sp] = r
            sp += 1
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_LOG:
            x = stack[sp - 1]
            if not x > 0.0:
                return ST_LOG_DOMAIN
            stack[sp - 1] = log(x)
        elif op == OP_EXP:
            stack[sp - 1] = exp(stack[sp - 1])
        elif op == OP_POW:
            x = stack[sp - 1]
            if x == 0.0 and a < 0.0:
                return ST_ZERO_DIV
            if x < 0.0 and a != floor(a):
                return ST_POW_DOMAIN
            stack[sp - 1] = pow(x, a)
        else:
            sp -= 1
            b = stack[sp]
            x = stack[sp - 1]
            if op == OP_ADD:
                stack[sp - 1] = x + b
            elif op == OP_SUB:
                stack[sp - 1] = x - b
            elif op == OP_MUL:
                stack[sp - 1] = x * b
            else:
                if b == 0.0:
                    return ST_ZERO_DIV
                stack[sp - 1] = x / b
    out[0] = stack[sp - 1]
    if not isfinite(out[0]):
        return ST_NONFINITE
    return ST_OK


def eval_program(int[::1] ops, double[::1] args, r):
    cdef double[::1] rv = np.ascontiguousarray(r, dtype=np.float64).ravel()
    cdef Py_ssize_t m = rv.shape[0], i
    cdef int n = ops.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef int st = ST_OK
    cdef Py_ssize_t bad = -1
    cdef double* stack = <double*> malloc((n + 1) * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                st = _eval(&ops[0], &args[0], n, rv[i], stack, &ov[i])
                if st != ST_OK:
                    bad = i
                    break
    finally:
        free(stack)
    if st != ST_OK:
        return np.empty(0), st, bad
    return out.reshape(np.shape(r)), ST_OK, -1


def eval_scalar(int[::1] ops, double[::1] args, double r):
    cdef int n = ops.shape[0]
    cdef double out = 0.0
    cdef double* stack = <double*> malloc((n + 1) * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    cdef int st = _eval(&ops[0], &args[0], n, r, stack, &out)
    free(stack)
    if st != ST_OK:
        return float("nan"), st
    return out, ST_OK


cdef struct Weights:
    const int* opsW
    const double* argsW
    int nW
    const int* opsH
    const double* argsH
    int nH
    double* stack
    double p
    double q
    double qm1


cdef int _rhs(Weights* wt, double r, double v, double y,
              double* dv, double* dy) noexcept nogil:
    cdef double w, hh, rq, a
    if _eval(wt.opsW, wt.argsW, wt.nW, r, wt.stack, &w) != ST_OK:
        return DP_W_EVAL
    if _eval(wt.opsH, wt.argsH, wt.nH, r, wt.stack, &hh) != ST_OK:
        return DP_H_EVAL
    rq = pow(r, wt.qm1)
    a = rq * w
    if not a > 0.0:
        return DP_W_NONPOS
    if wt.p == 2.0:
        dv[0] = y / a
        dy[0] = -rq * hh * v
    else:
        dv[0] = copysign(pow(fabs(y) / a, wt.q), y) if y != 0.0 else 0.0
        dy[0] = -rq * hh * copysign(pow(fabs(v), wt.p - 1.0), v) if v != 0.0 else 0.0
    return DP_OK


def dopri_flux(int[::1] opsW, double[::1] argsW, int[::1] opsH, double[::1] argsH,
               double p, double Q, double r0, double r1, double v0, double y0,
               double rtol, double atol, long max_steps, double max_step,
               double overflow):
    cdef double C[7]
    cdef double A[7][7]
    cdef double E[7]
    C[:] = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0]
    A[1][:1] = [1.0 / 5]
    A[2][:2] = [3.0 / 40, 9.0 / 40]
    A[3][:3] = [44.0 / 45, -56.0 / 15, 32.0 / 9]
    A[4][:4] = [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729]
    A[5][:5] = [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656]
    A[6][:6] = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84]
    E[:] = [71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200,
            22.0 / 525, -1.0 / 40]

    cdef Weights wt
    wt.opsW = &opsW[0]
    wt.argsW = &argsW[0]
    wt.nW = opsW.shape[0]
    wt.opsH = &opsH[0]
    wt.argsH = &argsH[0]
    wt.nH = opsH.shape[0]
    wt.p = p
    wt.q = 1.0 / (p - 1.0)
    wt.qm1 = Q - 1.0
    wt.stack = <double*> malloc((max(wt.nW, wt.nH) + 1) * sizeof(double))
    if wt.stack == NULL:
        raise MemoryError()

    cdef Py_ssize_t cap = 1024, n = 0
    rs = np.empty(cap)
    vs = np.empty(cap)
    ys = np.empty(cap)
    dvs = np.empty(cap)
    dys = np.empty(cap)
    cdef double[::1] rsv = rs, vsv = vs, ysv = ys, dvv = dvs, dyv = dys

    cdef double r = r0, v = v0, y = y0, h, vv, yy, rr, vn = 0.0, yn = 0.0
    cdef double dv1 = 0.0, dy1 = 0.0, ev, ey, sv, sy, err, fac
    cdef double kv[7]
    cdef double ky[7]
    cdef int st = DP_OK, s, j
    cdef bint last
    cdef long steps = 0, rejected = 0
    cdef double fail_r = r0

    try:
        st = _rhs(&wt, r0, v0, y0, &dv1, &dy1)
        if st != DP_OK:
            return np.empty(0), np.empty(0), np.empty(0), np.empty(0), np.empty(0), st, r0, 0
        rsv[0] = r0
        vsv[0] = v0
        ysv[0] = y0
        dvv[0] = dv1
        dyv[0] = dy1
        n = 1
        h = min(max_step, 1e-3 * (r1 - r0))
        while r < r1:
            if steps >= max_steps:
                st = DP_MAX_STEPS
                fail_r = r
                break
            if h < 1e-13 * max(fabs(r), 1.0):
                st = DP_UNDERFLOW
                fail_r = r
                break
            last = r + h >= r1
            if last:
                h = r1 - r
            kv[0] = dv1
            ky[0] = dy1
            for s in range(1, 7):
                vv = v
                yy = y
                for j in range(s):
                    vv = vv + h * A[s][j] * kv[j]
                    yy = yy + h * A[s][j] * ky[j]
                rr = r1 if (s >= 5 and last) else r + C[s] * h
                st = _rhs(&wt, rr, vv, yy, &kv[s], &ky[s])
                if st != DP_OK:
                    fail_r = rr
                    break
            if st != DP_OK:
                break
            vn = vv
            yn = yy
            ev = 0.0
            ey = 0.0
            for j in range(7):
                ev += E[j] * kv[j]
                ey += E[j] * ky[j]
            ev *= h
            ey *= h
            sv = atol + rtol * max(fabs(v), fabs(vn))
            sy = atol + rtol * max(fabs(y), fabs(yn))
            err = sqrt(0.5 * ((ev / sv) * (ev / sv) + (ey / sy) * (ey / sy)))
            if not isfinite(err):
                err = 1e10
            if err <= 1.0:
                steps += 1
                r = r1 if last else r + h
                v = vn
                y = yn
                dv1 = kv[6]
                dy1 = ky[6]
                if n == cap:
                    cap *= 2
                    rs = np.resize(rs, cap)
                    vs = np.resize(vs, cap)
                    ys = np.resize(ys, cap)
                    dvs = np.resize(dvs, cap)
                    dys = np.resize(dys, cap)
                    rsv = rs
                    vsv = vs
                    ysv = ys
                    dvv = dvs
                    dyv = dys
                rsv[n] = r
                vsv[n] = v
                ysv[n] = y
                dvv[n] = dv1
                dyv[n] = dy1
                n += 1
                if fabs(v) > overflow or fabs(y) > overflow:
                    st = DP_OVERFLOW
                    fail_r = r
                    break
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
                h = min(max_step, h * fac)
            else:
                rejected += 1
                h *= max(0.2, 0.9 * pow(err, -0.2))
        if st == DP_OK:
            fail_r = r
    finally:
        free(wt.stack)
    return (rs[:n].copy(), vs[:n].copy(), ys[:n].copy(), dvs[:n].copy(),
            dys[:n].copy(), st, fail_r, rejected)
