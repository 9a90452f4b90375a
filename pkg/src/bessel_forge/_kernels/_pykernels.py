"""Pure-Python kernels; the reference implementation of ``_ckernels.pyx``.

Both modules expose the same two entry points:

``eval_program(ops, args, r)``
    Run a compiled weight program (postfix, see ``weights.compile_program``)
    over a float64 array. Returns ``(out, status, index)``; ``status`` is one
    of the ``ST_*`` codes and ``index`` the first offending position.

``dopri_flux(...)``
    Dormand-Prince 5(4) integration of the flux form of the radial
    quasilinear equation with weights given as compiled programs.
"""

from __future__ import annotations

import math

import numpy as np

# opcodes; keep in sync with _ckernels.pyx and weights.py
OP_CONST, OP_VAR, OP_NEG, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW, OP_LOG, OP_EXP = range(10)

# evaluation status codes
ST_OK, ST_LOG_DOMAIN, ST_ZERO_DIV, ST_POW_DOMAIN, ST_NONFINITE = range(5)

# dopri status codes
DP_OK, DP_W_EVAL, DP_H_EVAL, DP_UNDERFLOW, DP_OVERFLOW, DP_MAX_STEPS, DP_W_NONPOS = range(7)


def _first(mask: np.ndarray) -> int:
    return int(np.flatnonzero(mask)[0])


def eval_program(ops, args, r):
    r = np.ascontiguousarray(r, dtype=np.float64)
    stack: list[np.ndarray] = []
    with np.errstate(all="ignore"):
        for op, arg in zip(ops, args):
            if op == OP_CONST:
                stack.append(np.full_like(r, arg))
            elif op == OP_VAR:
                stack.append(r.copy())
            elif op == OP_NEG:
                stack[-1] = -stack[-1]
            elif op == OP_LOG:
                x = stack[-1]
                bad = ~(x > 0.0)
                if bad.any():
                    return np.empty(0), ST_LOG_DOMAIN, _first(bad)
                stack[-1] = np.log(x)
            elif op == OP_EXP:
                stack[-1] = np.exp(stack[-1])
            elif op == OP_POW:
                x = stack[-1]
                if arg < 0.0:
                    bad = x == 0.0
                    if bad.any():
                        return np.empty(0), ST_ZERO_DIV, _first(bad)
                if arg != math.floor(arg):
                    bad = x < 0.0
                    if bad.any():
                        return np.empty(0), ST_POW_DOMAIN, _first(bad)
                stack[-1] = np.power(x, arg)
            else:
                b = stack.pop()
                a = stack[-1]
                if op == OP_ADD:
                    stack[-1] = a + b
                elif op == OP_SUB:
                    stack[-1] = a - b
                elif op == OP_MUL:
                    stack[-1] = a * b
                else:
                    bad = b == 0.0
                    if bad.any():
                        return np.empty(0), ST_ZERO_DIV, _first(bad)
                    stack[-1] = a / b
    out = stack[-1]
    bad = ~np.isfinite(out)
    if bad.any():
        return np.empty(0), ST_NONFINITE, _first(bad)
    return out, ST_OK, -1


def eval_scalar(ops, args, r: float):
    """Scalar twin of :func:`eval_program`; returns ``(value, status)``."""
    stack: list[float] = []
    try:
        for op, arg in zip(ops, args):
            if op == OP_CONST:
                stack.append(arg)
            elif op == OP_VAR:
                stack.append(r)
            elif op == OP_NEG:
                stack[-1] = -stack[-1]
            elif op == OP_LOG:
                if not stack[-1] > 0.0:
                    return math.nan, ST_LOG_DOMAIN
                stack[-1] = math.log(stack[-1])
            elif op == OP_EXP:
                stack[-1] = math.exp(stack[-1]) if stack[-1] < 709.8 else math.inf
            elif op == OP_POW:
                x = stack[-1]
                if x == 0.0 and arg < 0.0:
                    return math.nan, ST_ZERO_DIV
                if x < 0.0 and arg != math.floor(arg):
                    return math.nan, ST_POW_DOMAIN
                try:
                    stack[-1] = math.pow(x, arg)
                except OverflowError:
                    return math.nan, ST_NONFINITE
            else:
                b = stack.pop()
                a = stack[-1]
                if op == OP_ADD:
                    stack[-1] = a + b
                elif op == OP_SUB:
                    stack[-1] = a - b
                elif op == OP_MUL:
                    stack[-1] = a * b
                else:
                    if b == 0.0:
                        return math.nan, ST_ZERO_DIV
                    stack[-1] = a / b
    except OverflowError:
        return math.nan, ST_NONFINITE
    out = stack[-1]
    if not math.isfinite(out):
        return math.nan, ST_NONFINITE
    return out, ST_OK


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def dopri_flux(opsW, argsW, opsH, argsH, p, Q, r0, r1, v0, y0,
               rtol, atol, max_steps, max_step, overflow):
    """Integrate v' = sign(y)(|y|/a)^(1/(p-1)), y' = -b sign(v)|v|^(p-1).

    Here a(r) = r^(Q-1) W(r) and b(r) = r^(Q-1) H(r). Returns
    ``(r, v, y, dv, dy, status, fail_r, rejected)`` with node arrays.
    """
    q = 1.0 / (p - 1.0)
    qm1 = Q - 1.0
    p2 = p == 2.0

    def rhs(r, v, y):
        w, st = eval_scalar(opsW, argsW, r)
        if st:
            return 0.0, 0.0, DP_W_EVAL
        hh, st = eval_scalar(opsH, argsH, r)
        if st:
            return 0.0, 0.0, DP_H_EVAL
        rq = r ** qm1
        a = rq * w
        if not a > 0.0:
            return 0.0, 0.0, DP_W_NONPOS
        if p2:
            dv = y / a
            dy = -rq * hh * v
        else:
            dv = math.copysign((abs(y) / a) ** q, y) if y != 0.0 else 0.0
            dy = -rq * hh * math.copysign(abs(v) ** (p - 1.0), v) if v != 0.0 else 0.0
        return dv, dy, DP_OK

    rs, vs, ys, dvs, dys = [r0], [v0], [y0], [], []
    dv1, dy1, st = rhs(r0, v0, y0)
    if st:
        return _pack(rs, vs, ys, dvs, dys, st, r0, 0)
    dvs.append(dv1)
    dys.append(dy1)

    r, v, y = r0, v0, y0
    h = min(max_step, 1e-3 * (r1 - r0))
    rejected = 0
    kv = [0.0] * 7
    ky = [0.0] * 7
    steps = 0
    while r < r1:
        if steps >= max_steps:
            return _pack(rs, vs, ys, dvs, dys, DP_MAX_STEPS, r, rejected)
        if h < 1e-13 * max(abs(r), 1.0):
            return _pack(rs, vs, ys, dvs, dys, DP_UNDERFLOW, r, rejected)
        last = r + h >= r1
        if last:
            h = r1 - r
        kv[0], ky[0] = dv1, dy1
        for s in range(1, 7):
            row = _A[s]
            vv = v
            yy = y
            for j in range(s):
                vv += h * row[j] * kv[j]
                yy += h * row[j] * ky[j]
            rr = r1 if (s >= 5 and last) else r + _C[s] * h
            kv[s], ky[s], st = rhs(rr, vv, yy)
            if st:
                return _pack(rs, vs, ys, dvs, dys, st, rr, rejected)
        # stage 7 is evaluated at the 5th-order solution (FSAL)
        vn, yn = vv, yy
        ev = 0.0
        ey = 0.0
        for j in range(7):
            ev += _E[j] * kv[j]
            ey += _E[j] * ky[j]
        ev *= h
        ey *= h
        sv = atol + rtol * max(abs(v), abs(vn))
        sy = atol + rtol * max(abs(y), abs(yn))
        err = math.sqrt(0.5 * ((ev / sv) ** 2 + (ey / sy) ** 2))
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            steps += 1
            r = r1 if last else r + h
            v, y = vn, yn
            dv1, dy1 = kv[6], ky[6]
            rs.append(r)
            vs.append(v)
            ys.append(y)
            dvs.append(dv1)
            dys.append(dy1)
            if abs(v) > overflow or abs(y) > overflow:
                return _pack(rs, vs, ys, dvs, dys, DP_OVERFLOW, r, rejected)
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(max_step, h * fac)
        else:
            rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2)
    return _pack(rs, vs, ys, dvs, dys, DP_OK, r, rejected)


def _pack(rs, vs, ys, dvs, dys, status, fail_r, rejected):
    n = len(dvs)
    return (np.array(rs[:n]), np.array(vs[:n]), np.array(ys[:n]),
            np.array(dvs), np.array(dys), status, fail_r, rejected)
