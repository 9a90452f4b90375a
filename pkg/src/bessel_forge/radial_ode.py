"""Radial quasilinear equation in flux form.

    (r^(Q-1) W(r) |v'|^(p-2) v')' + r^(Q-1) H(r) |v|^(p-2) v = 0

is integrated as the first-order system in (v, y) with the flux
y = r^(Q-1) W |v'|^(p-2) v':

    v' = sign(y) (|y| / (r^(Q-1) W))^(1/(p-1)),   y' = -r^(Q-1) H sign(v) |v|^(p-1).

The stepping loop (Dormand-Prince 5(4)) lives in the kernel module so that
it runs compiled when the extension is available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _kernels as K
from .errors import ODEError
from .stencils import fornberg_weights
from .weights import WeightFn

OVERFLOW_GUARD = 1e150

_FAILURES = {
    K.DP_W_EVAL: "W evaluation failed",
    K.DP_H_EVAL: "H evaluation failed",
    K.DP_UNDERFLOW: "step size underflow (stiff or singular problem)",
    K.DP_OVERFLOW: "solution exceeded the overflow guard",
    K.DP_MAX_STEPS: "maximum number of steps exceeded",
    K.DP_W_NONPOS: "r^(Q-1) W(r) is not positive",
}


@dataclass
class RadialSolution:
    grid: np.ndarray
    v: np.ndarray
    v_prime: np.ndarray
    flux: np.ndarray
    flux_prime: np.ndarray
    positive: bool
    first_zero: float | None
    step_stats: tuple[float, float]
    rejected_steps: int = 0

    def dense_v(self, r: float) -> float:
        """Cubic Hermite interpolation of v between grid nodes."""
        i = int(np.clip(np.searchsorted(self.grid, r) - 1, 0, len(self.grid) - 2))
        return _hermite(self.grid[i], self.grid[i + 1], self.v[i], self.v[i + 1],
                        self.v_prime[i], self.v_prime[i + 1], r)

    def summary(self) -> dict:
        return {
            "r0": float(self.grid[0]),
            "r1": float(self.grid[-1]),
            "nodes": int(self.grid.size),
            "v_end": float(self.v[-1]),
            "v_prime_end": float(self.v_prime[-1]),
            "flux_end": float(self.flux[-1]),
            "positive": self.positive,
            "first_zero": self.first_zero,
            "min_step": self.step_stats[0],
            "max_step": self.step_stats[1],
            "rejected_steps": self.rejected_steps,
        }


def _hermite(r0, r1, v0, v1, d0, d1, r):
    h = r1 - r0
    t = (r - r0) / h
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    return h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1


def _signed_pow(x, e):
    return np.sign(x) * np.abs(x) ** e


def initial_flux(W: WeightFn, p: float, Q: float, r0: float, dv0: float) -> float:
    return float(r0 ** (Q - 1.0) * W(r0) * _signed_pow(dv0, p - 1.0))


def solve_radial(W: WeightFn, H: WeightFn, p: float, Q: float, r0: float, r1: float,
                 v0: float = 1.0, dv0: float = 0.0, tol: float = 1e-10, *,
                 max_step: float | None = None, max_steps: int = 1_000_000,
                 backend=None) -> RadialSolution:
    """Integrate from r0 to r1 with initial data v(r0) = v0, v'(r0) = dv0.

    Integration continues through sign changes of v; the first one is
    located by root finding on the Hermite dense output.
    """
    if not r1 > r0 > 0:
        raise ValueError("need r1 > r0 > 0")
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not v0 > 0:
        raise ValueError("initial value v0 must be positive")
    for f in (W, H):
        if r0 < f.r_min or r1 > f.r_max:
            raise ODEError(f"{f.text}: domain does not cover [{r0}, {r1}]", r=r0)
    kern = backend or K.backend
    y0 = initial_flux(W, p, Q, r0, dv0)
    if max_step is None:
        max_step = r1 - r0
    r, v, y, dv, dy, status, fail_r, rejected = kern.dopri_flux(
        *W._program, *H._program, float(p), float(Q), float(r0), float(r1),
        float(v0), float(y0), float(tol), float(tol), int(max_steps), float(max_step),
        OVERFLOW_GUARD)
    if status != K.DP_OK:
        raise ODEError(f"{_FAILURES.get(status, 'solver failure')} at r={fail_r!r}", r=fail_r)
    steps = np.diff(r)
    sol = RadialSolution(r, v, dv, y, dy, True, None,
                         (float(steps.min()), float(steps.max())), int(rejected))
    below = np.flatnonzero(v <= 0.0)
    if below.size:
        sol.positive = False
        i = int(below[0])
        sol.first_zero = _locate_zero(sol, i)
    return sol


def _locate_zero(sol: RadialSolution, i: int) -> float:
    """First zero of v in [grid[i-1], grid[i]] (v > 0 at i-1, v <= 0 at i)."""
    a, b = sol.grid[i - 1], sol.grid[i]
    if sol.v[i] == 0.0:
        return float(b)
    fa = sol.dense_v(a)
    fb = sol.dense_v(b)
    if fa * fb > 0:  # interpolant disagrees in sign with the nodes; fall back to the node
        return float(b)
    return float(brentq(sol.dense_v, a, b, xtol=1e-10 * b, rtol=4 * np.finfo(float).eps))


def verify_ode_residual(sol: RadialSolution, W: WeightFn, H: WeightFn, p: float, Q: float) -> float:
    """max |y' + r^(Q-1) H |v|^(p-2) v| / (1 + |y'|) over interior nodes.

    y' comes from 5-point finite differences of the stored flux on the
    (non-uniform) solver grid, independently of the solver's own slopes.
    """
    r, v, y = sol.grid, sol.v, sol.flux
    if r.size < 5:
        raise ValueError("residual check needs at least 5 grid nodes")
    worst = 0.0
    hv = H(r[2:-2])
    for k, i in enumerate(range(2, r.size - 2)):
        w = fornberg_weights(r[i], r[i - 2:i + 3], 1)
        yp = float(w @ y[i - 2:i + 3])
        res = abs(yp + r[i] ** (Q - 1.0) * hv[k] * _signed_pow(v[i], p - 1.0))
        worst = max(worst, res / (1.0 + abs(yp)))
    return float(worst)


@dataclass
class ScanResult:
    positive: bool
    first_zero: float | None
    r_max: float
    solution: RadialSolution


def positivity_scan(W: WeightFn, H: WeightFn, p: float, Q: float, r0: float, r_max: float,
                    init: tuple[float, float] = (1.0, 0.0), tol: float = 1e-10,
                    **kwargs) -> ScanResult:
    """Does the trajectory with the given initial data stay positive up to r_max?"""
    sol = solve_radial(W, H, p, Q, r0, r_max, init[0], init[1], tol, **kwargs)
    return ScanResult(sol.positive, sol.first_zero, r_max, sol)


__all__ = ["RadialSolution", "solve_radial", "verify_ode_residual", "positivity_scan",
           "ScanResult", "initial_flux"]

