"""Second-order (Rellich type) inequalities for radial weights.

Everything here is one-dimensional: for radial functions the Laplacian in
R^n is f'' + (n-1) f'/r, so both the supersolution hypothesis

    Delta(W |Delta v|^(p-2) Delta v) >= H v^(p-1),   -Delta v > 0

and the inequality int W |Delta u|^p >= int H |u|^p reduce to radial
finite differences and radial quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergenceError, ParameterRangeError, QuadratureError
from .hardy import RADIAL, InequalityReport, _ratio, integrate_relative
from .profiles import TestProfile
from .stencils import D1_5, D2_5, OFFSETS_5
from .weights import WeightFn

# Relative steps for the nested Laplacian Delta(g(Delta v)). A single
# 5-point pass at eps^(1/4) r leaves ~1e-8 rounding noise, which a second
# pass at the same step amplifies to O(1); larger steps trade that noise
# for truncation error (~3e-7 relative on power laws over [0.5, 5]).
INNER_STEP = 1e-2
OUTER_STEP = 5e-3


# ------------------------------------------------------------------ constants


def _check_gamma(n: float, p: float, gamma: float) -> None:
    if not n >= 3:
        raise ParameterRangeError(f"need n >= 3, got {n}")
    if not p > 1:
        raise ParameterRangeError(f"need p > 1, got {p}")
    lo, hi = 2.0 - n / p, n * (p - 1.0) / p
    if not lo < gamma < hi:
        raise ParameterRangeError(f"gamma={gamma} outside ({lo}, {hi}) for n={n}, p={p}")


def rellich_constant(n: float, p: float, gamma: float = 0.0) -> float:
    """(n/p - 2 + gamma)^p (n(p-1)/p - gamma)^p, for 2 - n/p < gamma < n(p-1)/p."""
    _check_gamma(n, p, gamma)
    return (n / p - 2.0 + gamma) ** p * (n * (p - 1.0) / p - gamma) ** p


def rellich_classical_constant(n: int) -> float:
    """n^2 (n-4)^2 / 16, the unweighted p = 2 constant (n >= 5)."""
    if not n >= 5:
        raise ParameterRangeError(f"the unweighted constant needs n >= 5, got {n}")
    return n * n * (n - 4) ** 2 / 16


def okazawa_constant(n: float, p: float) -> float:
    """Unweighted L^p constant (n/p - 2)^p (n(p-1)/p)^p, for 1 < p < n/2."""
    if not 1 < p < n / 2:
        raise ParameterRangeError(f"need 1 < p < n/2, got p={p}, n={n}")
    return (n / p - 2.0) ** p * (n * (p - 1.0) / p) ** p


def extremal_exponent(n: float, p: float, gamma: float = 0.0) -> float:
    """alpha with v = r^alpha turning the hypothesis into an equality for the weighted pair."""
    return -(n / p + gamma - 2.0)


def weighted_pair(n: float, p: float, gamma: float = 0.0) -> tuple[WeightFn, WeightFn, WeightFn]:
    """(W, H, v) = (r^(gamma p), C r^((gamma-2) p), r^alpha) as weight expressions."""
    c = rellich_constant(n, p, gamma)
    W = WeightFn.from_string(f"pow(r,{gamma * p!r})") if gamma != 0 else WeightFn.from_string("1")
    H = WeightFn.from_string(f"{c!r}*pow(r,{(gamma - 2.0) * p!r})")
    v = WeightFn.from_string(f"pow(r,{extremal_exponent(n, p, gamma)!r})")
    return W, H, v


# ---------------------------------------------------------- hypothesis check


def radial_laplacian(f: Callable, r, n: float, rel_step: float) -> np.ndarray:
    """f'' + (n-1) f'/r by 5-point stencils with step rel_step * r (vectorised in r)."""
    r = np.asarray(r, dtype=float)
    h = rel_step * r
    vals = np.stack([np.asarray(f(r + k * h), dtype=float) for k in OFFSETS_5])
    d1 = np.tensordot(D1_5, vals, axes=1) / h
    d2 = np.tensordot(D2_5, vals, axes=1) / h ** 2
    return d2 + (n - 1.0) * d1 / r


def _signed_pow(x, e):
    return np.sign(x) * np.abs(x) ** e


@dataclass
class HypothesisReport:
    radii: np.ndarray
    slack: np.ndarray
    relative_slack: np.ndarray
    neg_lap_v: np.ndarray
    min_slack: float
    min_relative_slack: float
    max_abs_relative_slack: float
    neg_lap_v_min: float
    violation: bool
    holds: bool

    def to_dict(self) -> dict:
        return {
            "radii": [float(r) for r in self.radii],
            "min_slack": self.min_slack,
            "min_relative_slack": self.min_relative_slack,
            "max_abs_relative_slack": self.max_abs_relative_slack,
            "neg_lap_v_min": self.neg_lap_v_min,
            "violation": self.violation,
            "holds": self.holds,
        }


def rellich_hypothesis_check(W: WeightFn, v: Callable, H: WeightFn, p: float, n: float,
                             radii, *, rel_tol: float = 1e-5,
                             inner_step: float = INNER_STEP,
                             outer_step: float = OUTER_STEP) -> HypothesisReport:
    """Evaluate Delta(W |Delta v|^(p-2) Delta v) - H v^(p-1) at the given radii.

    The slack is also reported relative to H v^(p-1). The hypothesis counts
    as holding when every relative slack is >= -rel_tol (finite-difference
    error on the equality case is ~1e-7). -Delta v <= 0 anywhere sets the
    violation flag; it is reported, not raised.
    """
    if not p > 1:
        raise ParameterRangeError("need p > 1")
    r = np.asarray(radii, dtype=float)
    if r.ndim != 1 or r.size == 0 or np.any(r <= 0):
        raise ValueError("radii must be a nonempty list of positive numbers")
    reach = 1.0 - 2.0 * outer_step - 2.0 * inner_step * (1.0 + 2.0 * outer_step)
    vr = np.asarray(v(r), dtype=float)
    if np.any(vr <= 0) or np.any(np.asarray(v(r * reach), dtype=float) <= 0):
        raise ValueError("v must be positive at (and around) every sample radius")

    def g(s):
        return W(s) * _signed_pow(radial_laplacian(v, s, n, inner_step), p - 1.0)

    lap_v = radial_laplacian(v, r, n, inner_step)
    lhs = radial_laplacian(g, r, n, outer_step)
    rhs = H(r) * vr ** (p - 1.0)
    slack = lhs - rhs
    rel = slack / np.abs(rhs)
    violation = bool(np.any(-lap_v <= 0))
    return HypothesisReport(
        radii=r, slack=slack, relative_slack=rel, neg_lap_v=-lap_v,
        min_slack=float(slack.min()), min_relative_slack=float(rel.min()),
        max_abs_relative_slack=float(np.abs(rel).max()),
        neg_lap_v_min=float((-lap_v).min()), violation=violation,
        holds=bool(rel.min() >= -rel_tol and not violation))


# ----------------------------------------------------------------- inequality


def _check_profile(profile: TestProfile) -> None:
    if profile.family == "bump" and not (profile.params["k"] >= 3 and profile.params["beta"] >= 2):
        raise ValueError("bump profiles need k >= 3 and beta >= 2 to be twice differentiable")


def rellich_integrands(n: float, p: float, W: WeightFn, H: WeightFn, profile: TestProfile):
    def lhs(s):
        _, d1, d2 = profile.derivatives(s)
        return np.power(s, n - 1.0) * W(s) * np.abs(d2 + (n - 1.0) * d1 / s) ** p

    def rhs(s):
        f, _, _ = profile.derivatives(s)
        return np.power(s, n - 1.0) * H(s) * np.abs(f) ** p

    return lhs, rhs


def rellich_check(W: WeightFn, H: WeightFn, p: float, n: float, profile: TestProfile,
                  tol: float = 1e-10) -> InequalityReport:
    """Radial ratio int s^(n-1) W |Delta f|^p / int s^(n-1) H |f|^p (tol relative)."""
    if not p > 1:
        raise ParameterRangeError("need p > 1")
    if profile.degenerate:
        return _ratio(0.0, 0.0, 0.0, 0.0, RADIAL, profile)
    _check_profile(profile)
    a, b = profile.support
    lf, rf = rellich_integrands(n, p, W, H, profile)
    try:
        L = integrate_relative(lf, a, b, tol, profile.breakpoints)
        R = integrate_relative(rf, a, b, tol, profile.breakpoints)
    except QuadratureError as exc:
        raise QuadratureError(f"Rellich integrals: {exc}", exc.value, exc.abs_error,
                              exc.abscissa) from exc
    except DivergenceError as exc:
        raise DivergenceError(f"Rellich integrals: {exc}") from exc
    return _ratio(L.value, R.value, L.abs_error_estimate, R.abs_error_estimate, RADIAL, profile)


__all__ = ["rellich_constant", "rellich_classical_constant", "okazawa_constant",
           "extremal_exponent", "weighted_pair", "radial_laplacian", "HypothesisReport",
           "rellich_hypothesis_check", "rellich_check", "rellich_integrands"]
