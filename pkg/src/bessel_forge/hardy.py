"""Weighted Hardy inequality checks for radial test functions u = f(d(x)).

For such u, |grad u|_A = psi^(1/2) |f'(d)| with psi = |grad d|_A^2, so

    lhs = int W(d) psi^(p/2) |f'(d)|^p dx,   rhs = int psi^(p/2) H(d) |f(d)|^p dx.

Both carry the same psi^(p/2) factor; in gauge-polar coordinates they become
constant multiples of int s^(Q-1) W |f'|^p ds and int s^(Q-1) H |f|^p ds, so
the ratio lhs/rhs can be computed either by 1-D quadrature or by Monte
Carlo in the ambient space, and the two must agree.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._config import max_threads
from .errors import DivergenceError, GaugeUnavailableError, QuadratureError
from .geometry import Geometry
from .profiles import TestProfile
from .quadrature import (integrate_adaptive, integrate_from_origin, mc_moments, mc_stats)
from .weights import WeightFn

RADIAL = "radial-quadrature"
MONTE_CARLO = "monte-carlo"


@dataclass
class InequalityReport:
    lhs: float
    rhs: float
    ratio: float | None
    method: str
    uncertainty: float
    profile: dict
    degenerate: bool = False
    lhs_error: float = 0.0
    rhs_error: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "method": self.method,
            "uncertainty": self.uncertainty,
            "profile": self.profile,
            "degenerate": self.degenerate,
            "lhs_error": self.lhs_error,
            "rhs_error": self.rhs_error,
        }
        out.update(self.extra)
        return out


def _ratio(lhs, rhs, lhs_err, rhs_err, method, profile, **extra) -> InequalityReport:
    if lhs == 0.0 or rhs == 0.0:
        return InequalityReport(lhs, rhs, None, method, 0.0, profile.describe(), True,
                                lhs_err, rhs_err, extra)
    ratio = lhs / rhs
    unc = abs(ratio) * (lhs_err / abs(lhs) + rhs_err / abs(rhs))
    return InequalityReport(lhs, rhs, ratio, method, unc, profile.describe(), False,
                            lhs_err, rhs_err, extra)


def integrate_relative(f, a: float, b: float, rel_tol: float, points=()):
    """Integrate over [a, b] (a = 0 allowed, singular power behaviour there)
    to a tolerance relative to the size of the integral.

    ``points`` are kinks of f; the Gauss-Kronrod error estimate is blind to a
    jump in a higher derivative inside a panel, so they must be breakpoints.
    """
    points = list(points)
    if a == 0.0:
        rough = integrate_from_origin(f, b, 1e-3 * _scale_guess(f, 0.0, b), points=points)
        return integrate_from_origin(f, b, max(rel_tol * abs(rough.value), 1e-300),
                                     points=points)
    pts = np.concatenate([np.geomspace(a, b, 12)[1:-1], points])
    rough = integrate_adaptive(f, a, b, 1e-3 * _scale_guess(f, a, b), points=pts)
    return integrate_adaptive(f, a, b, max(rel_tol * abs(rough.value), 1e-300), points=pts)


def _scale_guess(f, a, b) -> float:
    s = np.geomspace(max(a, 1e-6 * b), b, 50)[:-1]
    with np.errstate(all="ignore"):
        vals = np.abs(np.asarray(f(s), dtype=float))
    vals = vals[np.isfinite(vals)]
    m = float(np.max(vals * s[: vals.size])) if vals.size else 1.0
    return m if m > 0 else 1e-300


def radial_integrands(Q: float, p: float, W: WeightFn, H: WeightFn, profile: TestProfile):
    def lhs(s):
        _, d1, _ = profile.derivatives(s)
        return np.power(s, Q - 1.0) * W(s) * np.abs(d1) ** p

    def rhs(s):
        f, _, _ = profile.derivatives(s)
        return np.power(s, Q - 1.0) * H(s) * np.abs(f) ** p

    return lhs, rhs


def hardy_radial(Q: float, p: float, W: WeightFn, H: WeightFn, profile: TestProfile,
                 tol: float = 1e-10, *, inner: float | None = None) -> InequalityReport:
    """1-D ratio int s^(Q-1) W |f'|^p / int s^(Q-1) H |f|^p over the profile support.

    ``tol`` is relative to each integral. ``inner`` (optional) starts both
    integrals at that radius instead of the support's inner edge, matching a
    Monte Carlo exclusion ball.
    """
    if profile.degenerate:
        return _ratio(0.0, 0.0, 0.0, 0.0, RADIAL, profile)
    a, b = profile.support
    if inner is not None:
        a = max(a, inner)
    lf, rf = radial_integrands(Q, p, W, H, profile)
    try:
        L = integrate_relative(lf, a, b, tol, profile.breakpoints)
        R = integrate_relative(rf, a, b, tol, profile.breakpoints)
    except QuadratureError as exc:
        raise QuadratureError(f"Hardy integrals: {exc}", exc.value, exc.abs_error,
                              exc.abscissa) from exc
    return _ratio(L.value, R.value, L.abs_error_estimate, R.abs_error_estimate, RADIAL, profile)


# ------------------------------------------------------------------ Monte Carlo


def gauge_ball_box(g: Geometry, R: float) -> tuple[np.ndarray, np.ndarray]:
    """Smallest axis box containing the closed gauge ball {d <= R}."""
    if g.name == "euclidean":
        half = np.full(g.n, R)
    elif g.name == "heisenberg1":
        half = np.array([R, R, R * R / 4.0])
    elif g.name == "grushin":
        k = int(dict(g.params)["k"])
        gamma = float(dict(g.params)["gamma"])
        half = np.concatenate([np.full(k, R),
                               np.full(g.n - k, R ** (1 + gamma) * gamma / (1 + gamma))])
    else:
        raise GaugeUnavailableError(f"no closed-form gauge for {g.name}")
    return -half, half


def default_exclusion(box) -> float:
    lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
    return 0.05 * float(np.min(hi - lo)) / 2.0


def _group_integrands(g: Geometry, p: float, W: WeightFn, H: WeightFn, profile: TestProfile):
    def both(x):
        d = g.gauge(x)
        psi = g.psi(x)
        f, d1, _ = profile.derivatives(d)
        wp = psi ** (p / 2.0)
        return np.column_stack([W(d) * wp * np.abs(d1) ** p, wp * H(d) * np.abs(f) ** p])
    return both


def _mc_ratio(g, p, W, H, profile, box, rho, samples, seed):
    volume, n_acc, sums, cross = mc_moments(
        _group_integrands(g, p, W, H, profile), box, (rho, g.gauge), samples, seed)
    mean, cov = mc_stats(volume, samples, sums, cross)
    lhs, rhs = float(mean[0]), float(mean[1])
    se_l, se_r = math.sqrt(max(cov[0, 0], 0.0)), math.sqrt(max(cov[1, 1], 0.0))
    if lhs == 0.0 or rhs == 0.0:
        return lhs, rhs, None, 0.0, se_l, se_r, n_acc
    ratio = lhs / rhs
    # delta method on the same samples: var(L/R) ~ r^2 (vL/L^2 + vR/R^2 - 2 cLR/(L R))
    rel_var = cov[0, 0] / lhs ** 2 + cov[1, 1] / rhs ** 2 - 2.0 * cov[0, 1] / (lhs * rhs)
    return lhs, rhs, ratio, abs(ratio) * math.sqrt(max(rel_var, 0.0)), se_l, se_r, n_acc


def hardy_group(g: Geometry, W: WeightFn, H: WeightFn, p: float, profile: TestProfile,
                box=None, exclusion: float | None = None, samples: int = 1_000_000,
                seed: int = 0) -> InequalityReport:
    """Monte Carlo ratio on a group with a closed-form gauge.

    ``box`` defaults to the smallest box around the support's gauge ball;
    ``exclusion`` to 5% of the smallest box half-width. The ratio is also
    recomputed with twice the exclusion radius (same seed) and reported as a
    sensitivity check.
    """
    if not g.has_gauge:
        raise GaugeUnavailableError(f"no closed-form gauge for {g.name}")
    if box is None:
        box = gauge_ball_box(g, profile.R)
    box = (np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float))
    if box[0].shape != (g.n,) or box[1].shape != (g.n,):
        raise ValueError(f"box must have {g.n} coordinates for {g.label}")
    if exclusion is None:
        exclusion = default_exclusion(box)
    if not exclusion > 0:
        raise ValueError("exclusion radius must be positive")
    if profile.degenerate:
        return _ratio(0.0, 0.0, 0.0, 0.0, MONTE_CARLO, profile, exclusion_radius=exclusion)
    lhs, rhs, ratio, unc, se_l, se_r, n_acc = _mc_ratio(g, p, W, H, profile, box, exclusion,
                                                        samples, seed)
    _, _, ratio2, unc2, _, _, _ = _mc_ratio(g, p, W, H, profile, box, 2 * exclusion,
                                            samples, seed)
    extra = {
        "samples": samples,
        "seed": seed,
        "exclusion_radius": exclusion,
        "acceptance": n_acc / samples,
        "box": [list(map(float, box[0])), list(map(float, box[1]))],
        "exclusion_sensitivity": {"exclusion_radius": 2 * exclusion, "ratio": ratio2,
                                  "uncertainty": unc2},
    }
    rep = _ratio(lhs, rhs, se_l, se_r, MONTE_CARLO, profile, **extra)
    if ratio is not None:
        rep.uncertainty = unc
    return rep


def mc_radial_consistency(g: Geometry, W: WeightFn, H: WeightFn, p: float,
                          profile: TestProfile, box=None, exclusion: float | None = None,
                          samples: int = 1_000_000, seed: int = 0, tol: float = 1e-10) -> dict:
    """Compare the Monte Carlo ratio with the 1-D ratio over the same gauge shell."""
    group = hardy_group(g, W, H, p, profile, box, exclusion, samples, seed)
    rho = group.extra["exclusion_radius"]
    radial = hardy_radial(g.Q, p, W, H, profile, tol, inner=rho)
    if group.ratio is None or radial.ratio is None:
        return {"gap": 0.0, "combined_uncertainty": 0.0, "consistent": True,
                "group": group.to_dict(), "radial": radial.to_dict(), "degenerate": True}
    gap = abs(group.ratio - radial.ratio) / radial.ratio
    combined = (group.uncertainty + radial.uncertainty) / radial.ratio
    return {"gap": gap, "combined_uncertainty": combined, "consistent": gap <= 3 * combined,
            "group": group.to_dict(), "radial": radial.to_dict(), "degenerate": False}


# -------------------------------------------------------------- best constants


@dataclass
class SearchResult:
    c_star: float
    params: dict
    converged: bool
    evaluations: int
    restarts: list

    def to_dict(self) -> dict:
        return {"c_star": self.c_star, "params": self.params, "converged": self.converged,
                "evaluations": self.evaluations, "restarts": self.restarts}


# finite stand-in for failed evaluations; inf breaks the simplex arithmetic
_PENALTY = 1e300

DEFAULT_BOUNDS = {
    "near_extremal": {"eps": (1e-4, 1.0)},
    "gaussian": {"sigma": (0.02, 2.0)},
    "bump": {"beta": (0.5, 8.0), "k": (1.0, 8.0)},
}


def best_constant_search(Q: float, p: float, W: WeightFn, H0: WeightFn,
                         family: TestProfile, bounds: dict | None = None, *,
                         maxiter: int = 200, restarts: int = 3,
                         tol: float = 1e-9) -> SearchResult:
    """Minimise the Rayleigh ratio lhs/rhs (with H = H0) over profile parameters.

    ``family`` is a template profile; the parameters named in ``bounds`` are
    varied (in log coordinates, all bounds must be positive) with the
    Nelder-Mead simplex from a grid of ``restarts`` starting points per
    parameter. Restarts run in parallel.
    """
    bounds = dict(bounds or DEFAULT_BOUNDS[family.family])
    names = sorted(bounds)
    lo = np.log([bounds[k][0] for k in names])
    hi = np.log([bounds[k][1] for k in names])
    if not np.all(hi > lo) or not np.all(np.isfinite(lo)):
        raise ValueError("bounds must be positive intervals")

    def ratio_at(z):
        z = np.clip(z, lo, hi)
        prof = family.with_params(**{k: float(np.exp(v)) for k, v in zip(names, z)})
        try:
            rep = hardy_radial(Q, p, W, H0, prof, tol)
        except (QuadratureError, DivergenceError):
            return _PENALTY
        return _PENALTY if rep.ratio is None else rep.ratio

    grid_1d = [lo + (hi - lo) * f for f in (0.2, 0.5, 0.8)][:restarts]
    if len(names) == 1:
        starts = [g for g in grid_1d]
    else:
        axes = [np.linspace(lo[i] + 0.2 * (hi[i] - lo[i]), hi[i] - 0.2 * (hi[i] - lo[i]), restarts)
                for i in range(len(names))]
        starts = [np.array(c) for c in np.array(np.meshgrid(*axes)).reshape(len(names), -1).T]

    def run(z0):
        res = minimize(ratio_at, z0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                       options={"maxiter": maxiter, "xatol": 1e-4, "fatol": 1e-9})
        return res

    threads = min(max_threads(), len(starts))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(z) for z in starts]
    best = min(results, key=lambda r: r.fun)
    params = {k: float(np.exp(v)) for k, v in zip(names, np.clip(best.x, lo, hi))}
    return SearchResult(float(best.fun), params, bool(best.success),
                        int(sum(r.nfev for r in results)),
                        [{"start": {k: float(np.exp(v)) for k, v in zip(names, z0)},
                          "ratio": float(r.fun), "success": bool(r.success)}
                         for z0, r in zip(starts, results)])


def ratio_sweep(Q: float, p: float, W: WeightFn, H: WeightFn, family: TestProfile,
                param: str, values, tol: float = 1e-10) -> list[tuple[float, float, float]]:
    """(value, ratio, uncertainty) along one profile parameter."""
    out = []
    for v in values:
        rep = hardy_radial(Q, p, W, H, family.with_params(**{param: float(v)}), tol)
        out.append((float(v), rep.ratio if rep.ratio is not None else math.nan, rep.uncertainty))
    return out
