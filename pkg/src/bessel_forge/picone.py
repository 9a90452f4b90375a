"""Pointwise checks of the first- and second-order Picone identities.

First order, for a matrix A(x) and p > 1:

    R = |grad u|_A^p - <A grad(|u|^p / v^(p-1)), |grad v|_A^(p-2) grad v>
    L = |grad u|_A^p - p (|u|/v)^(p-1) |grad v|_A^(p-2) <A grad|u|, grad v>
        + (p-1) (|u|/v)^p |grad v|_A^p

Second order (Euclidean Laplacian), with -Delta v > 0:

    R1 = |Delta|u||^p - Delta(|u|^p / v^(p-1)) |Delta v|^(p-2) Delta v
    L1 = |Delta|u||^p - p (|u|/v)^(p-1) Delta|u| |Delta v|^(p-2) Delta v
         + (p-1) (|u|/v)^p |Delta v|^p
         - p(p-1) |u|^(p-2)/v^(p-1) |Delta v|^(p-2) Delta v |grad|u| - (|u|/v) grad v|^2

R is always obtained by differencing the composite |u|^p / v^(p-1) as a
whole, L from derivatives of u and v separately, so the two sides share no
algebra. A complex u is passed as a pair (re, im) of real functions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from ._config import max_threads
from .errors import BesselForgeError, HypothesisViolation
from .geometry import Geometry, default_step, gradient_fd

EPS = np.finfo(float).eps


@dataclass
class PiconeSample:
    x: np.ndarray
    R: float
    L: float
    terms: dict
    h: float
    error_bound: float
    grad_modulus_gap: float = 0.0  # |grad u|_A - |grad |u||_A, must be >= 0


@dataclass
class PiconeSecondSample:
    x: np.ndarray
    R1: float
    L1: float
    neg_lap_v: float
    h: float
    terms: dict = field(default_factory=dict)
    error_bound: float = 0.0


class SkipPoint(BesselForgeError):
    """The point is too close to a zero of u for the modulus to be differentiated."""


def _parts(u) -> tuple[Callable, Callable | None]:
    if isinstance(u, tuple):
        return u[0], u[1]
    return u, None


def _modulus(u) -> Callable:
    f, g = _parts(u)
    if g is None:
        return lambda x: abs(f(x))
    return lambda x: float(np.hypot(f(x), g(x)))


def _signed_pow(x: float, e: float) -> float:
    return float(np.sign(x) * abs(x) ** e)


def _check_v(v: Callable, x: np.ndarray, h: float) -> float:
    vx = v(x)
    if not (np.isfinite(vx) and vx > 0):
        raise HypothesisViolation(f"v must be positive at {x.tolist()} (got {vx!r})")
    # the stencils reach x +- 2h; v must stay positive there too
    for j in range(x.size):
        for s in (-2.0, 2.0):
            y = x.copy()
            y[j] += s * h
            if not v(y) > 0:
                raise HypothesisViolation(f"v is not positive near {x.tolist()}")
    return float(vx)


def _check_away_from_zero(u, x: np.ndarray, h: float, factor: float = 10.0) -> None:
    f, g = _parts(u)
    mod = _modulus(u)(x)
    grads = [gradient_fd(f, x, h)] + ([] if g is None else [gradient_fd(g, x, h)])
    slope = float(np.sqrt(sum(gr @ gr for gr in grads)))
    if mod <= max(factor * h * slope, 1e-12):
        raise SkipPoint(f"|u| = {mod:.3g} too close to zero at {x.tolist()}")


def _first_order_sides(g: Geometry, u, v, p: float, x: np.ndarray, h: float):
    A = g.a_matrix(x)
    f, im = _parts(u)
    mod = _modulus(u)
    ux = mod(x)
    vx = v(x)
    gf = gradient_fd(f, x, h)
    grad_u_sq = gf @ A @ gf
    gmod = gf * np.sign(f(x)) if im is None else None
    if im is not None:
        gi = gradient_fd(im, x, h)
        grad_u_sq += gi @ A @ gi
        gmod = (f(x) * gf + im(x) * gi) / ux
    gv = gradient_fd(v, x, h)
    nv2 = gv @ A @ gv
    nv = np.sqrt(max(nv2, 0.0))
    grad_u_p = max(grad_u_sq, 0.0) ** (p / 2)
    vp2 = nv ** (p - 2) if nv > 0 else (0.0 if p > 2 else 1.0)

    composite = lambda y: mod(y) ** p / v(y) ** (p - 1)
    gc = gradient_fd(composite, x, h)
    R = grad_u_p - vp2 * (gc @ A @ gv)

    t2 = p * (ux / vx) ** (p - 1) * vp2 * (gmod @ A @ gv)
    t3 = (p - 1) * (ux / vx) ** p * nv ** p
    L = grad_u_p - t2 + t3
    gap = np.sqrt(max(grad_u_sq, 0.0)) - np.sqrt(max(gmod @ A @ gmod, 0.0))
    terms = {"grad_u_p": float(grad_u_p), "cross": float(-t2), "v_term": float(t3)}
    return float(R), float(L), terms, float(gap)


def picone_first(g: Geometry, u, v: Callable, p: float, x, h: float | None = None) -> PiconeSample:
    """Both sides of the first-order identity at x (Euclidean gradients, A from g)."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    x = np.asarray(x, dtype=float)
    if h is None:
        h = default_step(x)
    _check_v(v, x, h)
    _check_away_from_zero(u, x, h)
    R, L, terms, gap = _first_order_sides(g, u, v, p, x, h)
    R2, L2, _, _ = _first_order_sides(g, u, v, p, x, 2 * h)
    # h^2 truncation: error at h is about a third of the h / 2h difference
    scale = max(abs(R), abs(L), *map(abs, terms.values()), 1.0)
    bound = (abs(R - R2) + abs(L - L2)) / 3.0 + 100 * EPS * scale / h * max(1.0, float(np.max(np.abs(x))))
    return PiconeSample(x, R, L, terms, h, float(bound), gap)


def laplacian_fd(f: Callable, x: np.ndarray, h: float) -> float:
    """Second-order central-difference Laplacian in the coordinate directions."""
    fx = f(x)
    total = 0.0
    for j in range(x.size):
        e = np.zeros(x.size)
        e[j] = h
        total += f(x + e) - 2.0 * fx + f(x - e)
    return float(total / h ** 2)


def _second_order_sides(u, v, p, x, h, h1):
    mod = _modulus(u)
    ux, vx = mod(x), v(x)
    lap_v = laplacian_fd(v, x, h)
    lap_u = laplacian_fd(mod, x, h)
    composite = lambda y: mod(y) ** p / v(y) ** (p - 1)
    lap_c = laplacian_fd(composite, x, h)
    sv = _signed_pow(lap_v, p - 1)  # |Delta v|^(p-2) Delta v
    R1 = abs(lap_u) ** p - lap_c * sv
    gu = gradient_fd(mod, x, h1)
    gv = gradient_fd(v, x, h1)
    diff = gu - (ux / vx) * gv
    t2 = p * (ux / vx) ** (p - 1) * lap_u * sv
    t3 = (p - 1) * (ux / vx) ** p * abs(lap_v) ** p
    t4 = p * (p - 1) * ux ** (p - 2) / vx ** (p - 1) * sv * float(diff @ diff)
    L1 = abs(lap_u) ** p - t2 + t3 - t4
    terms = {"lap_abs_u_p": abs(lap_u) ** p, "cross": -t2, "v_term": t3, "gradient_term": -t4}
    return float(R1), float(L1), float(lap_v), terms


def picone_second(u, v: Callable, p: float, n: int, x, h: float | None = None) -> PiconeSecondSample:
    """Both sides of the second-order identity at x; needs v > 0 and -Delta v > 0."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"point must have {n} coordinates")
    scale = max(1.0, float(np.max(np.abs(x))))
    if h is None:
        h = EPS ** 0.25 * scale
    h1 = EPS ** (1.0 / 3.0) * scale
    _check_v(v, x, h)
    _check_away_from_zero(u, x, h)
    R1, L1, lap_v, terms = _second_order_sides(u, v, p, x, h, h1)
    if not -lap_v > 0:
        raise HypothesisViolation(f"-Delta v = {-lap_v:.6g} <= 0 at {x.tolist()}")
    R1b, L1b, _, _ = _second_order_sides(u, v, p, x, 2 * h, 2 * h1)
    mag = max(abs(R1), abs(L1), *map(abs, terms.values()), 1.0)
    bound = (abs(R1 - R1b) + abs(L1 - L1b)) / 3.0 + 100 * EPS * mag * scale ** 2 / h ** 2
    return PiconeSecondSample(x, R1, L1, -lap_v, h, terms, float(bound))


# ----------------------------------------------------------------------- sweeps


@dataclass
class SweepSummary:
    count: int
    evaluated: int
    max_rel_diff: float
    min_L: float
    violations: list = field(default_factory=list)
    skipped: int = 0
    errors: list = field(default_factory=list)
    max_error_bound: float = 0.0
    min_modulus_gap: float = float("inf")

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "evaluated": self.evaluated,
            "max_rel_diff": self.max_rel_diff,
            "min_L": self.min_L,
            "violations": [list(map(float, x)) for x in self.violations],
            "skipped": self.skipped,
            "errors": list(self.errors),
            "max_error_bound": self.max_error_bound,
            "min_modulus_gap": self.min_modulus_gap,
        }


def picone_sweep(g: Geometry | None, u, v, p: float, sampler: Iterable, count: int, *,
                 order: int = 1, tolerance: float = 1e-7) -> SweepSummary:
    """Evaluate the identity at ``count`` points drawn from ``sampler``.

    ``sampler`` yields points, or ``(u, v, x)`` triples when the test pair
    changes from point to point. Per-point failures are collected, not raised.
    For ``order=2`` the geometry is ignored (Euclidean Laplacian).
    """
    items = []
    it = iter(sampler)
    for _ in range(count):
        item = next(it)
        items.append(item if isinstance(item, tuple) and len(item) == 3 else (u, v, item))

    def one(item):
        uu, vv, x = item
        x = np.asarray(x, dtype=float)
        try:
            if order == 1:
                s = picone_first(g, uu, vv, p, x)
                return x, s.R, s.L, s.error_bound, s.grad_modulus_gap, None
            s = picone_second(uu, vv, p, x.size, x)
            return x, s.R1, s.L1, s.error_bound, np.inf, None
        except SkipPoint:
            return x, None, None, None, None, "skip"
        except (BesselForgeError, ValueError, FloatingPointError) as exc:
            return x, None, None, None, None, f"{type(exc).__name__}: {exc}"

    threads = min(max_threads(), len(items)) or 1
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(i) for i in items]
    out = SweepSummary(count, 0, 0.0, float("inf"))
    for x, R, L, bound, gap, err in results:
        if err == "skip":
            out.skipped += 1
            continue
        if err is not None:
            out.errors.append(f"{x.tolist()}: {err}")
            continue
        out.evaluated += 1
        out.max_rel_diff = max(out.max_rel_diff, abs(R - L) / (1.0 + abs(R)))
        out.min_L = min(out.min_L, L)
        out.max_error_bound = max(out.max_error_bound, bound)
        out.min_modulus_gap = min(out.min_modulus_gap, gap)
        if L < -tolerance:
            out.violations.append(x)
    return out


# --------------------------------------------------------- seeded test families


def random_smooth_pair(n: int, rng: np.random.Generator, complex_u: bool = False):
    """A random smooth u (real or complex pair) and a positive v on R^n."""

    def poly_trig(rng):
        a0 = rng.uniform(0.5, 1.5)
        a = rng.uniform(-1, 1, n)
        B = rng.uniform(-0.5, 0.5, (n, n))
        B = B + B.T
        w = rng.uniform(-2, 2, n)
        c = rng.uniform(-0.5, 0.5)
        return lambda x: float(a0 + a @ x + 0.5 * x @ B @ x + c * np.sin(w @ x))

    u = (poly_trig(rng), poly_trig(rng)) if complex_u else poly_trig(rng)
    b = rng.uniform(-0.5, 0.5, n)
    kappa = rng.uniform(0.1, 1.0)
    c0 = rng.uniform(-0.5, 0.5)
    v = lambda x: float(np.exp(c0 + b @ x - 0.5 * kappa * (x @ x)))
    return u, v


def random_superharmonic_pair(n: int, rng: np.random.Generator, box: float = 1.0):
    """Random u and v = c1 |x - x0|^alpha + c2 (C - |x|^2) with -Delta v > 0.

    alpha in (2 - n, 0) makes the first term superharmonic away from x0; the
    second is a concave paraboloid kept positive on the sampling box.
    """
    x0 = rng.uniform(-3 * box, 3 * box, n)
    x0 *= 2.5 * box * np.sqrt(n) / max(np.linalg.norm(x0), 1e-12)  # outside the box
    alpha = rng.uniform(2 - n + 0.1, -0.1)
    c1 = rng.uniform(0.5, 2.0)
    c2 = rng.uniform(0.1, 1.0)
    C = n * box * box + rng.uniform(0.5, 1.5)
    a0 = rng.uniform(0.5, 1.5)
    a = rng.uniform(-1, 1, n)
    sig = rng.uniform(0.5, 1.5)
    u = lambda x: float((a0 + a @ x) * np.exp(-(x @ x) / (2 * sig * sig)))
    v = lambda x: float(c1 * np.linalg.norm(x - x0) ** alpha + c2 * (C - x @ x))
    return u, v


def seeded_sampler(g: Geometry, seed: int, *, order: int = 1, complex_u: bool = False,
                   box: float = 1.0):
    """Endless (u, v, x) triples from a fixed seed."""
    rng = np.random.default_rng(seed)
    while True:
        if order == 1:
            u, v = random_smooth_pair(g.n, rng, complex_u)
        else:
            u, v = random_superharmonic_pair(g.n, rng, box)
        x = rng.uniform(-box, box, g.n)
        yield u, v, x


def modulus_gradient_gap(g: Geometry, u: tuple, x, h: float | None = None) -> float:
    """|grad u|_A - |grad |u||_A for complex u = (re, im); nonnegative in theory."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = default_step(x)
    A = g.a_matrix(x)
    f, im = u
    gf, gi = gradient_fd(f, x, h), gradient_fd(im, x, h)
    gm = gradient_fd(_modulus(u), x, h)
    return float(np.sqrt(gf @ A @ gf + gi @ A @ gi) - np.sqrt(max(gm @ A @ gm, 0.0)))


__all__ = ["PiconeSample", "PiconeSecondSample", "picone_first", "picone_second",
           "picone_sweep", "SweepSummary", "seeded_sampler", "random_smooth_pair",
           "random_superharmonic_pair", "modulus_gradient_gap", "laplacian_fd"]
