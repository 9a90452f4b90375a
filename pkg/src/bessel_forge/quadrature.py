"""One-dimensional adaptive quadrature and box Monte Carlo.

``integrate_adaptive`` is a globally adaptive Gauss-Kronrod (10/21) scheme.
The rule is open, so integrable endpoint singularities are handled by
bisection alone. ``integrate_tail`` adds semi-infinite upper limits using a
power-tail majorant, and ``integrate_from_origin`` the mirror-image analytic
head for integrands that behave like ``C s^e`` at zero.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._config import max_threads
from .errors import DivergenceError, MonteCarloError, QuadratureError
from .weights import DecayInfo, WeightDomainError

EPS = np.finfo(float).eps

# QUADPACK qk21 abscissae and weights (positive half, centre last)
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208323766040, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# full 21-point node set on [-1, 1] and matching weight vectors
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[[1, 3, 5, 7, 9]] = _WG
GAUSS_WEIGHTS[[19, 17, 15, 13, 11]] = _WG


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    tail_truncation_radius: float | None = None
    certified_tail: bool = True
    intervals: int = 1


@dataclass(frozen=True)
class MCResult:
    value: float
    std_error: float
    samples: int
    exclusion_radius: float
    acceptance: float = 1.0


def _as_vector_fn(f: Callable, vectorized: bool) -> Callable[[np.ndarray], np.ndarray]:
    if vectorized:
        return f
    return lambda x: np.fromiter((f(float(t)) for t in x), dtype=float, count=len(x))


def gk21_panels(f, lo: np.ndarray, hi: np.ndarray):
    """Apply the 21-point rule to every interval [lo_i, hi_i] in one call."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    try:
        with np.errstate(all="ignore"):
            y = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    except WeightDomainError as exc:
        raise QuadratureError(f"integrand failed: {exc}", abscissa=exc.r) from exc
    bad = ~np.isfinite(y)
    if bad.any():
        i = np.flatnonzero(bad.ravel())[0]
        t = float(x.ravel()[i])
        raise QuadratureError(f"non-finite integrand at x={t!r}", abscissa=t)
    k = half * (y @ KRONROD_WEIGHTS)
    g = half * (y @ GAUSS_WEIGHTS)
    resabs = np.abs(half) * (np.abs(y) @ KRONROD_WEIGHTS)
    err = np.maximum(np.abs(k - g), 50.0 * EPS * resabs)
    return k, err, resabs


def integrate_adaptive(f: Callable, a: float, b: float, tol: float = 1e-10, *,
                       points: Sequence[float] | None = None,
                       max_evals: int = 1_000_000,
                       vectorized: bool = True) -> QuadResult:
    """Integrate ``f`` over [a, b] to absolute tolerance ``tol``.

    ``f`` takes a float array and returns an array of the same shape unless
    ``vectorized=False``. ``points`` are extra initial breakpoints. The
    interval with the largest error estimate is bisected until the summed
    estimate is below ``tol`` (or the roundoff floor).
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    fv = _as_vector_fn(f, vectorized)
    edges = [a]
    if points is not None:
        edges.extend(sorted(float(p) for p in points if a < p < b))
    edges.append(b)
    edges = np.unique(np.asarray(edges, dtype=float))
    lo, hi = edges[:-1], edges[1:]
    vals, errs, _ = gk21_panels(fv, lo, hi)
    evals = 21 * len(lo)
    heap = [(-e, l, h, v) for l, h, v, e in zip(lo.tolist(), hi.tolist(), vals.tolist(), errs.tolist())]
    heapq.heapify(heap)
    frozen: list[tuple[float, float]] = []  # (value, err) of unsplittable intervals
    total_err = float(np.sum(errs))
    since_resum = 0
    while heap:
        if total_err <= tol:
            break
        if evals + 42 > max_evals:
            value = sum(v for *_, v in heap) + sum(v for v, _ in frozen)
            raise QuadratureError(
                f"no convergence after {evals} evaluations (error {total_err:.3g} > tol {tol:.3g})",
                value=value, abs_error=total_err)
        neg_e, l, h, v = heapq.heappop(heap)
        m = 0.5 * (l + h)
        if not (l < m < h) or (h - l) <= 1e-300 or (h - l) <= 4 * EPS * max(abs(l), abs(h)):
            frozen.append((v, -neg_e))
            continue
        vv, ee, _ = gk21_panels(fv, np.array([l, m]), np.array([m, h]))
        evals += 42
        for lo_, hi_, val, er in ((l, m, vv[0], ee[0]), (m, h, vv[1], ee[1])):
            heapq.heappush(heap, (-float(er), lo_, hi_, float(val)))
        total_err += float(ee[0] + ee[1]) + neg_e
        since_resum += 1
        if since_resum >= 200:
            total_err = sum(-e for e, *_ in heap) + sum(e for _, e in frozen)
            since_resum = 0
    # Neumaier-free but ordered summation keeps the result deterministic
    pieces = sorted((l, v, -e) for e, l, h, v in heap)
    value = math.fsum([v for _, v, _ in pieces] + [v for v, _ in frozen])
    err = math.fsum([e for *_, e in pieces] + [e for _, e in frozen])
    if err > tol and frozen:
        raise QuadratureError(
            f"intervals became unsplittable with error {err:.3g} > tol {tol:.3g}",
            value=value, abs_error=err)
    return QuadResult(value, err, evals, intervals=len(pieces) + len(frozen))


# --------------------------------------------------------------------- tails


def _decay_value(decay) -> tuple[float | None, bool]:
    """Normalise ``decay`` to (exponent or None, certified flag)."""
    if decay is None:
        return None, False
    if isinstance(decay, DecayInfo):
        return decay.exponent, decay.certified
    return float(decay), True


TAIL_SAFETY = 2.0
MAX_RADIUS = 1e300


def integrate_tail(f: Callable, a: float, decay=None, tol: float = 1e-10, *,
                   vectorized: bool = True, panel_ratio: float = 4.0,
                   max_panels: int = 600) -> QuadResult:
    """Integrate ``f`` over [a, inf).

    ``decay`` is the exponent ``e`` with ``f(s) ~ C s^e`` (a float, a
    :class:`DecayInfo`, or ``None`` for unknown). With a known exponent the
    range is cut at the first panel edge R where the power-tail majorant
    ``2 |f(R)| R / |e + 1|`` is below ``tol/2``; the asymptotic tail is added
    to the value and the majorant to the error. With unknown decay, panels
    are doubled until two successive increments are below ``tol/2`` and the
    result is flagged as heuristic.
    """
    if not a >= 0:
        raise ValueError("tail integrals need a >= 0")
    exponent, certified = _decay_value(decay)
    if exponent is not None and exponent >= -1.0:
        raise DivergenceError(
            f"integrand decays like s^{exponent:.6g}; exponent >= -1 makes the tail infinite")
    fv = _as_vector_fn(f, vectorized)
    ratio = panel_ratio if exponent is not None else 2.0
    panel_tol = 0.25 * tol
    total = 0.0
    err = 0.0
    evals = 0
    intervals = 0
    left = a
    small_increments = 0
    for k in range(max_panels):
        # first panel has length max(a, 1) so tiny or zero a still makes progress
        right = float(a + max(a, 1.0)) if k == 0 else left * ratio
        if right > MAX_RADIUS:
            break
        res = integrate_adaptive(fv, left, right, panel_tol)
        total += res.value
        err += res.abs_error_estimate
        evals += res.evaluations
        intervals += res.intervals
        panel_tol = max(0.5 * panel_tol, 1e-300)
        left = right
        if exponent is not None:
            fr = float(np.asarray(fv(np.array([right])), dtype=float)[0])
            evals += 1
            tail = fr * right / abs(exponent + 1.0)
            bound = TAIL_SAFETY * abs(tail)
            if bound <= 0.5 * tol:
                return QuadResult(total + tail, err + bound, evals, right,
                                  certified_tail=certified, intervals=intervals)
        else:
            if abs(res.value) < 0.5 * tol:
                small_increments += 1
                if small_increments >= 2:
                    return QuadResult(total, err + abs(res.value), evals, right,
                                      certified_tail=False, intervals=intervals)
            else:
                small_increments = 0
    what = "tail truncation radius unattainable" if exponent is not None \
        else "tail doubling did not converge"
    raise QuadratureError(what, value=total, abs_error=math.inf)


HEAD_DEPTHS = (1e-150, 1e-100, 1e-60, 1e-30, 1e-15)


def probe_origin_power(f: Callable, b: float, vectorized: bool = True):
    """Return ``(delta, exponent, spread)`` if ``f(s) ~ C s^e`` cleanly near 0.

    Probes a window [delta*1e-4, delta] for the deepest delta in
    ``HEAD_DEPTHS * b`` where ``f`` is finite and single-signed. Returns
    ``None`` when no clean power law is found. An identically zero window
    gives ``exponent = inf``.
    """
    fv = _as_vector_fn(f, vectorized)
    windows = {}
    for depth in HEAD_DEPTHS:
        delta = depth * b
        s = delta * np.geomspace(1e-4, 1.0, 9)
        try:
            with np.errstate(all="ignore"):
                windows[depth] = np.asarray(fv(s), dtype=float)
        except (WeightDomainError, ArithmeticError, ValueError):
            windows[depth] = None
    for i, depth in enumerate(HEAD_DEPTHS):
        delta = depth * b
        s = delta * np.geomspace(1e-4, 1.0, 9)
        vals = windows[depth]
        if vals is None or not np.all(np.isfinite(vals)):
            continue
        if np.all(vals == 0.0):
            # zero here but not further out is underflow, not a true zero
            if all(w is not None and np.all(w == 0.0) for w in
                   (windows[d] for d in HEAD_DEPTHS[i:])):
                return delta, math.inf, 0.0
            continue
        if not (np.all(vals > 0) or np.all(vals < 0)):
            continue
        slopes = np.diff(np.log(np.abs(vals))) / np.diff(np.log(s))
        spread = float(np.ptp(slopes))
        if spread <= 1e-6:
            return delta, float(slopes[-1]), spread
    return None


def integrate_from_origin(f: Callable, b: float, tol: float = 1e-10, *,
                          points: Sequence[float] | None = None,
                          vectorized: bool = True) -> QuadResult:
    """Integrate ``f`` over (0, b] where ``f`` may be singular at 0.

    When ``f`` is a clean power ``C s^e`` near the origin the piece (0, delta]
    is taken analytically as ``f(delta) delta / (e + 1)`` and (delta, b] is
    integrated adaptively with decade breakpoints; ``e <= -1`` is reported as
    divergence. Otherwise the whole range goes to :func:`integrate_adaptive`
    with decade breakpoints down to ``1e-300 b`` and the result is flagged.
    ``points`` adds breakpoints (kinks of f) to either path.
    """
    if not b > 0:
        raise ValueError("need b > 0")
    fv = _as_vector_fn(f, vectorized)
    extra = [] if points is None else list(points)
    probe = probe_origin_power(fv, b)
    if probe is None:
        pts = np.concatenate([b * np.logspace(-300, 0, 301)[:-1], extra])
        res = integrate_adaptive(fv, 0.0, b, tol, points=pts)
        return QuadResult(res.value, res.abs_error_estimate, res.evaluations,
                          certified_tail=False, intervals=res.intervals)
    delta, e, spread = probe
    if e <= -1.0:
        raise DivergenceError(f"integrand behaves like s^{e:.6g} at 0; not integrable")
    if math.isinf(e):
        head, head_err = 0.0, 0.0
    else:
        fd = float(np.asarray(fv(np.array([delta])), dtype=float)[0])
        head = fd * delta / (e + 1.0)
        # exponent uncertainty ~ slope spread; d/de [1/(e+1)] = -1/(e+1)^2
        head_err = abs(head) * (spread + 1e-13) / (e + 1.0)
    decades = int(round(-math.log10(delta / b)))
    pts = np.concatenate([b * np.logspace(-decades, 0, decades + 1)[:-1], extra])
    res = integrate_adaptive(fv, delta, b, max(tol - head_err, 0.5 * tol), points=pts)
    return QuadResult(res.value + head, res.abs_error_estimate + head_err,
                      res.evaluations + 10, intervals=res.intervals)


# ---------------------------------------------------------------- Monte Carlo

MC_CHUNK = 1 << 16


def _chunk_moments(f, lo, hi, gauge, rho, n, seq):
    rng = np.random.default_rng(seq)
    x = lo + (hi - lo) * rng.random((n, lo.size))
    accepted = np.ones(n, dtype=bool) if gauge is None else np.asarray(gauge(x)) >= rho
    vals = np.zeros((n, 0))
    if accepted.any():
        with np.errstate(all="ignore"):
            fx = np.asarray(f(x[accepted]), dtype=float)
        fx = fx.reshape(int(accepted.sum()), -1)
        bad = ~np.isfinite(fx)
        if bad.any():
            i = np.flatnonzero(bad.any(axis=1))[0]
            raise MonteCarloError(f"non-finite integrand at accepted point {x[accepted][i].tolist()}")
        vals = np.zeros((n, fx.shape[1]))
        vals[accepted] = fx
    return int(accepted.sum()), vals.sum(axis=0), vals.T @ vals


def mc_moments(f: Callable, box, exclusion=None, samples: int = 100_000, seed: int = 0):
    """Shared sampler: returns (volume, accepted, sums, cross products).

    ``f`` maps an (N, n) array of points to (N,) or (N, m) values.
    ``exclusion`` is ``(rho, gauge)``; points with ``gauge(x) < rho`` are
    rejected (their contribution is zero).
    """
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    if lo.shape != hi.shape or not np.all(hi > lo):
        raise ValueError("box must be (lo, hi) with hi > lo componentwise")
    if samples < 1000:
        raise ValueError("mc integration needs at least 1000 samples")
    rho, gauge = (0.0, None) if exclusion is None else exclusion
    if gauge is not None:
        _check_exclusion_inside(lo, hi, rho, gauge, seed)
    counts = [MC_CHUNK] * (samples // MC_CHUNK)
    if samples % MC_CHUNK:
        counts.append(samples % MC_CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(len(counts))
    jobs = list(zip(counts, seqs))
    threads = min(max_threads(), len(jobs))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda j: _chunk_moments(f, lo, hi, gauge, rho, *j), jobs))
    else:
        parts = [_chunk_moments(f, lo, hi, gauge, rho, *j) for j in jobs]
    accepted = sum(p[0] for p in parts)
    width = max(p[1].size for p in parts)
    sums = np.zeros(width)
    cross = np.zeros((width, width))
    for _, s, c in parts:  # fixed order: deterministic for any thread count
        if s.size:
            sums += s
            cross += c
    if accepted < 0.01 * samples:
        raise MonteCarloError(
            f"acceptance ratio {accepted / samples:.3%} below 1%; exclusion radius too large")
    volume = float(np.prod(hi - lo))
    return volume, accepted, sums, cross


def _check_exclusion_inside(lo, hi, rho, gauge, seed):
    if not np.all((lo < 0) & (hi > 0)):
        raise MonteCarloError("box must contain the origin of the exclusion ball")
    rng = np.random.default_rng([seed, 7919])
    n = lo.size
    pts = lo + (hi - lo) * rng.random((256 * n, n))
    for j in range(n):
        pts[256 * j: 256 * j + 128, j] = lo[j]
        pts[256 * j + 128: 256 * (j + 1), j] = hi[j]
    if np.min(gauge(pts)) <= rho:
        raise MonteCarloError("exclusion gauge ball is not strictly inside the box")


def mc_stats(volume: float, samples: int, sums: np.ndarray, cross: np.ndarray):
    """Means and covariance of the per-sample estimators volume * f(x) * 1[acc]."""
    mean = volume * sums / samples
    second = volume ** 2 * cross / samples
    cov = (second - np.outer(mean, mean)) * samples / (samples - 1)
    return mean, cov / samples


def mc_integrate(f: Callable, box, exclusion=None, samples: int = 100_000,
                 seed: int = 0) -> MCResult:
    """Uniform Monte Carlo over an axis-aligned box minus a gauge ball.

    Deterministic for a given ``seed`` regardless of ``BESSEL_FORGE_THREADS``.
    """
    volume, accepted, sums, cross = mc_moments(
        lambda x: np.asarray(f(x), dtype=float).reshape(-1, 1), box, exclusion, samples, seed)
    mean, cov = mc_stats(volume, samples, sums, cross)
    rho = 0.0 if exclusion is None else float(exclusion[0])
    return MCResult(float(mean[0]), float(math.sqrt(max(cov[0, 0], 0.0))), samples, rho,
                    accepted / samples)
