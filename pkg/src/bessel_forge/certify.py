"""Sufficient conditions for a Bessel pair.

For coefficients a(s) > 0 and b(s) > 0 on [r0, inf) the check is

    phi(r) = 2 * int_r^inf b(s) ds < inf,
    I(r0)  = int_{r0}^inf (phi(s) / a(s))^(1/(p-1)) ds <= 1 / (2 (p - 1)).

A radial pair (W, H) in homogeneous dimension Q uses a = s^(Q-1) W and
b = s^(Q-1) H. phi is tabulated once on a geometric grid and interpolated
monotonically in log-log coordinates; every approximation made on the way
is added to an error budget so that a "certified" verdict survives it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DivergenceError, QuadratureError, WeightDomainError
from .quadrature import gk21_panels, integrate_adaptive, integrate_tail
from .weights import DecayInfo, WeightFn, decay_exponent, probe_decay

CERTIFIED = "certified"
NOT_CERTIFIED = "not-certified"
DIVERGENT = "divergent-2.9"


@dataclass(frozen=True)
class Coefficient:
    """A positive radial coefficient with its tail information."""

    func: Callable[[np.ndarray], np.ndarray]
    decay: DecayInfo
    label: str = ""

    @classmethod
    def wrap(cls, f, decay=None, label: str = "") -> "Coefficient":
        if isinstance(f, Coefficient):
            return f
        if isinstance(f, WeightFn):
            return cls(f, decay_exponent(f) if decay is None else _as_decay(decay), f.text)
        fv = lambda s, f=f: np.asarray(f(s), dtype=float) * np.ones_like(s)
        if decay is None:
            return cls(fv, probe_decay(fv), label)
        return cls(fv, _as_decay(decay), label)

    def __call__(self, s):
        return self.func(s)


def _as_decay(decay) -> DecayInfo:
    if isinstance(decay, DecayInfo):
        return decay
    return DecayInfo(float(decay), "declared")


def radial_coefficient(f: WeightFn, Q: float) -> Coefficient:
    """s^(Q-1) f(s) with the tail exponent shifted by Q-1."""
    d = decay_exponent(f)
    shifted = DecayInfo(None if d.exponent is None else d.exponent + Q - 1.0, d.source,
                        d.log_correction, d.log_power, d.residual)
    return Coefficient(lambda s: np.power(s, Q - 1.0) * f(s), shifted,
                       f"s^{Q - 1.0:g}*({f.text})")


@dataclass
class Certificate:
    verdict: str
    bound: float
    p: float
    r0: float
    phi_at_r0: float | None = None
    criterion_integral: float | None = None
    error_budget: float = 0.0
    certified_tail: bool = False
    notes: list[str] = field(default_factory=list)
    budget_parts: dict = field(default_factory=dict)
    phi_grid: tuple | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "bound": self.bound,
            "p": self.p,
            "r0": self.r0,
            "phi_at_r0": self.phi_at_r0,
            "criterion_integral": self.criterion_integral,
            "error_budget": self.error_budget,
            "budget_parts": dict(self.budget_parts),
            "certified_tail": self.certified_tail,
            "notes": list(self.notes),
        }


def _tail_from(b: Coefficient, r: float, rel_tol: float):
    """int_r^inf b with tolerance relative to the scale b(r) r."""
    scale = abs(float(b(np.array([r]))[0])) * r
    tol = max(rel_tol * scale, 1e-300)
    return integrate_tail(b, r, b.decay if b.decay.known else None, tol)


def phi(H: WeightFn, Q: float, r: float, tol: float = 1e-10) -> float:
    """phi(r) = 2 int_r^inf s^(Q-1) H(s) ds; raises DivergenceError if infinite."""
    b = radial_coefficient(H, Q)
    return 2.0 * integrate_tail(b, r, b.decay if b.decay.known else None, 0.5 * tol).value


@dataclass
class PhiTable:
    """phi on a geometric grid, accumulated right to left from one tail integral."""

    s: np.ndarray
    values: np.ndarray
    rel_error: float
    certified_tail: bool
    last_positive: int  # index of the last node with phi > 0

    def interpolant(self, stride: int = 1) -> Callable[[np.ndarray], np.ndarray]:
        idx = np.arange(0, self.last_positive + 1, stride)
        if idx[-1] != self.last_positive:
            idx = np.append(idx, self.last_positive)
        if idx.size < 2:
            s_end = self.s[self.last_positive]
            v_end = self.values[self.last_positive]
            return lambda x: np.where(x <= s_end, v_end, 0.0)
        ls = np.log(self.s[idx])
        spline = PchipInterpolator(ls, np.log(self.values[idx]), extrapolate=False)
        s_end = self.s[self.last_positive]

        def interp(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            inside = x <= s_end
            out[inside] = np.exp(spline(np.log(np.clip(x[inside], self.s[0], s_end))))
            return out

        return interp


UNDERFLOW_LEVEL = 1e-250


def _require_positive(vals: np.ndarray, s: np.ndarray, name: str) -> None:
    """Strict positivity, except exact zeros reached by underflow of a decaying tail."""
    bad = ~(vals >= 0.0)
    zero = np.flatnonzero(vals == 0.0)
    if zero.size:
        i = zero[0]
        if i == 0 or vals[i - 1] > UNDERFLOW_LEVEL or np.any(vals[i:] != 0.0):
            bad[i] = True
    if bad.any():
        raise WeightDomainError(f"coefficient {name} must be positive", float(s[bad][0]))


def build_phi_table(b: Coefficient, r0: float, nodes_per_decade: int = 512,
                    decades: int = 6, rel_tol: float = 1e-13) -> PhiTable:
    count = nodes_per_decade * decades
    s = r0 * np.power(10.0, np.arange(count + 1) / nodes_per_decade)
    _require_positive(np.asarray(b(s), dtype=float), s, "b")
    tail = _tail_from(b, float(s[-1]), rel_tol)
    lo, hi = s[:-1], s[1:]
    panel, err, _ = gk21_panels(b, lo, hi)
    loose = np.flatnonzero(err > rel_tol * np.abs(panel))
    for i in loose:
        res = integrate_adaptive(b, lo[i], hi[i], max(rel_tol * abs(panel[i]), 1e-300))
        panel[i], err[i] = res.value, res.abs_error_estimate
    # phi_i = 2 (tail + sum_{j >= i} panel_j), summed from the right
    acc = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]]) + tail.value
    acc_err = np.concatenate([np.cumsum(err[::-1])[::-1], [0.0]]) + tail.abs_error_estimate
    values = 2.0 * acc
    positive = values > 0.0
    if not positive[0]:
        raise WeightDomainError("phi vanished at r0 (b underflows)", r0)
    last = int(np.flatnonzero(positive)[-1])
    rel = float(np.max(acc_err[:last + 1] / acc[:last + 1]))
    return PhiTable(s, values, rel, tail.certified_tail, last)


def certify_general(a, b, p: float, r0: float, tol: float = 1e-10, *,
                    a_decay=None, b_decay=None, nodes_per_decade: int = 512,
                    decades: int = 6) -> Certificate:
    """Check the sufficient conditions for coefficients a, b on [r0, inf).

    ``a`` and ``b`` are :class:`WeightFn` objects or vectorized callables.
    Decays are taken from ``a_decay``/``b_decay`` when given, otherwise from
    the weight's declaration or a probe.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    a = Coefficient.wrap(a, a_decay)
    b = Coefficient.wrap(b, b_decay)
    bound = 1.0 / (2.0 * (p - 1.0))
    q = 1.0 / (p - 1.0)
    cert = Certificate(NOT_CERTIFIED, bound, p, r0)
    try:
        table = build_phi_table(b, r0, nodes_per_decade, decades)
    except (DivergenceError, QuadratureError) as exc:
        cert.verdict = DIVERGENT
        cert.notes.append(f"phi is infinite: {exc}")
        return cert
    cert.phi_at_r0 = float(table.values[0])
    cert.phi_grid = (table.s[:table.last_positive + 1].copy(),
                     table.values[:table.last_positive + 1].copy())
    if not b.decay.known:
        cert.notes.append("tail of b has unknown decay; phi tail is heuristic")
    if b.decay.log_correction:
        cert.notes.append("tail of b has a logarithmic correction; phi tail bound is heuristic")

    _require_positive(np.asarray(a(table.s), dtype=float), table.s, "a")

    s_end = float(table.s[-1])

    def criterion(interp):
        def c(s):
            return np.power(interp(s) / a(s), q)
        return integrate_adaptive(c, r0, s_end, 0.25 * tol, points=table.s[1:-1])

    fine = criterion(table.interpolant())
    coarse = criterion(table.interpolant(stride=2))
    interp_err = abs(fine.value - coarse.value)

    # beyond the grid phi follows the tail power law of b
    tail_value, tail_err, tail_certified = 0.0, 0.0, table.certified_tail
    if table.last_positive == len(table.s) - 1:
        tail_value, tail_err, tail_certified = _criterion_tail(a, b, table, q, tol, cert)
        if tail_value is None:
            return cert
    total = fine.value + tail_value
    parts = {
        "quadrature": fine.abs_error_estimate,
        "interpolation": interp_err,
        "phi_table": q * table.rel_error * abs(fine.value),
        "tail": tail_err,
    }
    budget = math.fsum(parts.values())
    cert.criterion_integral = total
    cert.error_budget = budget
    cert.budget_parts = parts
    cert.certified_tail = bool(tail_certified and b.decay.certified)
    if total + budget <= bound:
        cert.verdict = CERTIFIED
    else:
        cert.verdict = NOT_CERTIFIED
        if total - budget <= bound:
            cert.notes.append("inconclusive: tighten tol")
    return cert


def _criterion_tail(a: Coefficient, b: Coefficient, table: PhiTable, q: float,
                    tol: float, cert: Certificate):
    s_end = float(table.s[-1])
    phi_end = float(table.values[-1])
    eb, ea = b.decay.exponent, a.decay.exponent
    if eb is None or ea is None:
        # no power law: evaluate phi directly (slow path, only for exotic weights)
        def c(s):
            s = np.atleast_1d(s)
            ph = np.array([2.0 * _tail_from(b, float(t), 1e-12).value for t in s])
            return np.power(ph / a(s), q)
        try:
            res = integrate_tail(c, s_end, None, 0.25 * tol)
        except QuadratureError as exc:
            cert.notes.append(f"criterion integral does not converge: {exc}")
            return None, None, False
        return res.value, res.abs_error_estimate, False
    # phi(s) ~ phi_end (s/s_end)^(eb+1); mismatch with the asymptotic formula
    # 2 b(s) s / |eb+1| measures how far from the pure power law we are
    b_end = float(b(np.array([s_end]))[0])
    asym = 2.0 * b_end * s_end / abs(eb + 1.0)
    mismatch = abs(asym - phi_end) / phi_end
    ec = (eb + 1.0 - ea) * q
    if ec >= -1.0:
        cert.notes.append(
            f"criterion integrand decays like s^{ec:.6g}; the criterion integral is infinite")
        return None, None, False

    def c(s):
        return np.power(phi_end * np.power(s / s_end, eb + 1.0) / a(s), q)

    res = integrate_tail(c, s_end, ec, 0.25 * tol)
    err = res.abs_error_estimate + 2.0 * q * mismatch * abs(res.value)
    certified = res.certified_tail and a.decay.certified and not a.decay.log_correction
    return res.value, err, certified


def certify_bessel_pair(W: WeightFn, H: WeightFn, p: float, Q: float, r0: float,
                        tol: float = 1e-10, **kwargs) -> Certificate:
    """Check the pair (W, H) in homogeneous dimension Q (requires 1 < p < Q)."""
    if not 1.0 < p < Q:
        raise ValueError(f"need 1 < p < Q, got p={p}, Q={Q}")
    return certify_general(radial_coefficient(W, Q), radial_coefficient(H, Q), p, r0, tol,
                           **kwargs)
