"""Radial test profiles f(s) with analytic first and second derivatives.

All families are multiplied by an amplitude and vanish for s >= R. The
gaussian family uses the C^2 cutoff (1 - (s/R)^2)^3. The near-extremal
family uses a cutoff that is smooth in log s, rising from 0 at R to 1 at
R exp(-log_width): the power s^m spreads its mass evenly over decades, and
a cutoff spread over many decades costs little gradient energy, so the
Rayleigh ratio approaches the sharp constant as eps -> 0. With ``r_in > 0``
the bump is placed on the annulus [r_in, R] instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("bump", "gaussian", "near_extremal")


def _cutoff(s, R):
    t2 = (s / R) ** 2
    g = np.clip(1.0 - t2, 0.0, None)
    c = g ** 3
    dc = -6.0 * s / R ** 2 * g ** 2
    d2c = -6.0 / R ** 2 * g ** 2 + 24.0 * s ** 2 / R ** 4 * g
    return c, dc, d2c


DEFAULT_LOG_WIDTH = 10.0


def _log_cutoff(s, R, width):
    """C^2 smootherstep in t = log(R/s)/width: 0 at s = R, 1 for s <= R e^-width."""
    t = np.clip(np.log(R / s) / width, 0.0, 1.0)
    chi = t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)
    chi1 = 30.0 * t * t * (1.0 - t) ** 2
    chi2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    t1 = -1.0 / (s * width)
    t2 = 1.0 / (s * s * width)
    return chi, chi1 * t1, chi2 * t1 * t1 + chi1 * t2


@dataclass(frozen=True)
class TestProfile:
    family: str
    params: dict = field(default_factory=dict)
    R: float = 1.0
    amplitude: float = 1.0
    r_in: float = 0.0

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown profile family {self.family!r}; expected one of {FAMILIES}")
        if not self.R > self.r_in >= 0.0:
            raise ValueError("need R > r_in >= 0")
        p = self.params
        if self.family == "bump":
            if not (p.get("beta", 0) > 0 and p.get("k", 0) >= 1):
                raise ValueError("bump needs beta > 0 and k >= 1")
        elif self.family == "gaussian":
            if not p.get("sigma", 0) > 0:
                raise ValueError("gaussian needs sigma > 0")
        else:
            if not p.get("eps", 0) > 0:
                raise ValueError("near_extremal needs eps > 0")
            if "exponent" not in p:
                raise ValueError("near_extremal needs its base exponent")
            if not p.get("log_width", DEFAULT_LOG_WIDTH) > 0:
                raise ValueError("near_extremal needs log_width > 0")
        if self.r_in > 0 and self.family != "bump":
            raise ValueError("annular supports are only available for the bump family")

    # -------------------------------------------------------------- builders

    @classmethod
    def bump(cls, beta: float = 2.0, k: float = 2.0, R: float = 1.0, **kw) -> "TestProfile":
        return cls("bump", {"beta": float(beta), "k": float(k)}, R, **kw)

    @classmethod
    def gaussian(cls, sigma: float = 0.5, R: float = 1.0, **kw) -> "TestProfile":
        return cls("gaussian", {"sigma": float(sigma)}, R, **kw)

    @classmethod
    def near_extremal(cls, eps: float, Q: float, p: float = 2.0, R: float = 1.0,
                      **kw) -> "TestProfile":
        """s^(-(Q-p)/p + eps) times the cutoff: the Hardy extremal, regularised."""
        base = -(Q - p) / p
        return cls("near_extremal", {"eps": float(eps), "exponent": base + float(eps),
                                     "log_width": DEFAULT_LOG_WIDTH}, R, **kw)

    @classmethod
    def near_extremal_rellich(cls, eps: float, n: float, p: float = 2.0, R: float = 1.0,
                              **kw) -> "TestProfile":
        """s^(-(n-2p)/p + eps) times the cutoff: the Rellich extremal, regularised."""
        base = -(n - 2.0 * p) / p
        return cls("near_extremal", {"eps": float(eps), "exponent": base + float(eps),
                                     "log_width": DEFAULT_LOG_WIDTH}, R, **kw)

    def with_params(self, **updates) -> "TestProfile":
        params = dict(self.params)
        if self.family == "near_extremal" and "eps" in updates:
            params["exponent"] = params["exponent"] - params["eps"] + float(updates["eps"])
        params.update({k: float(v) for k, v in updates.items()})
        return TestProfile(self.family, params, self.R, self.amplitude, self.r_in)

    def scaled(self, lam: float) -> "TestProfile":
        """The profile s -> f(lam s) (support radius R / lam)."""
        params = dict(self.params)
        amp = self.amplitude
        if self.family == "gaussian":
            params["sigma"] = params["sigma"] / lam
        if self.family == "near_extremal":
            amp = amp * lam ** params["exponent"]
        return TestProfile(self.family, params, self.R / lam, amp, self.r_in / lam)

    @property
    def degenerate(self) -> bool:
        return self.amplitude == 0.0

    @property
    def support(self) -> tuple[float, float]:
        return self.r_in, self.R

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Interior radii where f is only finitely smooth."""
        if self.family == "near_extremal":
            return (self.R * np.exp(-self.params.get("log_width", DEFAULT_LOG_WIDTH)),)
        if self.family == "bump" and self.r_in > 0:
            return (0.5 * (self.r_in + self.R),)
        return ()

    def describe(self) -> dict:
        return {"family": self.family, "params": dict(sorted(self.params.items())),
                "R": self.R, "amplitude": self.amplitude, "r_in": self.r_in}

    # ------------------------------------------------------------ evaluation

    def derivatives(self, s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(f, f', f'') at radii s (arrays); zero outside the support."""
        s = np.asarray(s, dtype=float)
        inside = (s > self.r_in) & (s < self.R)
        si = np.where(inside, s, 0.5 * (self.r_in + self.R))
        with np.errstate(all="ignore"):
            f, d1, d2 = getattr(self, "_" + self.family)(si)
        zero = np.zeros_like(s)
        a = self.amplitude
        return (np.where(inside, a * f, zero), np.where(inside, a * d1, zero),
                np.where(inside, a * d2, zero))

    def __call__(self, s):
        return self.derivatives(s)[0]

    def _bump(self, s):
        beta, k = self.params["beta"], self.params["k"]
        if self.r_in > 0:
            mid, half = 0.5 * (self.r_in + self.R), 0.5 * (self.R - self.r_in)
            x = (s - mid) / half
            t, dt = np.abs(x), np.sign(x) / half
        else:
            t, dt = s / self.R, np.full_like(s, 1.0 / self.R)
        g = 1.0 - t ** beta
        g1 = -beta * t ** (beta - 1.0) * dt
        g2 = -beta * (beta - 1.0) * t ** (beta - 2.0) * dt ** 2 if beta != 1.0 else np.zeros_like(s)
        f = g ** k
        d1 = k * g ** (k - 1.0) * g1
        d2 = k * (k - 1.0) * g ** (k - 2.0) * g1 ** 2 + k * g ** (k - 1.0) * g2 if k != 1.0 \
            else g2
        return f, d1, d2

    def _gaussian(self, s):
        sig2 = self.params["sigma"] ** 2
        e = np.exp(-s * s / (2.0 * sig2))
        e1 = -s / sig2 * e
        e2 = (s * s / sig2 - 1.0) / sig2 * e
        c, c1, c2 = _cutoff(s, self.R)
        return e * c, e1 * c + e * c1, e2 * c + 2.0 * e1 * c1 + e * c2

    def _near_extremal(self, s):
        m = self.params["exponent"]
        g = s ** m
        g1 = m * s ** (m - 1.0)
        g2 = m * (m - 1.0) * s ** (m - 2.0)
        c, c1, c2 = _log_cutoff(s, self.R, self.params.get("log_width", DEFAULT_LOG_WIDTH))
        return g * c, g1 * c + g * c1, g2 * c + 2.0 * g1 * c1 + g * c2


def default_family(Q: float, p: float = 2.0, R: float = 1.0) -> list[TestProfile]:
    """Profiles used for the inequality checks when none are specified."""
    return [
        TestProfile.bump(2, 2, R),
        TestProfile.bump(2, 3, R),
        TestProfile.bump(4, 3, R),
        TestProfile.gaussian(0.3, R),
        TestProfile.gaussian(0.6, R),
        TestProfile.near_extremal(0.05, Q, p, R),
        TestProfile.near_extremal(0.3, Q, p, R),
    ]


def profile_from_dict(d: dict, Q: float | None = None, p: float = 2.0,
                      rellich_n: float | None = None) -> TestProfile:
    """Build a profile from a run-spec record ``{"family": ..., ...}``."""
    family = d.get("family")
    R = float(d.get("R", 1.0))
    amplitude = float(d.get("amplitude", 1.0))
    r_in = float(d.get("r_in", 0.0))
    if family == "bump":
        return TestProfile.bump(d.get("beta", 2.0), d.get("k", 2.0), R, amplitude=amplitude,
                                r_in=r_in)
    if family == "gaussian":
        return TestProfile.gaussian(d.get("sigma", 0.5), R, amplitude=amplitude, r_in=r_in)
    if family == "near_extremal":
        if "eps" not in d:
            raise ValueError("near_extremal profile needs eps")
        if rellich_n is not None:
            return TestProfile.near_extremal_rellich(d["eps"], rellich_n, p, R, amplitude=amplitude)
        if Q is None:
            raise ValueError("near_extremal profile needs the homogeneous dimension")
        return TestProfile.near_extremal(d["eps"], Q, p, R, amplitude=amplitude)
    raise ValueError(f"unknown profile family {family!r}")
