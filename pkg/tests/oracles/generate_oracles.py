"""Regenerate frozen_oracles.json with mpmath at 30 significant digits.

Independent of the package: profiles, derivatives and integrals are written
out again here, and every integral is split at the breakpoints of the
profile so mpmath's tanh-sinh rule sees smooth pieces only.

    python tests/oracles/generate_oracles.py
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 30
WIDTH = 10  # log-width of the near-extremal cutoff


def smootherstep(t):
    return t ** 3 * (10 - 15 * t + 6 * t * t), 30 * t * t * (1 - t) ** 2, \
        60 * t * (1 - t) * (1 - 2 * t)


def near_extremal(m):
    """s^m times the log cutoff; returns (f, f', f'') on [e^-WIDTH, 1]."""
    def derivs(s):
        t = mp.log(1 / s) / WIDTH
        c, c1, c2 = smootherstep(t)
        t1 = -1 / (s * WIDTH)
        t2 = 1 / (s * s * WIDTH)
        k1, k2 = c1 * t1, c2 * t1 ** 2 + c1 * t2
        g, g1, g2 = s ** m, m * s ** (m - 1), m * (m - 1) * s ** (m - 2)
        return g * c, g1 * c + g * k1, g2 * c + 2 * g1 * k1 + g * k2
    return derivs


def gaussian(sigma):
    def derivs(s):
        e = mp.exp(-s * s / (2 * sigma ** 2))
        e1 = -s / sigma ** 2 * e
        e2 = (s * s / sigma ** 2 - 1) / sigma ** 2 * e
        w = 1 - s * s
        c, c1, c2 = w ** 3, -6 * s * w ** 2, -6 * w ** 2 + 24 * s * s * w
        return e * c, e1 * c + e * c1, e2 * c + 2 * e1 * c1 + e * c2
    return derivs


def bump(beta, k):
    def derivs(s):
        return mp.diffs(lambda x: (1 - x ** beta) ** k, s, 2)
    def wrap(s):
        f, d1, d2 = derivs(s)
        return f, d1, d2
    return wrap


def hardy_ratio(Q, c, derivs, head=None):
    """int s^(Q-1) f'^2 / (c int s^(Q-3) f^2) on (0, 1]."""
    lo = mp.e ** (-WIDTH) if head else mp.mpf(0)
    L = mp.quad(lambda s: s ** (Q - 1) * derivs(s)[1] ** 2, [lo, 1])
    R = mp.quad(lambda s: s ** (Q - 3) * derivs(s)[0] ** 2, [lo, 1])
    if head:
        m = head
        e = Q - 2 + 2 * m  # exponent + 1 of both integrands on (0, e^-WIDTH]
        base = lo ** e / e
        L += m * m * base
        R += base
    return L / (c * R)


def rellich_ratio(n, c, derivs, head=None):
    """int s^(n-1) (f'' + (n-1) f'/s)^2 / (c int s^(n-5) f^2) on (0, 1]."""
    lo = mp.e ** (-WIDTH) if head else mp.mpf(0)
    def lap(s):
        f, d1, d2 = derivs(s)
        return d2 + (n - 1) * d1 / s
    L = mp.quad(lambda s: s ** (n - 1) * lap(s) ** 2, [lo, 1])
    R = mp.quad(lambda s: s ** (n - 5) * derivs(s)[0] ** 2, [lo, 1])
    if head:
        m = head
        e = n - 4 + 2 * m
        base = lo ** e / e
        L += (m * (m + n - 2)) ** 2 * base
        R += base
    return L / (c * R)


def main():
    out = {"hardy": {}, "rellich": {}, "certify": {}, "sturm": {}}
    for Q in (3, 4, 5):
        c = mp.mpf(Q - 2) ** 2 / 4
        for sigma in ("0.3", "0.6"):
            out["hardy"][f"Q{Q}/gaussian/{sigma}"] = float(
                hardy_ratio(Q, c, gaussian(mp.mpf(sigma))))
        for eps in ("0.05", "0.3", "0.0001"):
            m = -mp.mpf(Q - 2) / 2 + mp.mpf(eps)
            out["hardy"][f"Q{Q}/near_extremal/{eps}"] = float(
                hardy_ratio(Q, c, near_extremal(m), head=m))
    n, c = 5, mp.mpf(25) / 16
    out["rellich"]["n5/gaussian/0.3"] = float(rellich_ratio(n, c, gaussian(mp.mpf("0.3"))))
    out["rellich"]["n5/gaussian/0.6"] = float(rellich_ratio(n, c, gaussian(mp.mpf("0.6"))))
    out["rellich"]["n5/bump/2/3"] = float(rellich_ratio(n, c, bump(2, 3)))
    for eps in ("0.05", "0.01"):
        m = -mp.mpf(1) / 2 + mp.mpf(eps)
        out["rellich"][f"n5/near_extremal/{eps}"] = float(
            rellich_ratio(n, c, near_extremal(m), head=m))
    # phi(s) = 2 int_s^inf t^2 e^-t dt = 2 e^-s (s^2 + 2 s + 2); criterion int phi / s^2
    for r0 in (5, 10):
        phi = lambda s: 2 * mp.exp(-s) * (s * s + 2 * s + 2)
        out["certify"][f"exp/Q3/r0={r0}"] = float(mp.quad(lambda s: phi(s) / s ** 2,
                                                          [r0, mp.inf]))
    # v = r^-a (cos(w log r) + (a/w) sin(w log r)) solves the Euler equation with
    # v(1) = 1, v'(1) = 0 when c > a^2; first zero at w log r = pi - atan(w/a)
    for Q in (3, 4, 5):
        a = mp.mpf(Q - 2) / 2
        for factor in ("1.5",):
            w = mp.sqrt(mp.mpf(factor) * a * a - a * a)
            out["sturm"][f"Q{Q}/{factor}"] = float(mp.exp((mp.pi - mp.atan(w / a)) / w))
    a, w = mp.mpf(1), mp.mpf(1)  # H = 2 r^-2, Q = 4
    out["sturm"]["Q4/H=2"] = float(mp.exp((mp.pi - mp.atan(w / a)) / w))
    path = Path(__file__).with_name("frozen_oracles.json")
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
