import json
import math
from pathlib import Path

import numpy as np
import pytest

from bessel_forge.certify import (CERTIFIED, DIVERGENT, NOT_CERTIFIED, certify_bessel_pair,
                                  certify_general, phi)
from bessel_forge.errors import DivergenceError, WeightDomainError
from bessel_forge.weights import WeightFn

F = WeightFn.from_string
ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen_oracles.json").read_text())
ONE, R4 = F("1"), F("pow(r,-4)")


def test_phi_examples():
    assert phi(R4, 3, 2.0) == pytest.approx(1.0, rel=1e-10)
    assert phi(F("1e-12*pow(r,-4)"), 3, 1.0) == pytest.approx(2e-12, rel=1e-10)
    with pytest.raises(DivergenceError):
        phi(F("pow(r,-2)"), 3, 1.0)


def test_certify_examples():
    c = certify_bessel_pair(ONE, R4, 2, 3, 2.0)
    assert c.verdict == CERTIFIED
    assert c.criterion_integral == pytest.approx(0.25, abs=1e-8)
    assert c.bound == 0.5
    assert c.phi_at_r0 == pytest.approx(1.0, rel=1e-10)
    c = certify_bessel_pair(ONE, R4, 2, 3, 1.0)
    assert c.verdict == NOT_CERTIFIED
    assert c.criterion_integral == pytest.approx(1.0, abs=1e-6)
    c = certify_bessel_pair(ONE, F("1e-12*pow(r,-4)"), 2, 3, 1.0)
    assert c.verdict == CERTIFIED
    assert c.criterion_integral == pytest.approx(1e-12, rel=1e-6)


@pytest.mark.parametrize("r0", [1.0, 1.2, math.sqrt(2), 2.0, 4.0])
def test_criterion_is_inverse_square(r0):
    c = certify_bessel_pair(ONE, R4, 2, 3, r0)
    assert abs(c.criterion_integral - 1 / r0 ** 2) <= 1e-6
    assert abs(c.criterion_integral - 1 / r0 ** 2) <= c.error_budget
    assert c.error_budget < 1e-6


def test_verdict_flips_at_root_two():
    r = math.sqrt(2)
    at = certify_bessel_pair(ONE, R4, 2, 3, r)
    assert abs(at.criterion_integral - 0.5) <= at.error_budget
    assert at.verdict == NOT_CERTIFIED  # indeterminate band is reported conservatively
    assert any("inconclusive" in note for note in at.notes)
    assert certify_bessel_pair(ONE, R4, 2, 3, r * (1 + 1e-6)).verdict == CERTIFIED
    assert certify_bessel_pair(ONE, R4, 2, 3, r * (1 - 1e-6)).verdict == NOT_CERTIFIED


def test_monotone_in_r0():
    radii = np.geomspace(0.5, 20, 25)
    certs = [certify_bessel_pair(ONE, R4, 2, 3, r) for r in radii]
    integrals = [c.criterion_integral for c in certs]
    assert all(a > b for a, b in zip(integrals, integrals[1:]))
    seen = False
    for c in certs:
        seen = seen or c.verdict == CERTIFIED
        if seen:
            assert c.verdict == CERTIFIED


@pytest.mark.parametrize("c", [1.0, 0.5, 0.1, 1e-3])
def test_scaling_in_h(c):
    base = certify_bessel_pair(ONE, R4, 2, 3, 1.5)
    scaled = certify_bessel_pair(ONE, F(f"{c!r}*pow(r,-4)"), 2, 3, 1.5)
    assert scaled.phi_at_r0 == pytest.approx(c * base.phi_at_r0, rel=1e-8)
    assert scaled.criterion_integral == pytest.approx(c * base.criterion_integral, rel=1e-8)


def test_general_examples():
    a = certify_general(lambda s: s ** 2, lambda s: s ** -2.0, 2, 2.0, a_decay=2, b_decay=-2)
    b = certify_bessel_pair(ONE, R4, 2, 3, 2.0)
    assert a.verdict == b.verdict == CERTIFIED
    assert a.criterion_integral == pytest.approx(b.criterion_integral, abs=2e-10)

    c = certify_general(F("1"), F("exp(-r)"), 2, 10.0)
    assert c.verdict == CERTIFIED
    assert c.criterion_integral == pytest.approx(2 * math.exp(-10), rel=1e-6)
    assert not c.certified_tail

    d = certify_general(F("1"), F("1"), 2, 1.0)
    assert d.verdict == DIVERGENT


def test_exp_oracles():
    # independent 30-digit evaluation of the criterion for H = e^-r, Q = 3
    for r0 in (5.0, 10.0):
        want = ORACLES["certify"][f"exp/Q3/r0={r0:g}"]
        c = certify_bessel_pair(ONE, F("exp(-r)"), 2, 3, r0)
        assert abs(c.criterion_integral - want) <= c.error_budget
        assert c.criterion_integral == pytest.approx(want, rel=1e-6)


def test_reduction_consistency_random_power_laws():
    rng = np.random.default_rng(11)
    for _ in range(20):
        Q = rng.uniform(2.5, 6)
        p = rng.uniform(1.2, min(Q, 4) - 0.1)
        w, h = rng.uniform(-1, 1), rng.uniform(-Q - 3, -Q - 0.2)
        cw, ch = rng.uniform(0.5, 2), rng.uniform(1e-3, 1)
        r0 = rng.uniform(0.5, 5)
        W, H = F(f"{cw!r}*pow(r,{w!r})"), F(f"{ch!r}*pow(r,{h!r})")
        one = certify_bessel_pair(W, H, p, Q, r0)
        two = certify_general(lambda s: s ** (Q - 1) * W(s), lambda s: s ** (Q - 1) * H(s), p, r0,
                              a_decay=w + Q - 1, b_decay=h + Q - 1)
        assert one.verdict == two.verdict
        if one.criterion_integral is not None and math.isfinite(one.criterion_integral):
            assert one.criterion_integral == pytest.approx(two.criterion_integral, rel=1e-8,
                                                           abs=2e-10)


def test_bad_parameters():
    with pytest.raises(ValueError):
        certify_bessel_pair(ONE, R4, 3, 3, 1.0)  # p must be < Q
    with pytest.raises(ValueError):
        certify_bessel_pair(ONE, R4, 2, 3, 0.0)


def test_positivity_enforced():
    with pytest.raises(WeightDomainError, match="positive"):
        certify_general(F("1"), F("pow(r,-2)*(r-3)"), 2, 1.0)


def test_report_serialises():
    d = certify_bessel_pair(ONE, R4, 2, 3, 2.0).to_dict()
    assert json.loads(json.dumps(d))["verdict"] == CERTIFIED
