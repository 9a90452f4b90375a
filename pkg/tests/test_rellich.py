import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from bessel_forge.errors import ParameterRangeError
from bessel_forge.profiles import TestProfile
from bessel_forge.rellich import (INNER_STEP, extremal_exponent, okazawa_constant, radial_laplacian,
                                  rellich_check, rellich_classical_constant, rellich_constant,
                                  rellich_hypothesis_check, weighted_pair)
from bessel_forge.weights import WeightFn

F = WeightFn.from_string
ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen_oracles.json").read_text())
ONE = F("1")
RADII = np.arange(0.5, 5.01, 0.25)


def test_constant_examples():
    assert rellich_constant(5, 2, 0) == 25 / 16
    assert rellich_constant(6, 2, 0) == 9
    assert rellich_constant(5, 2, 2) == 25 / 16
    assert rellich_classical_constant(5) == 25 / 16
    assert rellich_classical_constant(6) == 9
    assert rellich_classical_constant(8) == 64


@pytest.mark.parametrize("n", range(5, 13))
def test_classical_constant_is_the_unweighted_case(n):
    assert rellich_constant(n, 2, 0) == rellich_classical_constant(n)
    assert Fraction(rellich_constant(n, 2, 0)) == Fraction(n * n * (n - 4) ** 2, 16)


@pytest.mark.parametrize("n", [5, 7, 9])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_okazawa_specialisation(n, p):
    if not 1 < p < n / 2:
        with pytest.raises(ParameterRangeError):
            okazawa_constant(n, p)
        return
    assert rellich_constant(n, p, 0) == okazawa_constant(n, p)


def test_range_errors():
    with pytest.raises(ParameterRangeError):
        rellich_constant(5, 2, 2.5)  # gamma at the upper end
    with pytest.raises(ParameterRangeError):
        rellich_constant(5, 2, -0.5)  # gamma at the lower end
    with pytest.raises(ParameterRangeError):
        rellich_constant(2, 2, 0)
    with pytest.raises(ParameterRangeError):
        rellich_constant(5, 1, 0)
    with pytest.raises(ParameterRangeError):
        rellich_classical_constant(4)


@pytest.mark.parametrize("n", [3, 5, 8])
@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("step", [INNER_STEP, np.finfo(float).eps ** 0.25])
def test_radial_laplacian_of_powers(n, m, step):
    r = np.linspace(0.5, 5, 10)
    got = radial_laplacian(lambda s: s ** m, r, n, step)
    assert np.allclose(got, m * (m + n - 2) * r ** (m - 2.0), rtol=1e-7, atol=0)


# ---------------------------------------------------------------- hypothesis


def test_equality_case_slack():
    v = F("pow(r,-0.5)")
    rep = rellich_hypothesis_check(ONE, v, F("1.5625*pow(r,-4)"), 2, 5, RADII)
    assert rep.max_abs_relative_slack <= 1e-5
    assert rep.holds and not rep.violation
    assert np.allclose(rep.neg_lap_v, 1.25 * RADII ** -2.5, rtol=1e-6)


def test_doubled_potential_fails():
    v = F("pow(r,-0.5)")
    rep = rellich_hypothesis_check(ONE, v, F("3.125*pow(r,-4)"), 2, 5, RADII)
    assert rep.min_slack < 0 and not rep.holds


def test_subharmonic_v_flags_violation():
    rep = rellich_hypothesis_check(ONE, F("pow(r,2)"), F("pow(r,-4)"), 2, 5, RADII)
    assert rep.violation and not rep.holds
    assert rep.neg_lap_v_min == pytest.approx(-10, rel=1e-6)


@pytest.mark.parametrize("n, p, gamma", [(5, 2, 0), (6, 2, 0.5), (7, 2, -1.0), (8, 3, 0.3),
                                         (10, 1.5, 1.0), (9, 3, -0.5)])
def test_weighted_equality_cases(n, p, gamma):
    W, H, v = weighted_pair(n, p, gamma)
    assert extremal_exponent(n, p, gamma) == -(n / p + gamma - 2)
    rep = rellich_hypothesis_check(W, v, H, p, n, RADII)
    assert rep.max_abs_relative_slack <= 1e-5
    assert rep.holds


def test_hypothesis_input_checks():
    with pytest.raises(ValueError):
        rellich_hypothesis_check(ONE, F("pow(r,-0.5)"), ONE, 2, 5, [])
    with pytest.raises(ValueError):
        rellich_hypothesis_check(ONE, F("1-r"), ONE, 2, 5, [0.5, 2.0])
    rep = rellich_hypothesis_check(ONE, F("pow(r,-0.5)"), F("pow(r,-4)"), 2, 5, [1.0])
    assert set(rep.to_dict()) >= {"min_slack", "neg_lap_v_min", "violation", "holds"}


# ------------------------------------------------------------------ inequality

C5 = F("1.5625*pow(r,-4)")


def test_classical_pair_with_gaussian():
    rep = rellich_check(ONE, C5, 2, 5, TestProfile.gaussian(0.3))
    assert rep.ratio >= 1 - 1e-5


@pytest.mark.parametrize("key", sorted(ORACLES["rellich"]))
def test_ratio_oracles(key):
    parts = key.split("/")
    if parts[1] == "gaussian":
        prof = TestProfile.gaussian(float(parts[2]))
    elif parts[1] == "bump":
        prof = TestProfile.bump(float(parts[2]), float(parts[3]))
    else:
        prof = TestProfile.near_extremal_rellich(float(parts[2]), 5)
    rep = rellich_check(ONE, C5, 2, 5, prof)
    want = ORACLES["rellich"][key]
    assert rep.ratio == pytest.approx(want, rel=1e-8)
    assert abs(rep.ratio - want) <= rep.uncertainty + 1e-14 * want


def test_sharpness_probe():
    rep = rellich_check(ONE, F("1.875*pow(r,-4)"), 2, 5, TestProfile.near_extremal_rellich(0.05, 5))
    assert rep.ratio < 1


def test_degenerate_and_rough_profiles():
    assert rellich_check(ONE, C5, 2, 5, TestProfile.gaussian(0.3, amplitude=0.0)).degenerate
    with pytest.raises(ValueError):
        rellich_check(ONE, C5, 2, 5, TestProfile.bump(2, 2))  # f'' jumps at R


def test_annular_bump_and_weighted_pair():
    W, H, _ = weighted_pair(7, 2, 0.5)
    rep = rellich_check(W, H, 2, 7, TestProfile.bump(2, 4, 2.0, r_in=0.5))
    assert rep.ratio >= 1 - 1e-5
