import numpy as np
import pytest

from bessel_forge.errors import HypothesisViolation
from bessel_forge.geometry import cartan, engel, euclidean, grushin, heisenberg1
from bessel_forge.picone import (modulus_gradient_gap, picone_first, picone_second, picone_sweep,
                                 random_smooth_pair, seeded_sampler)

GEOMETRIES = [euclidean(3), heisenberg1(), grushin(1, 1, 1.0), engel(), cartan()]


def gauss(x):
    return float(np.exp(-x @ x))


def test_equality_case_first_order():
    x = np.ones(3)
    s = picone_first(euclidean(3), gauss, gauss, 2, x)
    assert abs(s.L) <= 1e-8 and abs(s.R - s.L) <= 1e-8
    s = picone_first(euclidean(3), lambda y: 2 * gauss(y), gauss, 2, x)
    assert abs(s.L) <= 1e-8


def test_heisenberg_example():
    s = picone_first(heisenberg1(), lambda x: x[0] * x[1], lambda x: 1 + x @ x, 2, [1, 2, 1])
    assert abs(s.R - s.L) <= 1e-7
    assert s.L >= -1e-9
    assert abs(s.R - s.L) <= s.error_bound
    assert set(s.terms)  # breakdown of L is reported


@pytest.mark.parametrize("g", GEOMETRIES, ids=lambda g: g.label)
@pytest.mark.parametrize("c", [1.0, 2.0, 10.0])
@pytest.mark.parametrize("p", [2.0, 3.0])
def test_equality_probe(g, c, p):
    v = lambda x: float(np.exp(-0.3 * (x @ x)) * (1.5 + np.sin(x[0])))
    x = np.linspace(0.3, 0.9, g.n)
    s = picone_first(g, lambda y: c * v(y), v, p, x)
    assert abs(s.L) <= 1e-8


def test_v_must_be_positive():
    with pytest.raises(HypothesisViolation):
        picone_first(euclidean(2), gauss, lambda x: x[0], 2, [-1.0, 0.5])


# ----------------------------------------------------------------- second order


def radial_power(a):
    return lambda x: float(np.linalg.norm(x) ** a)


def point_with_norm(r, n=5):
    x = np.array([1.0, 1.0, 1.0, 0.0, 0.0][:n])
    return r * x / np.linalg.norm(x)


def test_second_order_equality():
    v = radial_power(-0.5)
    s = picone_second(v, v, 2, 5, point_with_norm(2.0))
    assert abs(s.L1) <= 1e-6
    assert s.neg_lap_v > 0


def test_second_order_example():
    u = lambda x: float(np.exp(-x @ x))
    s = picone_second(u, radial_power(-0.5), 2, 5, point_with_norm(1.5))
    assert abs(s.R1 - s.L1) <= 1e-5
    assert s.L1 >= -1e-7


def test_second_order_needs_superharmonic_v():
    with pytest.raises(HypothesisViolation):
        picone_second(lambda x: float(np.exp(-x @ x)), lambda x: float(1 + x @ x), 2, 5,
                      point_with_norm(1.0))


# ------------------------------------------------------------------ sweeps


def test_sweep_equality_euclidean():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (100, 3))
    s = picone_sweep(euclidean(3), gauss, gauss, 2, pts, 100)
    assert s.evaluated == 100
    assert s.min_L >= -1e-9 and s.max_rel_diff <= 1e-7


@pytest.mark.parametrize("g", GEOMETRIES, ids=lambda g: g.label)
@pytest.mark.parametrize("p", [2.0, 3.0])
def test_random_sweeps(g, p):
    s = picone_sweep(g, None, None, p, seeded_sampler(g, 7), 100, tolerance=1e-7)
    assert not s.errors
    assert s.evaluated + s.skipped == 100 and s.evaluated >= 95
    assert s.max_rel_diff <= 1e-6
    assert s.min_L >= -1e-7
    assert not s.violations


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_second_order_sweep(p):
    g = euclidean(5)
    s = picone_sweep(None, None, None, p, seeded_sampler(g, 11, order=2), 100, order=2,
                     tolerance=1e-6)
    assert not s.errors
    assert s.evaluated + s.skipped == 100 and s.evaluated >= 95
    assert s.max_rel_diff <= 1e-5
    assert s.min_L >= -1e-6


def test_sweep_collects_errors_instead_of_raising():
    pts = [np.array([1.0, 1.0]), np.array([-1.0, 1.0])]
    s = picone_sweep(euclidean(2), gauss, lambda x: float(x[0]), 2, pts, 2)
    assert s.evaluated == 1 and len(s.errors) == 1


def test_sweep_is_deterministic():
    g = heisenberg1()
    a = picone_sweep(g, None, None, 3.0, seeded_sampler(g, 3), 50)
    b = picone_sweep(g, None, None, 3.0, seeded_sampler(g, 3), 50)
    assert a.to_dict() == b.to_dict()


# ----------------------------------------------------------------- complex u


@pytest.mark.parametrize("g", GEOMETRIES, ids=lambda g: g.label)
def test_complex_modulus_gradient_chain(g):
    rng = np.random.default_rng(5)
    worst = np.inf
    for _ in range(100):
        u, _v = random_smooth_pair(g.n, rng, complex_u=True)
        x = rng.uniform(-1, 1, g.n)
        if np.hypot(u[0](x), u[1](x)) < 1e-3:
            continue
        worst = min(worst, modulus_gradient_gap(g, u, x))
    assert worst >= -1e-8


@pytest.mark.parametrize("g", GEOMETRIES, ids=lambda g: g.label)
def test_complex_sweep(g):
    s = picone_sweep(g, None, None, 2.0, seeded_sampler(g, 13, complex_u=True), 100)
    assert not s.errors and not s.violations
    assert s.max_rel_diff <= 1e-6
    assert s.min_modulus_gap >= -1e-8
