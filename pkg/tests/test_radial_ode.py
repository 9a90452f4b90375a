import json
import math
from pathlib import Path

import numpy as np
import pytest

from bessel_forge.errors import ODEError
from bessel_forge.radial_ode import positivity_scan, solve_radial, verify_ode_residual
from bessel_forge.weights import WeightFn

F = WeightFn.from_string
ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen_oracles.json").read_text())
ONE = F("1")


def euler(Q):
    a = (Q - 2) / 2
    return F(f"{a * a!r}*pow(r,-2)"), a


@pytest.mark.parametrize("Q", [3, 4, 5])
def test_euler_equation_solution(Q):
    H, a = euler(Q)
    sol = solve_radial(ONE, H, 2, Q, 1.0, 10.0, 1.0, -a, 1e-10)
    exact = sol.grid ** -a
    assert np.max(np.abs(sol.v / exact - 1)) <= 1e-4
    assert sol.positive and sol.first_zero is None
    assert verify_ode_residual(sol, ONE, H, 2, Q) <= 1e-6


def test_solution_invariants():
    H, a = euler(4)
    sol = solve_radial(ONE, H, 2, 4, 1.0, 10.0, 1.0, -1.0, 1e-10)
    assert np.all(np.diff(sol.grid) > 0)
    assert sol.grid[0] == 1.0 and sol.grid[-1] == 10.0
    assert sol.v[0] == 1.0
    assert sol.step_stats[0] <= sol.step_stats[1]
    # dense output interpolates v between nodes
    assert sol.dense_v(3.3) == pytest.approx(1 / 3.3, rel=1e-6)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_zero_potential_keeps_constant(p):
    for text in ("0", "1e-300"):
        sol = solve_radial(ONE, F(text), p, 4, 1.0, 50.0, 1.0, 0.0, 1e-10)
        assert np.all(sol.v == 1.0) and sol.positive
        assert verify_ode_residual(sol, ONE, F(text), p, 4) <= 1e-12


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_flux_is_a_first_integral_without_potential(p):
    sol = solve_radial(F("1+r"), F("0"), p, 3.5, 1.0, 100.0, 1.0, 0.7, 1e-10)
    assert np.max(np.abs(sol.flux / sol.flux[0] - 1)) <= 1e-10


def test_supercritical_example_oscillates():
    sol = solve_radial(ONE, F("2*pow(r,-2)"), 2, 4, 1.0, 1e3, 1.0, 0.0, 1e-10)
    assert not sol.positive
    assert sol.first_zero == pytest.approx(ORACLES["sturm"]["Q4/H=2"], rel=1e-6)
    i = int(np.searchsorted(sol.grid, sol.first_zero))
    assert sol.v[i - 1] > 0 >= sol.v[i]


def test_residual_detects_corruption():
    H, a = euler(4)
    sol = solve_radial(ONE, H, 2, 4, 1.0, 10.0, 1.0, -1.0, 1e-10)
    assert verify_ode_residual(sol, ONE, H, 2, 4) <= 1e-5
    mid = sol.grid.size // 2
    sol.flux = sol.flux.copy()
    sol.flux[mid] *= 1 + 1e-2
    assert verify_ode_residual(sol, ONE, H, 2, 4) > 1e-3


def test_residual_detects_corrupted_values():
    H, a = euler(4)
    sol = solve_radial(ONE, H, 2, 4, 1.0, 10.0, 1.0, -1.0, 1e-10)
    sol.v = sol.v.copy()
    sol.v[sol.grid.size // 2] *= 1 + 1e-2
    assert verify_ode_residual(sol, ONE, H, 2, 4) > 1e-3


def test_order_of_the_method():
    # tolerance disabled, steps capped: halving the step gains at least 2^(5-1)
    H, a = euler(4)
    errs = []
    for h in (0.4, 0.2):
        sol = solve_radial(ONE, H, 2, 4, 1.0, 10.0, 1.0, -1.0, 1.0, max_step=h)
        errs.append(np.max(np.abs(sol.v * sol.grid - 1)))
    assert errs[0] / errs[1] >= 2 ** 4


def test_tolerance_proportionality():
    H, a = euler(4)
    err = {}
    for tol in (1e-6, 1e-10):
        sol = solve_radial(ONE, H, 2, 4, 1.0, 10.0, 1.0, -1.0, tol)
        err[tol] = np.max(np.abs(sol.v * sol.grid - 1))
    assert err[1e-6] / err[1e-10] >= 1e3


@pytest.mark.parametrize("Q", [3, 4, 5])
def test_sturm_comparison(Q):
    crit = ((Q - 2) / 2) ** 2
    below = F(f"{0.9 * crit!r}*pow(r,-2)")
    above = F(f"{1.5 * crit!r}*pow(r,-2)")
    assert positivity_scan(ONE, below, 2, Q, 1.0, 1e3).positive
    # for Q = 3 the first zero of the oscillating solution lies past 10^3
    r_max = 1e4 if Q == 3 else 1e3
    scan = positivity_scan(ONE, above, 2, Q, 1.0, r_max)
    assert not scan.positive
    assert scan.first_zero == pytest.approx(ORACLES["sturm"][f"Q{Q}/1.5"], rel=1e-6)


def test_positivity_scan_examples():
    assert positivity_scan(ONE, F("pow(r,-4)"), 2, 3, 2.0, 2e3).positive
    scan = positivity_scan(ONE, F("pow(r,-2)"), 2, 4, 1.0, 1e3, init=(1.0, -1.0))
    assert scan.positive and scan.first_zero is None


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_p_laplacian_fundamental_solution(p):
    # v = r^((p-Q)/(p-1)) has constant flux when H = 0
    Q = 4.0
    e = (p - Q) / (p - 1)
    sol = solve_radial(ONE, F("0"), p, Q, 1.0, 20.0, 1.0, e, 1e-11)
    # mixed error control: absolute near the decayed tail, relative near r0
    assert np.max(np.abs(sol.v - sol.grid ** e)) <= 1e-9


def test_errors():
    with pytest.raises(ValueError):
        solve_radial(ONE, ONE, 2, 3, 2.0, 1.0)
    with pytest.raises(ValueError):
        solve_radial(ONE, ONE, 2, 3, 1.0, 2.0, v0=0.0)
    with pytest.raises(ODEError):
        solve_radial(F("1-r"), ONE, 2, 3, 0.5, 2.0)  # r^(Q-1) W loses positivity
    with pytest.raises(ODEError) as info:
        solve_radial(ONE, F("pow(r,-2)", r_max=5.0), 2, 3, 1.0, 10.0)
    assert info.value.r == 1.0
    with pytest.raises(ODEError):
        solve_radial(ONE, F("log(2-r)"), 2, 3, 1.0, 3.0)
    with pytest.raises(ODEError):
        solve_radial(ONE, ONE, 2, 3, 1.0, 100.0, max_steps=5)
