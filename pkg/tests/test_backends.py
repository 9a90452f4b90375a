import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bessel_forge import _kernels as K
from bessel_forge.radial_ode import initial_flux
from bessel_forge.weights import WeightFn

needs_c = pytest.mark.skipif(K.compiled_backend is None, reason="compiled extension not built")
PY, C = K.python_backend, K.compiled_backend

EXPRS = ["1", "pow(r,-4)", "0.25*pow(r,-2)", "exp(-r)*pow(r,1.5)+log(1+r)/r",
         "pow(r,-2)*log(r)", "-(r-3)*(r+2)/pow(1+r*r,2.5)", "exp(-pow(r,0.5))"]


@needs_c
def test_selected_backend():
    assert K.BACKEND == "cython"
    assert K.backend is C


def test_pure_fallback_selected_by_environment():
    env = dict(os.environ, BESSEL_FORGE_PURE="1")
    code = ("from bessel_forge import _kernels as K; from bessel_forge.weights import WeightFn;"
            "print(K.BACKEND, WeightFn.from_string('pow(r,-2)')(2.0))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out == ["python", "0.25"]


@needs_c
@pytest.mark.parametrize("text", EXPRS)
def test_eval_program_parity(text):
    ops, args = WeightFn.from_string(text)._program
    r = np.geomspace(1e-3, 1e3, 1001)
    a, sa, ia = PY.eval_program(ops, args, r)
    b, sb, ib = C.eval_program(ops, args, r)
    assert sa == sb == 0
    # libm and numpy may differ by an ulp in pow/exp; exp(x) scales that by |x|
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=0)
    for x in r[::97]:
        va, _ = PY.eval_scalar(ops, args, float(x))
        vb, _ = C.eval_scalar(ops, args, float(x))
        assert va == pytest.approx(vb, rel=1e-14, abs=0)


@needs_c
@pytest.mark.parametrize("text, r, status", [
    ("log(r-1)", [3.0, 0.5, 2.0], K.ST_LOG_DOMAIN),
    ("1/(r-2)", [1.0, 3.0, 2.0], K.ST_ZERO_DIV),
    ("pow(r-2,0.5)", [3.0, 1.0], K.ST_POW_DOMAIN),
])
def test_error_status_parity(text, r, status):
    ops, args = WeightFn.from_string(text)._program
    r = np.array(r)
    for kern in (PY, C):
        _, code, idx = kern.eval_program(ops, args, r)
        assert code == status
        assert kern.eval_scalar(ops, args, float(r[idx]))[1] == status


@needs_c
@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 5), st.floats(-3, 3), st.floats(1.2, 4), st.floats(2.5, 6))
def test_eval_parity_random_powers(c, a, p, Q):
    ops, args = WeightFn.from_string(f"{c!r}*pow(r,{a!r})+{p!r}*exp(-r/{Q!r})")._program
    r = np.linspace(0.01, 50, 200)
    np.testing.assert_allclose(PY.eval_program(ops, args, r)[0], C.eval_program(ops, args, r)[0],
                               rtol=1e-14, atol=0)


@needs_c
@pytest.mark.parametrize("H, p, Q, r1, dv0", [
    ("pow(r,-2)", 2.0, 4.0, 10.0, -1.0),
    ("2*pow(r,-2)", 2.0, 4.0, 1000.0, 0.0),
    ("exp(-r)", 3.0, 3.0, 50.0, 0.0),
    ("0.3*pow(r,-2.5)", 1.5, 3.5, 100.0, -0.2),
])
def test_dopri_parity(H, p, Q, r1, dv0):
    W, Hf = WeightFn.from_string("1+0.1*r"), WeightFn.from_string(H)
    y0 = initial_flux(W, p, Q, 1.0, dv0)
    args = (*W._program, *Hf._program, p, Q, 1.0, r1, 1.0, y0, 1e-10, 1e-10, 100000, r1 - 1.0,
            1e150)
    a, b = PY.dopri_flux(*args), C.dopri_flux(*args)
    assert a[5] == b[5] == K.DP_OK
    assert a[0].size == b[0].size  # same accepted steps
    for x, y in zip(a[:5], b[:5]):
        np.testing.assert_allclose(x, y, rtol=1e-9, atol=1e-13)


@needs_c
def test_dopri_failure_parity():
    W, H = WeightFn.from_string("1-r"), WeightFn.from_string("1")
    args = (*W._program, *H._program, 2.0, 3.0, 0.5, 2.0, 1.0, 0.0, 1e-10, 1e-10, 100000, 1.5,
            1e150)
    a, b = PY.dopri_flux(*args), C.dopri_flux(*args)
    assert a[5] == b[5] != K.DP_OK
    assert a[6] == pytest.approx(b[6], rel=1e-9)


@needs_c
@pytest.mark.parametrize("m", [1, K.VECTOR_CROSSOVER, K.VECTOR_CROSSOVER + 1, 5000])
def test_size_dispatch_matches_both_backends(m):
    ops, args = WeightFn.from_string(EXPRS[3])._program
    r = np.geomspace(1e-2, 1e2, m)
    got, status, _ = K.eval_program(ops, args, r)
    assert status == K.ST_OK
    np.testing.assert_allclose(got, C.eval_program(ops, args, r)[0], rtol=1e-14, atol=0)
    bad = np.append(r, 0.0)  # pow(r,1.5)*exp(-r) is fine, log(1+r)/r divides by zero
    assert K.eval_program(ops, args, bad)[1:] == (K.ST_ZERO_DIV, m)
