"""Hot kernels with a compiled backend and a pure-Python fallback.

The Cython extension is used when it imports; set ``BESSEL_FORGE_PURE=1`` to
force the Python implementation (used by the parity tests and the benchmark).
"""

import os

import numpy as np

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("BESSEL_FORGE_PURE") != "1":
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # pragma: no cover - depends on build
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

# Per-point interpretation in C beats numpy only while the batch is small;
# past a few hundred points numpy's vectorised ufuncs win (see benchmarks/).
VECTOR_CROSSOVER = 256


def _eval_program_dispatch(ops, args, r):
    if np.size(r) <= VECTOR_CROSSOVER:
        return compiled_backend.eval_program(ops, args, r)
    return python_backend.eval_program(ops, args, r)


eval_program = python_backend.eval_program if compiled_backend is None else _eval_program_dispatch
eval_scalar = backend.eval_scalar
dopri_flux = backend.dopri_flux

from ._pykernels import (  # noqa: E402
    OP_ADD, OP_CONST, OP_DIV, OP_EXP, OP_LOG, OP_MUL, OP_NEG, OP_POW, OP_SUB,
    OP_VAR, ST_LOG_DOMAIN, ST_NONFINITE, ST_OK, ST_POW_DOMAIN, ST_ZERO_DIV,
    DP_H_EVAL, DP_MAX_STEPS, DP_OK, DP_OVERFLOW, DP_UNDERFLOW, DP_W_EVAL,
    DP_W_NONPOS,
)

__all__ = [
    "BACKEND", "VECTOR_CROSSOVER", "backend", "compiled_backend", "python_backend",
    "eval_program", "eval_scalar", "dopri_flux",
]
