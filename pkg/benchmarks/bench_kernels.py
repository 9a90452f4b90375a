"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Both backends get identical inputs; each row reports the best of ``--repeat``
runs and the speed-up of the compiled kernel over the Python one.  The
``selected`` column times what the package actually calls: for array
evaluation that is the compiled kernel on small batches and numpy above
``VECTOR_CROSSOVER`` points.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from bessel_forge import _kernels as K
from bessel_forge.radial_ode import initial_flux
from bessel_forge.weights import WeightFn

EXPR = "exp(-r)*pow(r,1.5)+log(1+r)/r"


def cases():
    ops, args = WeightFn.from_string(EXPR)._program
    grids = {m: np.geomspace(1e-3, 1e3, m) for m in (21, 1_000, 1_000_000)}
    scalars = [float(x) for x in np.geomspace(1e-3, 1e3, 20_000)]
    W, H = WeightFn.from_string("1+0.1*r"), WeightFn.from_string("0.3*pow(r,-2.5)+exp(-r)")
    y0 = initial_flux(W, 2.0, 4.0, 1.0, -0.5)
    ode = (*W._program, *H._program, 2.0, 4.0, 1.0, 1e3, 1.0, y0, 1e-11, 1e-11, 200_000, 999.0,
           1e150)
    rows = [(f"eval_program  {m:>7} points", (lambda g: lambda k: k.eval_program(ops, args, g))(g))
            for m, g in grids.items()]
    return rows + [
        ("eval_scalar   2e4 calls",
         lambda k: [k.eval_scalar(ops, args, x) for x in scalars]),
        ("dopri_flux    p=2 Q=4 on [1, 1e3]", lambda k: k.dopri_flux(*ode)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the timings here")
    args = ap.parse_args(argv)
    if K.compiled_backend is None:
        print("compiled kernels are not built; nothing to compare", file=sys.stderr)
        return 1
    rows = []
    print(f"expression: {EXPR}")
    print(f"{'kernel':<36} {'python s':>10} {'cython s':>10} {'selected s':>11} {'speed-up':>9}")
    for label, run in cases():
        def best(k):
            number = 1 if "1000000" in label else 20
            return min(timeit.repeat(lambda: run(k), number=number, repeat=args.repeat)) / number
        t_py, t_c, t_sel = best(K.python_backend), best(K.compiled_backend), best(K)
        rows.append({"kernel": label, "python_s": t_py, "cython_s": t_c, "selected_s": t_sel,
                     "speedup": t_py / t_sel})
        print(f"{label:<36} {t_py:>10.2e} {t_c:>10.2e} {t_sel:>11.2e} {t_py / t_sel:>8.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
