"""Command-line entry point: ``bessel-forge <command> --spec run.json``.

Each run is described by a flat JSON spec validated against a per-command
schema (unknown keys are rejected). The report echoes the spec with defaults
filled in, so feeding the echo back reproduces the report byte for byte.

Exit status: 0 success, 1 well-formed negative outcome (not certified,
inequality or identity violated), 2 invalid spec or tool error.
"""

from __future__ import annotations

import argparse
import copy
import io
import json
import math
import os
import sys
import time

import jsonschema
import numpy as np

from . import __version__
from .errors import BesselForgeError, SpecError

COMMANDS = ("certify", "ode", "picone", "hardy", "rellich", "geometry-check")
EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2

# ------------------------------------------------------------------- schemas

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT_POS = {"type": "integer", "minimum": 1}
_SEED = {"type": "integer", "minimum": 0}
_WEIGHT = {
    "oneOf": [
        {"type": "string", "minLength": 1},
        {
            "type": "object",
            "properties": {
                "expr": {"type": "string", "minLength": 1},
                "r_min": {"type": "number", "minimum": 0},
                "r_max": _POS,
                "decay": _NUM,
            },
            "required": ["expr"],
            "additionalProperties": False,
        },
    ]
}
_PROFILE = {
    "type": "object",
    "properties": {
        "family": {"enum": ["bump", "gaussian", "near_extremal"]},
        "beta": _POS,
        "k": {"type": "number", "minimum": 1},
        "sigma": _POS,
        "eps": _POS,
        "R": _POS,
        "amplitude": _NUM,
        "r_in": {"type": "number", "minimum": 0},
    },
    "required": ["family"],
    "additionalProperties": False,
}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_BOX = {"type": "array", "items": _VEC, "minItems": 2, "maxItems": 2}


def _schema(props: dict, required: list[str]) -> dict:
    props = dict(props)
    props["command"] = {"type": "string"}
    return {"type": "object", "properties": props, "required": required,
            "additionalProperties": False}


SCHEMAS = {
    "certify": _schema({
        "W": _WEIGHT, "H": _WEIGHT, "p": _POS, "Q": _POS, "r0": _POS,
        "tol": _POS, "scan_factor": {"type": "number", "minimum": 0},
    }, ["W", "H", "p", "Q", "r0"]),
    "ode": _schema({
        "W": _WEIGHT, "H": _WEIGHT, "p": _POS, "Q": _POS, "r0": _POS, "r1": _POS,
        "v0": _POS, "dv0": _NUM, "tol": _POS, "max_steps": _INT_POS,
    }, ["W", "H", "p", "Q", "r0", "r1"]),
    "picone": _schema({
        "geometry": {"type": "string"},
        "p": _POS,
        "order": {"enum": [1, 2]},
        "family": {"enum": ["random", "random_complex", "superharmonic", "equality"]},
        "c": _NUM,
        "count": _INT_POS,
        "seed": _SEED,
        "box": _POS,
        "tolerance": _POS,
        "identity_tolerance": _POS,
    }, ["geometry", "p", "seed"]),
    "hardy": _schema({
        "mode": {"enum": ["radial", "group", "consistency", "best-constant", "sweep"]},
        "W": _WEIGHT, "H": _WEIGHT, "p": _POS, "Q": _POS,
        "geometry": {"type": "string"},
        "profile": _PROFILE,
        "profiles": {"type": "array", "items": _PROFILE, "minItems": 1},
        "tol": _POS,
        "box": _BOX,
        "exclusion": _POS,
        "samples": _INT_POS,
        "seed": _SEED,
        "bounds": {"type": "object",
                   "additionalProperties": {"type": "array", "items": _POS,
                                            "minItems": 2, "maxItems": 2}},
        "maxiter": _INT_POS,
        "restarts": _INT_POS,
        "param": {"type": "string"},
        "values": _VEC,
    }, ["mode", "W", "H", "p"]),
    "rellich": _schema({
        "action": {"enum": ["constant", "hypothesis", "check"]},
        "n": {"type": "integer", "minimum": 1},
        "p": _POS,
        "gamma": _NUM,
        "W": _WEIGHT, "H": _WEIGHT, "v": _WEIGHT,
        "radii": _VEC,
        "rel_tol": _POS,
        "profile": _PROFILE,
        "tol": _POS,
    }, ["action", "n"]),
    "geometry-check": _schema({
        "geometry": {"type": "string"},
        "points": _INT_POS,
        "seed": _SEED,
        "scale": _POS,
        "lambdas": _VEC,
    }, ["geometry", "seed"]),
}

DEFAULTS = {
    "certify": {"tol": 1e-10, "scan_factor": 1000.0},
    "ode": {"v0": 1.0, "dv0": 0.0, "tol": 1e-10, "max_steps": 1_000_000},
    "picone": {"order": 1, "family": "random", "count": 100, "box": 1.0,
               "tolerance": 1e-7, "identity_tolerance": 1e-6},
    "hardy": {"tol": 1e-10},
    "rellich": {"p": 2.0, "gamma": 0.0},
    "geometry-check": {"points": 100, "scale": 2.0, "lambdas": [0.5, 2.0, 10.0]},
}

# fields that only make sense (and are then required) in some modes/actions
HARDY_MODE_REQUIRES = {
    "radial": ["Q"],
    "group": ["geometry", "profile", "seed"],
    "consistency": ["geometry", "profile", "seed"],
    "best-constant": ["Q", "profile"],
    "sweep": ["Q", "profile", "param", "values"],
}
HARDY_MODE_DEFAULTS = {
    "group": {"samples": 1_000_000},
    "consistency": {"samples": 1_000_000},
    "best-constant": {"maxiter": 200, "restarts": 3},
}
RELLICH_ACTION_REQUIRES = {
    "constant": [],
    "hypothesis": ["W", "H", "v", "radii"],
    "check": ["W", "H", "profile"],
}


def _field_of(err: jsonschema.ValidationError) -> str:
    path = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else ""
        path.append(missing)
    elif err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        path.append(",".join(extra))
    return ".".join(path) or "<root>"


def validate_spec(spec, command: str) -> dict:
    """Schema-check ``spec`` for ``command`` and return it with defaults filled."""
    if not isinstance(spec, dict):
        raise SpecError("spec must be a JSON object", "<root>")
    if "command" in spec and spec["command"] != command:
        raise SpecError(f"spec is for {spec['command']!r}, not {command!r}", "command")
    errors = sorted(jsonschema.Draft7Validator(SCHEMAS[command]).iter_errors(spec),
                    key=lambda e: (list(map(str, e.absolute_path)), e.validator))
    if errors:
        err = errors[0]
        raise SpecError(err.message, _field_of(err))
    out = copy.deepcopy(DEFAULTS[command])
    if command == "hardy":
        out.update(HARDY_MODE_DEFAULTS.get(spec["mode"], {}))
        _require(spec, HARDY_MODE_REQUIRES[spec["mode"]], f"mode {spec['mode']!r}")
    if command == "rellich":
        _require(spec, RELLICH_ACTION_REQUIRES[spec["action"]], f"action {spec['action']!r}")
    if command == "picone" and spec.get("order", 1) == 2 and \
            spec.get("family", "random") == "random_complex":
        raise SpecError("complex u is only available for order 1", "family")
    out.update(spec)
    out["command"] = command
    return out


def _require(spec: dict, names: list[str], context: str) -> None:
    for name in names:
        if name not in spec:
            raise SpecError(f"{name!r} is required for {context}", name)


# --------------------------------------------------------------- conversion


def _weight(w):
    from .weights import WeightFn
    if isinstance(w, str):
        return WeightFn.from_string(w)
    return WeightFn.from_string(w["expr"], r_min=float(w.get("r_min", 0.0)),
                                r_max=float(w.get("r_max", math.inf)), decay=w.get("decay"))


def _profile(d, Q=None, p=2.0, rellich_n=None):
    from .profiles import profile_from_dict
    try:
        return profile_from_dict(d, Q, p, rellich_n)
    except ValueError as exc:
        raise SpecError(str(exc), "profile") from None


def _geometry(text):
    from .geometry import parse_geometry
    try:
        return parse_geometry(text)
    except ValueError as exc:
        raise SpecError(str(exc), "geometry") from None


def jsonable(x):
    """Plain JSON types; non-finite floats become strings so output stays valid JSON."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


# ----------------------------------------------------------------- commands


class Outcome:
    """What a command produced: JSON result, exit status, curves, warnings."""

    def __init__(self, result: dict, ok: bool = True, curves: dict | None = None,
                 warnings: list[str] | None = None):
        self.result = result
        self.ok = ok
        self.curves = curves or {}
        self.warnings = warnings or []


def run_certify(spec: dict) -> Outcome:
    from .certify import CERTIFIED, certify_bessel_pair
    from .radial_ode import positivity_scan
    W, H = _weight(spec["W"]), _weight(spec["H"])
    cert = certify_bessel_pair(W, H, spec["p"], spec["Q"], spec["r0"], spec["tol"])
    result = {"certificate": cert.to_dict()}
    warnings = []
    if not cert.certified_tail:
        warnings.append("tail bound is best-effort (decay probed, not declared)")
    if cert.verdict == CERTIFIED and spec["scan_factor"] > 0:
        r_max = spec["r0"] * spec["scan_factor"]
        scan = positivity_scan(W, H, spec["p"], spec["Q"], spec["r0"], r_max, (1.0, 0.0),
                               tol=spec["tol"])
        result["positivity_scan"] = {"init": [1.0, 0.0], "r_max": r_max,
                                     "positive": scan.positive, "first_zero": scan.first_zero}
    curves = {}
    if cert.phi_grid is not None:
        curves["phi"] = (["r", "phi"], list(zip(*cert.phi_grid)))
    return Outcome(result, cert.verdict == CERTIFIED, curves, warnings)


def run_ode(spec: dict) -> Outcome:
    from .radial_ode import solve_radial, verify_ode_residual
    W, H = _weight(spec["W"]), _weight(spec["H"])
    sol = solve_radial(W, H, spec["p"], spec["Q"], spec["r0"], spec["r1"], spec["v0"],
                       spec["dv0"], spec["tol"], max_steps=spec["max_steps"])
    result = {"solution": sol.summary()}
    warnings = []
    if sol.grid.size >= 5:
        result["residual"] = verify_ode_residual(sol, W, H, spec["p"], spec["Q"])
    else:
        warnings.append("fewer than 5 grid nodes; residual check skipped")
    curves = {"solution": (["r", "v", "v_prime", "flux"],
                           list(zip(sol.grid, sol.v, sol.v_prime, sol.flux)))}
    return Outcome(result, sol.positive, curves, warnings)


def _equality_sampler(g, seed, c, box):
    from .picone import random_smooth_pair
    rng = np.random.default_rng(seed)
    while True:
        _, v = random_smooth_pair(g.n, rng)
        x = rng.uniform(-box, box, g.n)
        yield (lambda y, v=v: c * v(y)), v, x


def run_picone(spec: dict) -> Outcome:
    from .picone import picone_sweep, seeded_sampler
    g = _geometry(spec["geometry"])
    order, family = spec["order"], spec["family"]
    if spec["p"] <= 1:
        raise SpecError("p must exceed 1", "p")
    if order == 2 and g.name != "euclidean":
        raise SpecError("the second-order identity is Euclidean only", "geometry")
    if family == "equality":
        sampler = _equality_sampler(g, spec["seed"], spec.get("c", 1.0), spec["box"])
    elif family == "superharmonic" or order == 2:
        if order != 2:
            raise SpecError("the superharmonic family is for order 2", "family")
        sampler = seeded_sampler(g, spec["seed"], order=2, box=spec["box"])
    else:
        sampler = seeded_sampler(g, spec["seed"], order=1,
                                 complex_u=family == "random_complex", box=spec["box"])
    summary = picone_sweep(g, None, None, spec["p"], sampler, spec["count"], order=order,
                           tolerance=spec["tolerance"])
    ok = (not summary.violations and not summary.errors and summary.evaluated > 0
          and summary.max_rel_diff <= spec["identity_tolerance"])
    warnings = [f"{summary.skipped} point(s) skipped near zeros of u"] if summary.skipped else []
    return Outcome({"summary": summary.to_dict()}, ok, warnings=warnings)


def _holds(rep) -> bool:
    return rep.ratio is None or rep.ratio + 3.0 * rep.uncertainty >= 1.0


def run_hardy(spec: dict) -> Outcome:
    from . import hardy
    from .profiles import default_family
    W, H, p, mode = _weight(spec["W"]), _weight(spec["H"]), spec["p"], spec["mode"]
    warnings = []
    if mode in ("group", "consistency"):
        g = _geometry(spec["geometry"])
        prof = _profile(spec["profile"], g.Q, p)
        box = spec.get("box")
        if box is not None:
            box = (np.array(box[0], float), np.array(box[1], float))
        if mode == "group":
            rep = hardy.hardy_group(g, W, H, p, prof, box, spec.get("exclusion"),
                                    spec["samples"], spec["seed"])
            if rep.degenerate:
                warnings.append("degenerate profile: both integrals vanish")
            return Outcome({"report": rep.to_dict(), "holds": _holds(rep)}, _holds(rep),
                           warnings=warnings)
        res = hardy.mc_radial_consistency(g, W, H, p, prof, box, spec.get("exclusion"),
                                          spec["samples"], spec["seed"], spec["tol"])
        return Outcome({"consistency": res}, res["consistent"])
    Q = spec["Q"]
    if mode == "radial":
        if "profiles" in spec:
            profiles = [_profile(d, Q, p) for d in spec["profiles"]]
        elif "profile" in spec:
            profiles = [_profile(spec["profile"], Q, p)]
        else:
            profiles = default_family(Q, p)
        reports = [hardy.hardy_radial(Q, p, W, H, pr, spec["tol"]) for pr in profiles]
        if any(r.degenerate for r in reports):
            warnings.append("degenerate profile: both integrals vanish")
        holds = all(_holds(r) for r in reports)
        finite = [r.ratio for r in reports if r.ratio is not None]
        return Outcome({"reports": [r.to_dict() for r in reports], "holds": holds,
                        "min_ratio": min(finite) if finite else None}, holds, warnings=warnings)
    family = _profile(spec["profile"], Q, p)
    if mode == "best-constant":
        bounds = {k: tuple(v) for k, v in spec["bounds"].items()} if "bounds" in spec else None
        try:
            res = hardy.best_constant_search(Q, p, W, H, family, bounds,
                                             maxiter=spec["maxiter"], restarts=spec["restarts"])
        except (KeyError, ValueError) as exc:
            raise SpecError(str(exc), "bounds") from None
        if not res.converged:
            warnings.append("optimizer stopped without converging; best value reported")
        return Outcome({"search": res.to_dict()}, True, warnings=warnings)
    rows = hardy.ratio_sweep(Q, p, W, H, family, spec["param"], spec["values"], spec["tol"])
    return Outcome({"sweep": [{"param": a, "ratio": b, "uncertainty": c} for a, b, c in rows],
                    "param": spec["param"]}, True,
                   {"sweep": (["param", "ratio", "uncertainty"], rows)})


def run_rellich(spec: dict) -> Outcome:
    from . import rellich
    n, p, gamma, action = spec["n"], spec["p"], spec["gamma"], spec["action"]
    if action == "constant":
        out = {"rellich_constant": rellich.rellich_constant(n, p, gamma)}
        if p == 2 and gamma == 0 and n >= 5:
            out["classical_constant"] = rellich.rellich_classical_constant(n)
        if gamma == 0 and 1 < p < n / 2:
            out["okazawa_constant"] = rellich.okazawa_constant(n, p)
        out["extremal_exponent"] = rellich.extremal_exponent(n, p, gamma)
        return Outcome(out)
    W, H = _weight(spec["W"]), _weight(spec["H"])
    if action == "hypothesis":
        rep = rellich.rellich_hypothesis_check(W, _weight(spec["v"]), H, p, n, spec["radii"],
                                               rel_tol=spec.get("rel_tol", 1e-5))
        warnings = ["-Delta v <= 0 at some radius (hypothesis violated)"] if rep.violation else []
        return Outcome({"hypothesis": rep.to_dict()}, rep.holds, warnings=warnings)
    prof = _profile(spec["profile"], None, p, rellich_n=n)
    rep = rellich.rellich_check(W, H, p, n, prof, spec.get("tol", 1e-10))
    warnings = ["degenerate profile: both integrals vanish"] if rep.degenerate else []
    return Outcome({"report": rep.to_dict(), "holds": _holds(rep)}, _holds(rep),
                   warnings=warnings)


def run_geometry_check(spec: dict) -> Outcome:
    from . import geometry as G
    g = _geometry(spec["geometry"])
    rng = np.random.default_rng(spec["seed"])
    pts = G.random_points(g, spec["points"], rng, spec["scale"])
    gram = max(G.gram_check(g, x) for x in pts)
    sym = max(float(np.max(np.abs(g.a_matrix(x) - g.a_matrix(x).T))) for x in pts)
    min_eig = min(float(np.linalg.eigvalsh(g.a_matrix(x)).min()) for x in pts)
    out = {"geometry": g.label, "n": g.n, "Q": g.Q, "points": spec["points"],
           "gram_max": gram, "symmetry_max": sym, "min_eigenvalue": min_eig}
    ok = gram <= 1e-12 and sym <= 1e-14 and min_eig >= -1e-12
    warnings = []
    if g.has_gauge:
        far = [x for x in pts if g.gauge(x) >= 0.5]
        psi_err = 0.0
        for x in far:
            grad = G.horizontal_gradient_fd(g, lambda y: float(g.gauge(y)), x)
            fd = float(grad @ grad)
            closed = float(g.psi(x))
            psi_err = max(psi_err, abs(fd - closed) / max(abs(closed), 1e-300))
        hom, inv = 0.0, 0.0
        for lam in spec["lambdas"]:
            for x in pts:
                d = float(g.gauge(x))
                hom = max(hom, abs(float(g.gauge(g.dilate(x, lam))) - lam * d) / max(lam * d, 1e-300))
                inv = max(inv, abs(float(g.psi(g.dilate(x, lam))) - float(g.psi(x))))
        out.update({"psi_points": len(far), "psi_fd_rel_error": psi_err,
                    "homogeneity_rel_error": hom, "psi_invariance_error": inv})
        ok = ok and psi_err <= 1e-6 and hom <= 1e-12 and inv <= 1e-10
    else:
        warnings.append(f"{g.name} has no closed-form gauge; gauge checks skipped")
    out["passed"] = ok
    return Outcome(out, ok, warnings=warnings)


RUNNERS = {
    "certify": run_certify,
    "ode": run_ode,
    "picone": run_picone,
    "hardy": run_hardy,
    "rellich": run_rellich,
    "geometry-check": run_geometry_check,
}

# ------------------------------------------------------------------- output


def render_json(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def emit_csv(curves: dict, name: str) -> str:
    """Header plus rows, floats in shortest round-trip form, LF line endings."""
    if name not in curves:
        available = ", ".join(sorted(curves)) or "none"
        raise SpecError(f"no curve {name!r} in this report (available: {available})", "--csv")
    header, rows = curves[name]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def run(command: str, spec, timing: bool = False) -> tuple[dict, int, dict]:
    """Validate and execute one spec; returns (report, exit status, curves)."""
    report = {"command": command, "version": __version__}
    t0 = time.perf_counter()
    try:
        full = validate_spec(spec, command)
        report["spec"] = full
        outcome = RUNNERS[command](full)
    except SpecError as exc:
        report["error"] = {"type": "SpecError", "field": exc.field, "message": exc.detail}
        return report, EXIT_ERROR, {}
    except (BesselForgeError, ValueError, ArithmeticError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        return report, EXIT_ERROR, {}
    report["result"] = outcome.result
    report["warnings"] = outcome.warnings
    if timing:
        report["wall_time_s"] = time.perf_counter() - t0
    return report, EXIT_OK if outcome.ok else EXIT_NEGATIVE, outcome.curves


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bessel-forge",
        description="Bessel-pair certification, radial ODE and Hardy/Rellich checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run a {name} spec")
        p.add_argument("--spec", required=True, help="JSON run spec ('-' for stdin)")
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--csv", metavar="CURVE",
                       help="print this curve as CSV on stdout (solution, phi, sweep)")
        p.add_argument("--timing", action="store_true",
                       help="include wall time (makes reports non-reproducible)")
    return parser


def _load(path: str):
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise SpecError(f"cannot read spec: {exc.strerror}", "--spec") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc.msg} (line {exc.lineno})", "--spec") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _load(args.spec)
    except SpecError as exc:
        report = {"command": args.command, "version": __version__,
                  "error": {"type": "SpecError", "field": exc.field, "message": exc.detail}}
        status, curves = EXIT_ERROR, {}
    else:
        report, status, curves = run(args.command, spec, args.timing)
    csv_text = None
    if args.csv and status != EXIT_ERROR:
        try:
            csv_text = emit_csv(curves, args.csv)
        except SpecError as exc:
            report["error"] = {"type": "SpecError", "field": exc.field, "message": exc.detail}
            status = EXIT_ERROR
    text = render_json(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    try:
        if csv_text is not None:
            sys.stdout.write(csv_text)
        elif not args.out:
            sys.stdout.write(text)
        sys.stdout.flush()
    except BrokenPipeError:  # reader went away (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    if "error" in report:
        err = report["error"]
        where = f" [{err['field']}]" if err.get("field") else ""
        print(f"bessel-forge: error{where}: {err['message']}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
