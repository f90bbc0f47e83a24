"""Command-line front end.

    critmetric verify        --model spherical-cap --n 4 --r0 0.7
    critmetric identities    --which hamilton --model perturbed-flat --n 4
    critmetric isoperimetric --model euclidean-ball --n 3 --r 1
    critmetric selftest      --seed 42 --trials 1000
    critmetric models list

Settings are resolved as: command-line flags, then a ``key = value``
config file (``--config``), then built-in defaults.  The output directory
falls back to the CRITMETRIC_OUTDIR environment variable.
"""

import argparse
import os
import sys
import time

from . import algebra_suite, identities, integral_geometry as ig
from .charts import FAMILIES, ModelSpec, build_model, make_euclidean_ball
from .errors import CritMetricError, NumericalNonConvergence, PreconditionViolation
from .report import (
    EXIT_NONCONVERGENCE,
    EXIT_PASS,
    EXIT_PRECONDITION,
    OUTDIR_ENV,
    RunConfig,
    build_report,
    emit_json,
    error_entry,
    persist,
)

MODEL_NOTES = {
    "euclidean-ball": "flat ball of radius r, f = (r^2 - |x|^2)/(2(n-1)); critical",
    "spherical-cap": "geodesic ball of radius r0 < pi/2 in the unit sphere; critical",
    "hyperbolic-ball": "geodesic ball of radius r0 in hyperbolic space; critical",
    "perturbed-flat": "g = I + eps*h, seeded smooth h; not critical (universal identities only)",
}

TOLERANCE_NAMES = tuple(identities.CHECKS) + tuple(algebra_suite.PROPERTIES)

# Tolerances of the isoperimetric checks.
EQUALITY_RTOL = 1e-8
STRICT_GAP = 1e-6
INEQUALITY_SLACK = 1e-9
FLUX_TOL = 1e-9
MEAN_CURVATURE_TOL = 1e-9
CR_RTOL = 1e-10
FLAT_INTEGRAL_RTOL = 1e-12
FLAT_RATIO_TOL = 1e-10

_DEFAULTS = {f.name: f.default for f in RunConfig.__dataclass_fields__.values() if f.name != "subcommand"}
_DEFAULTS["tolerances"] = {}


class UsageError(Exception):
    pass


# -- configuration ------------------------------------------------------------------------

def _tol_dest(name):
    return "tol_" + name.replace("-", "_")


def _add_common(p):
    p.add_argument("--model", choices=FAMILIES, default=argparse.SUPPRESS)
    p.add_argument("--n", type=int, default=argparse.SUPPRESS, help="dimension")
    p.add_argument("--r", "--r0", dest="radius", type=float, default=argparse.SUPPRESS,
                   help="ball radius (geodesic radius for caps and hyperbolic balls)")
    p.add_argument("--eps", type=float, default=argparse.SUPPRESS, help="perturbed-flat amplitude")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--probes", type=int, default=argparse.SUPPRESS, help="probe points per check")
    p.add_argument("--nodes", type=int, default=argparse.SUPPRESS, help="radial quadrature nodes")
    p.add_argument("--json", dest="format", action="store_const", const="json", default=argparse.SUPPRESS,
                   help="print the JSON report instead of text")
    p.add_argument("--outdir", default=argparse.SUPPRESS, help=f"report directory (default ${OUTDIR_ENV})")
    p.add_argument("--config", default=None, help="key = value settings file")
    p.add_argument("--timings", action="store_true", default=argparse.SUPPRESS,
                   help="record wall time (makes reports non-reproducible)")
    for name in TOLERANCE_NAMES:
        p.add_argument(f"--tol-{name}", dest=_tol_dest(name), type=float, default=argparse.SUPPRESS,
                       help=argparse.SUPPRESS)


def build_parser():
    parser = argparse.ArgumentParser(prog="critmetric", description="Numerical checks of Miao-Tam critical metrics.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    _add_common(sub.add_parser("verify", help="Miao-Tam residual and its trace identities"))
    p = sub.add_parser("identities", help="curvature identities with finite-difference error estimates")
    _add_common(p)
    p.add_argument("--which", default=argparse.SUPPRESS,
                   help="comma-separated subset of " + ",".join(identities.IDENTITY_CHECKS))
    _add_common(sub.add_parser("isoperimetric", help="area and isoperimetric bounds by quadrature"))
    p = sub.add_parser("selftest", help="random-tensor property suite for the 4D algebra")
    _add_common(p)
    p.add_argument("--trials", type=int, default=argparse.SUPPRESS)
    p = sub.add_parser("models", help="model library")
    p.add_argument("action", choices=["list"])
    p.add_argument("--json", dest="format", action="store_const", const="json", default="text")
    return parser


_CONFIG_TYPES = {
    "model": str, "n": int, "radius": float, "r": float, "r0": float, "eps": float, "seed": int,
    "probes": int, "nodes": int, "trials": int, "which": str, "outdir": str, "json": bool,
    "timings": bool, "format": str,
}


def _parse_bool(v):
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def read_config_file(path):
    """Parse ``key = value`` lines (``#`` comments allowed) into config fields."""
    out, tols = {}, {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("_", "-")
        if key.startswith("tol-"):
            name = key[4:]
            if name not in TOLERANCE_NAMES:
                raise UsageError(f"{path}:{lineno}: unknown tolerance {name!r}")
            tols[name] = float(value)
            continue
        kind = _CONFIG_TYPES.get(key)
        if kind is None:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            val = _parse_bool(value) if kind is bool else kind(value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
        if key in ("r", "r0"):
            key = "radius"
        if key == "json":
            key, val = "format", ("json" if val else "text")
        out[key] = val
    if tols:
        out["tolerances"] = tols
    return out


def resolve_config(args, environ=None):
    """Merge flags > config file > defaults (> environment for the outdir)."""
    environ = os.environ if environ is None else environ
    ns = vars(args)
    merged = {k: (dict(v) if isinstance(v, dict) else v) for k, v in _DEFAULTS.items()}
    if merged["outdir"] is None and environ.get(OUTDIR_ENV):
        merged["outdir"] = environ[OUTDIR_ENV]
    if ns.get("config"):
        filed = read_config_file(ns["config"])
        merged["tolerances"].update(filed.pop("tolerances", {}))
        merged.update(filed)
    for key in ("model", "n", "radius", "eps", "seed", "probes", "nodes", "trials", "which", "outdir", "format", "timings"):
        if key in ns:
            merged[key] = ns[key]
    for name in TOLERANCE_NAMES:
        if _tol_dest(name) in ns:
            merged["tolerances"][name] = ns[_tol_dest(name)]
    which = merged["which"]
    if isinstance(which, str):
        which = tuple(w.strip() for w in which.split(",") if w.strip())
    for w in which:
        if w not in identities.IDENTITY_CHECKS:
            raise UsageError(f"unknown identity {w!r}; choose from {', '.join(identities.IDENTITY_CHECKS)}")
    merged["which"] = tuple(which)
    if merged["model"] not in FAMILIES:
        raise UsageError(f"unknown model {merged['model']!r}")
    if merged["format"] not in ("text", "json"):
        raise UsageError(f"unknown format {merged['format']!r}")
    if merged["probes"] < 0 or merged["trials"] < 0 or merged["nodes"] < 1:
        raise UsageError("probes and trials must be >= 0 and nodes >= 1")
    return RunConfig(subcommand=args.subcommand, **merged)


# -- subcommands ---------------------------------------------------------------------------

def _model(config):
    return build_model(ModelSpec(config.model, config.n, config.radius, config.eps, config.seed))


def _potential(model):
    """The model's potential, or the flat-ball one for non-critical models."""
    if model.potential is not None:
        return model.potential, model.is_critical
    _, f = make_euclidean_ball(model.dim, model.radius)
    return f, False


def _points(config, model):
    return identities.probe_points(model.dim, model.radius, config.probes, config.seed)


def cmd_verify(config):
    model = _model(config)
    f, critical = _potential(model)
    names = ("miao-tam",) + identities.BASIC_CHECKS
    t0 = time.perf_counter()
    reps = identities.run_checks(names, model.metric, f, _points(config, model), config.tolerances, critical)
    timings = {"verify": time.perf_counter() - t0}
    warnings = []
    if not critical:
        warnings.append(f"{config.model} is not a critical metric; trace identities are labelled "
                        f"'{identities.PREMISE_UNVERIFIED}'")
    return [r.to_dict() for r in reps.values()], None, warnings, timings


def cmd_identities(config):
    model = _model(config)
    n = model.dim
    f, critical = _potential(model)
    warnings = []
    if config.which:
        names = list(config.which)
    else:
        names = []
        for nm in identities.IDENTITY_CHECKS:
            _, _, _, min_dim, exact_dim, _ = identities.CHECKS[nm]
            if n < min_dim or (exact_dim is not None and n != exact_dim):
                warnings.append(f"{nm} skipped: not defined for n = {n}")
            else:
                names.append(nm)
    t0 = time.perf_counter()
    reps = identities.run_checks(names, model.metric, f, _points(config, model), config.tolerances,
                                 critical, error_estimate=True)
    timings = {"identities": time.perf_counter() - t0}
    if not critical and any(identities.CHECKS[nm][2] for nm in names):
        warnings.append(f"{config.model} is not a critical metric; conditional identities are labelled "
                        f"'{identities.PREMISE_UNVERIFIED}'")
    return [r.to_dict() for r in reps.values()], None, warnings, timings


def _entry(name, values, passed, tolerance, verdict="", notes=()):
    return {
        "name": name,
        "kind": "inequality" if verdict else "identity",
        "values": {k: float(v) for k, v in values.items()},
        "tolerance": float(tolerance),
        "passed": passed,
        "verdict": verdict,
        "notes": list(notes),
    }


def _verdict(gap, area):
    if abs(gap) <= EQUALITY_RTOL * area:
        return "equality"
    return "strict" if gap > STRICT_GAP else "violated" if gap < -INEQUALITY_SLACK else "inconclusive"


def cmd_isoperimetric(config):
    model = _model(config)
    if model.profile is None:
        raise PreconditionViolation(f"{config.model} is not rotationally symmetric; isoperimetric checks need a geodesic-ball model")
    n, m = model.dim, config.nodes
    t0 = time.perf_counter()
    s = ig.summarize(model, m)
    checks, warnings, error = [], [], None

    if config.model == "euclidean-ball":
        q, closed = ig.flat_potential_integral(n, model.radius, m)
        rel = abs(q - closed) / abs(closed)
        checks.append(_entry("flat-potential-integral", {"quadrature": q, "closed_form": closed, "relative_error": rel},
                             rel <= FLAT_INTEGRAL_RTOL, FLAT_INTEGRAL_RTOL))
        lhs, rhs = ig.flat_isoperimetric_ratio(n, model.radius, m)
        checks.append(_entry("flat-isoperimetric-ratio", {"lhs": lhs, "rhs": rhs, "ratio_minus_one": lhs / rhs - 1},
                             abs(lhs / rhs - 1) <= FLAT_RATIO_TOL, FLAT_RATIO_TOL))

    hf = s.H * s.gradf_boundary - 1.0
    checks.append(_entry("mean-curvature-flux", {"H": s.H, "gradf_boundary": s.gradf_boundary, "H_gradf_minus_one": hf},
                         abs(hf) <= MEAN_CURVATURE_TOL, MEAN_CURVATURE_TOL))
    direct, positive = ig.constant_CR(s)
    rel = abs(direct - positive) / abs(direct)
    checks.append(_entry("CR-two-forms", {"direct": direct, "positive_form": positive, "relative_difference": rel},
                         bool(rel <= CR_RTOL and direct > 0 and positive > 0), CR_RTOL))

    a = ig.area_bound_check(model, m, summary=s)
    v = _verdict(a.gap, a.area)
    checks.append(_entry(
        "area-bound",
        {"area": a.area, "bound": a.bound, "gap": a.gap, "refined_identity_residual": a.refined_identity_residual,
         "traceless_ricci_term": a.traceless_ricci_term},
        bool(a.gap >= -INEQUALITY_SLACK and v == "equality" and a.refined_identity_residual <= EQUALITY_RTOL * a.area),
        EQUALITY_RTOL, v, ["geodesic balls in space forms are the equality case"],
    ))

    try:
        b = ig.isoperimetric_check(model, m, summary=s)
    except PreconditionViolation as exc:
        checks.append({"name": "isoperimetric-bound", "kind": "inequality", "values": {"R": s.R},
                       "tolerance": EQUALITY_RTOL, "passed": None, "verdict": "precondition violation",
                       "notes": [str(exc)]})
        error = error_entry(exc, EXIT_PRECONDITION)
    else:
        v = _verdict(b.gap, b.area)
        expected = "equality" if s.R == 0 else "strict"
        checks.append(_entry(
            "isoperimetric-bound",
            {"area": b.area, "bound": b.bound, "gap": b.gap, "C_RH": b.C_RH},
            bool(b.gap >= -INEQUALITY_SLACK and v == expected), EQUALITY_RTOL, v,
            [f"expected {expected} (scalar curvature {s.R:g})"],
        ))
        checks.append(_entry("boundary-flux", {"residual": b.flux_residual}, b.flux_residual <= FLUX_TOL, FLUX_TOL))
        checks.append(_entry("volume-bound", {"gap": b.vol_bound_gap}, b.vol_bound_gap >= -INEQUALITY_SLACK,
                             INEQUALITY_SLACK, "strict" if b.vol_bound_gap > STRICT_GAP else "equality"))

    if n == 4:
        p = identities.pinching_integrals(model, m)
        checks.append({
            "name": "pinching-integrals", "kind": "inequality",
            "values": {"lhs_integral": p.lhs_integral, "rhs_integral": p.rhs_integral, "R": p.scalar_curvature},
            "tolerance": 0.0, "passed": None if not p.precondition_ok else bool(p.hypothesis_holds),
            "verdict": "precondition violation" if not p.precondition_ok else
                       ("hypothesis holds" if p.hypothesis_holds else "hypothesis fails"),
            "notes": list(p.notes),
        })
    timings = {"isoperimetric": time.perf_counter() - t0}
    return checks, s.to_dict(), warnings, timings, error


def cmd_selftest(config):
    t0 = time.perf_counter()
    res = algebra_suite.run_suite(config.seed, config.trials, config.tolerances)
    warnings = []
    if config.trials == 0:
        warnings.append("zero trials requested: every property passes vacuously")
    return [r.to_dict() for r in res.values()], None, warnings, {"selftest": time.perf_counter() - t0}


def cmd_models(fmt):
    rows = [{"name": k, "description": MODEL_NOTES[k]} for k in FAMILIES]
    if fmt == "json":
        return emit_json({"models": rows})
    return "".join(f"{r['name']:<16} {r['description']}\n" for r in rows)


# -- output ----------------------------------------------------------------------------------

def _fmt(x):
    return "-" if x is None else f"{x:.3e}"


def render_text(report):
    cfg = report["config"]
    head = f"critmetric {report['subcommand']}"
    if report["subcommand"] != "selftest":
        head += f"  model={cfg['model']} n={cfg['n']} r={cfg['radius']:g}"
    lines = [head]
    for c in report["checks"]:
        status = "PASS" if c["passed"] else "SKIP" if c["passed"] is None else "FAIL"
        if c["kind"] == "residual":
            extra = f"max={_fmt(c['max_residual'])} tol={_fmt(c['tolerance'])}"
            if c["error_estimate"]:
                extra += f" fd_err={_fmt(c['error_estimate'])}"
            if c["premise"] != identities.PREMISE_VERIFIED:
                extra += f" [{c['premise']}]"
            if c["branch"]:
                extra += f" [{c['branch']}]"
        elif c["kind"] == "property":
            extra = f"max_err={_fmt(c['max_error'])} tol={_fmt(c['tolerance'])} trials={c['trials']}"
        else:
            extra = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(c["values"].items()))
            if c["verdict"]:
                extra += f" [{c['verdict']}]"
        lines.append(f"{status} {c['name']}: {extra}")
    for w in report["warnings"]:
        lines.append(f"warning: {w}")
    if "error" in report:
        lines.append(f"error: {report['error']['type']}: {report['error']['message']}")
    lines.append("OVERALL " + ("PASS" if report["passed"] else f"FAIL (exit {report['exit_code']})"))
    return "\n".join(lines) + "\n"


COMMANDS = {
    "verify": cmd_verify,
    "identities": cmd_identities,
    "isoperimetric": cmd_isoperimetric,
    "selftest": cmd_selftest,
}


def run(config):
    """Execute a resolved config; returns the report dict."""
    checks, summary, warnings, timings, error = [], None, [], {}, None
    try:
        out = COMMANDS[config.subcommand](config)
        checks, summary, warnings, timings = out[:4]
        if len(out) > 4:
            error = out[4]
    except NumericalNonConvergence as exc:
        error = error_entry(exc, EXIT_NONCONVERGENCE)
    except CritMetricError as exc:
        error = error_entry(exc, EXIT_PRECONDITION)
    return build_report(config, checks, summary, error, warnings, timings if config.timings else None)


def main(argv=None, environ=None, stdout=None):
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand == "models":
        stdout.write(cmd_models(args.format))
        return EXIT_PASS
    try:
        config = resolve_config(args, environ)
    except UsageError as exc:
        sys.stderr.write(f"critmetric: {exc}\n")
        return EXIT_PRECONDITION
    report = run(config)
    text = emit_json(report)
    if config.outdir:
        persist(text, config.outdir, config.subcommand)
    stdout.write(text if config.format == "json" else render_text(report))
    return int(report["exit_code"])


if __name__ == "__main__":
    sys.exit(main())
