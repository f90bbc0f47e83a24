"""Run configuration, report assembly and deterministic JSON output."""

from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
import hashlib
import json
import math
import os
import tempfile

from . import tensor_algebra as ta

SCHEMA_VERSION = "1.0"
OUTDIR_ENV = "CRITMETRIC_OUTDIR"

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_PRECONDITION = 2
EXIT_NONCONVERGENCE = 3

# Everything a reader needs to interpret the numbers in a report.
CONVENTIONS = {
    "riemann": "R_ijkl = <R(e_i, e_j) e_l, e_k>, R(X,Y) = [∇_X, ∇_Y] - ∇_[X,Y]; unit sphere has R_ijkl = g_ik g_jl - g_il g_jk",
    "ricci": "R_ik = R_ijkj",
    "frame": "Cholesky orthonormal frame of g at the probe point; derivative indices come first",
    "tensor_inner_product": "full contraction S_i..l T_i..l (no 1/4 factor)",
    "two_form_inner_product": "<a, b> = 1/2 a_ij b_ij",
    "hodge_star": "(*a)_ij = 1/2 eps_ijkl a_kl, eps_1234 = +1",
    "lambda_pm_matrix": "M±_ab = 1/4 W_ijkl (w±_a)_ij (w±_b)_kl, w±_a = (e^0^e^a ± *(e^0^e^a))/sqrt2",
    "det_calibration": ta.DET_CALIBRATION,
    "weitzenbock_det_constant": ta.WEITZENBOCK_DET_CONSTANT,
    "kulkarni_nomizu": "(a⊙b)_ijkl = a_ik b_jl + a_jl b_ik - a_il b_jk - a_jk b_il",
}


def _canonical(obj):
    if hasattr(obj, "tolist"):
        obj = obj.tolist()
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_canonical(obj[k])}" for k in sorted(obj)) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canonical(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    return json.dumps(str(obj), ensure_ascii=False)


def format_float(x):
    """17-significant-digit encoding; non-finite values become null."""
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = "%.17g" % x
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def emit_json(obj, indent=2):
    """Deterministic JSON: sorted keys, %.17g floats, fixed indentation."""
    return _pretty(obj, 0, indent) + "\n"


def _pretty(raw, level, indent):
    if hasattr(raw, "tolist"):
        raw = raw.tolist()
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(raw, dict):
        if not raw:
            return "{}"
        keys = sorted(raw, key=str)
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_pretty(raw[k], level + 1, indent)}" for k in keys]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(raw, (list, tuple)):
        if not raw:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
            return "[" + ", ".join(_canonical(v) for v in raw) + "]"
        items = [pad + _pretty(v, level + 1, indent) for v in raw]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(raw, str):
        return json.dumps(raw, ensure_ascii=False)
    return _canonical(raw)


def convention_hash():
    return hashlib.sha256(_canonical(CONVENTIONS).encode("utf-8")).hexdigest()


@dataclass
class RunConfig:
    subcommand: str
    model: str = "euclidean-ball"
    n: int = 3
    radius: float = 1.0
    eps: float = 0.05
    seed: int = 0
    probes: int = 20
    nodes: int = 64
    trials: int = 1000
    which: tuple = ()
    tolerances: dict = field(default_factory=dict)
    outdir: str = None
    format: str = "text"
    timings: bool = False

    def echo(self):
        d = asdict(self)
        d["which"] = list(self.which)
        d["tolerances"] = {k: float(v) for k, v in sorted(self.tolerances.items())}
        d.pop("timings")
        return d


def build_report(config, checks, summary=None, error=None, warnings=(), timings=None):
    """Assemble a report dict; ``checks`` is a list of entry dicts with a "name"."""
    checks = sorted(checks, key=lambda c: c["name"])
    if error is not None:
        status = error["exit_code"]
    elif any(c.get("passed") is False for c in checks):
        status = EXIT_FAIL
    else:
        status = EXIT_PASS
    report = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": config.subcommand,
        "config": config.echo(),
        "conventions": {"sha256": convention_hash(), "sheet": dict(CONVENTIONS)},
        "checks": checks,
        "passed": status == EXIT_PASS,
        "exit_code": status,
        "warnings": list(warnings),
    }
    if summary is not None:
        report["summary"] = summary
    if error is not None:
        report["error"] = error
    if timings is not None:
        report["timings"] = {k: float(v) for k, v in sorted(timings.items())}
    return report


def error_entry(exc, exit_code):
    return {"type": type(exc).__name__, "message": str(exc), "exit_code": int(exit_code)}


def _atomic_write(path, text):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def persist(text, outdir, subcommand, now=None):
    """Write <outdir>/<timestamp>-<subcommand>.json and refresh latest.json."""
    os.makedirs(outdir, exist_ok=True)
    now = now or datetime.now(timezone.utc)
    stamp = now.strftime("%Y%m%dT%H%M%S%fZ")
    name = f"{stamp}-{subcommand}.json"
    path = os.path.join(outdir, name)
    k = 1
    while os.path.exists(path):
        name = f"{stamp}-{k}-{subcommand}.json"
        path = os.path.join(outdir, name)
        k += 1
    _atomic_write(path, text)
    index = {"schema_version": SCHEMA_VERSION, "latest": name, "subcommand": subcommand}
    _atomic_write(os.path.join(outdir, "latest.json"), emit_json(index))
    return path
