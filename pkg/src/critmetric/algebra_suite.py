"""Seeded random-tensor property suite for the four-dimensional algebra.

Every property draws fresh random tensors per trial from one generator
seeded by ``seed``, so a (seed, trials) pair fixes the whole run.
"""

from dataclasses import dataclass, field

import numpy as np

from . import tensor_algebra as ta


@dataclass
class PropertyResult:
    name: str
    statement: str
    trials: int
    max_error: float
    tolerance: float
    error_kind: str
    passed: bool
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "name": self.name,
            "kind": "property",
            "statement": self.statement,
            "trials": int(self.trials),
            "max_error": float(self.max_error),
            "tolerance": float(self.tolerance),
            "error_kind": self.error_kind,
            "passed": bool(self.passed),
            "notes": list(self.notes),
        }


def _draw(rng, basis):
    W = ta.random_weyl(rng, 4)
    Wp, Wm, Mp, Mm = ta.weyl_pm_decompose(W, basis)
    return {
        "W": W,
        "pm": ((Wp, Mp), (Wm, Mm)),
        "v": rng.normal(size=4),
        "A": ta.random_sym(rng, 4),
        "E": ta.random_sym(rng, 4, traceless_part=True),
    }


def _det36(d):
    errs = []
    for sign, (Wpm, M) in zip((1, -1), d["pm"]):
        basis = d["basis"]
        lhs = ta.full_inner(ta.project_pm(ta.hamilton_Q(d["W"]), basis, sign), Wpm)
        rhs = ta.WEITZENBOCK_DET_CONSTANT * ta.det_weyl_pm(M)
        errs.append(abs(lhs - rhs) / ta.norm2(Wpm) ** 1.5)
    return max(errs)


def _iota(d):
    v = d["v"]
    errs = []
    for Wpm, _ in d["pm"]:
        lhs = ta.norm2(ta.interior_mult(v, Wpm))
        rhs = ta.norm2(Wpm) * float(v @ v)
        errs.append(abs(lhs - rhs) / rhs)
    return max(errs)


def _iota_operator(d):
    v = d["v"]
    errs = []
    for Wpm, M in d["pm"]:
        lhs = ta.norm2(ta.interior_mult(v, Wpm))
        rhs = float(np.sum(M * M)) * float(v @ v)
        errs.append(abs(lhs - rhs) / rhs)
    return max(errs)


def _kn_g(d):
    return abs(ta.full_inner(ta.kulkarni_nomizu(d["A"], np.eye(4)), d["W"]))


def _ric_kn_identity(d):
    lhs, rhs = ta.ric_kn_identity_check(d["E"])
    return abs(lhs - rhs) / (8.0 * ta.norm2(d["E"]) ** 2)


def _ric_kn_bound(d):
    lhs, _ = ta.ric_kn_identity_check(d["E"])
    e4 = ta.norm2(d["E"]) ** 2
    return max(0.0, (lhs - 6.0 * e4) / e4)


def _qw_bound(d):
    W = d["W"]
    return max(0.0, abs(ta.full_inner(ta.hamilton_Q(W), W)) - 4.0 * ta.norm2(W) ** 1.5)


def _pm_split(d):
    (Wp, _), (Wm, _) = d["pm"]
    w2 = ta.norm2(d["W"])
    return abs(w2 - ta.norm2(Wp) - ta.norm2(Wm)) / w2


# name -> (statement, error function, tolerance, error kind)
PROPERTIES = {
    "det36": ("<Q(W)±, W±> = 36 det W±", _det36, 1e-10, "relative to |W±|^3"),
    "iota": ("|ι_v W±|^2 = |W±|^2 |v|^2", _iota, 1e-10, "relative"),
    "iota-operator-norm": ("|ι_v W±|^2 = tr(M±^2) |v|^2", _iota_operator, 1e-10, "relative"),
    "kn-g-orthogonal": ("<A ⊙ g, W> = 0", _kn_g, 1e-12, "absolute"),
    "ric-kn-identity": ("|E⊙E|^2 = 8|E|^4 - 8|E^2|^2", _ric_kn_identity, 1e-10, "relative to 8|E|^4"),
    "ric-kn-bound": ("|E⊙E|^2 <= 6|E|^4", _ric_kn_bound, 1e-10, "excess relative to |E|^4"),
    "qw-bound": ("|<Q(W), W>| <= 4|W|^3", _qw_bound, 1e-10, "absolute excess"),
    "weyl-pm-split": ("|W|^2 = |W+|^2 + |W-|^2", _pm_split, 1e-10, "relative"),
}


def run_suite(seed=0, trials=1000, tolerances=None, orientation=1):
    """Run every property over ``trials`` random draws; returns name -> PropertyResult."""
    tolerances = tolerances or {}
    rng = np.random.default_rng(seed)
    basis = ta.lambda_basis(orientation=orientation)
    worst = {name: 0.0 for name in PROPERTIES}
    for _ in range(int(trials)):
        d = _draw(rng, basis)
        d["basis"] = basis
        for name, (_, fn, _, _) in PROPERTIES.items():
            worst[name] = max(worst[name], float(fn(d)))
    out = {}
    for name, (statement, _, tol, kind) in PROPERTIES.items():
        tol = float(tolerances.get(name, tol))
        res = PropertyResult(name, statement, int(trials), worst[name], tol, kind, worst[name] <= tol)
        if trials <= 0:
            res.notes.append("zero trials: vacuous pass")
        out[name] = res
    return out
