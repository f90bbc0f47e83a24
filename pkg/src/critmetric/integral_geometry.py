"""Volumes, boundary data and the isoperimetric constants on geodesic-ball models.

All integrands are radial, so integrals over M reduce to

    ∫_M F dV = |S^{n-1}| ∫_0^{r0} F(r) s(r)^{n-1} dr

with s the warp function (r, sin r or sinh r), done by Gauss-Legendre.
"""

from dataclasses import asdict, dataclass
import math

import numpy as np

from .errors import PreconditionViolation, QuadratureNotConverged


def unit_sphere_area(n):
    """|∂B_1^n| = 2 π^{n/2} / Γ(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray  # include |S^{n-1}| s(r)^{n-1}

    def integrate(self, values):
        return float(self.weights @ np.asarray(values, dtype=float))


def _require_profile(model):
    if model.profile is None:
        raise PreconditionViolation(
            f"{model.spec.family} is not a rotationally symmetric model"
        )


def radial_rule(model, m):
    """Nodes r_i and weights w_i with sum w_i F(r_i) ≈ ∫_M F dV."""
    _require_profile(model)
    x, w = np.polynomial.legendre.leggauss(int(m))
    r0 = model.radius
    r = 0.5 * r0 * (x + 1.0)
    jac = unit_sphere_area(model.dim) * model.profile.warp(r) ** (model.dim - 1)
    return r, 0.5 * r0 * w * jac


def quadrature_rule(model, m):
    r, w = radial_rule(model, m)
    return QuadratureRule(r, w)


@dataclass(frozen=True)
class GeometricSummary:
    dim: int
    volume: float
    area: float
    H: float
    gradf_boundary: float
    R: float
    intf: float
    intf2: float
    intf3: float
    intgradf2: float
    nodes: int

    def to_dict(self):
        return {k: (float(v) if isinstance(v, float) else v) for k, v in asdict(self).items()}


def _integrals(model, m):
    r, w = radial_rule(model, m)
    p = model.profile
    f = p.f(r)
    df = p.df(r)
    return np.array([w.sum(), w @ f, w @ f**2, w @ f**3, w @ df**2])


def summarize(model, m=64, rtol=1e-10):
    """Radial quadrature summary; checks that doubling m changes nothing."""
    _require_profile(model)
    n, r0, p = model.dim, model.radius, model.profile
    vals = _integrals(model, m)
    check = _integrals(model, 2 * m)
    rel = np.abs(vals - check) / np.maximum(np.abs(check), 1e-300)
    if np.any(rel > rtol):
        raise QuadratureNotConverged(
            f"doubling nodes from {m} changed an integral by {rel.max():.3g} (relative)"
        )
    s0 = float(p.warp(r0))
    return GeometricSummary(
        dim=n,
        volume=float(vals[0]),
        area=unit_sphere_area(n) * s0 ** (n - 1),
        H=(n - 1) * float(p.dwarp(r0)) / s0,
        gradf_boundary=abs(float(p.df(r0))),
        R=float(model.scalar_curvature),
        intf=float(vals[1]),
        intf2=float(vals[2]),
        intf3=float(vals[3]),
        intgradf2=float(vals[4]),
        nodes=int(m),
    )


def _euclidean(n, r):
    from .charts import ModelSpec, build_model

    return build_model(ModelSpec("euclidean-ball", n, r))


def flat_potential_integral(n, r, m=64):
    """(quadrature ∫f, closed form r^{n+2}|∂B_1|/(n(n-1)(n+2))) on the flat ball."""
    s = summarize(_euclidean(n, r), m)
    closed = r ** (n + 2) * unit_sphere_area(n) / (n * (n - 1) * (n + 2))
    return s.intf, closed


def flat_isoperimetric_ratio(n, r, m=64):
    """(|∂B_r| / Vol^{(n-1)/n},  ((n+2) n^n H^{n+2} ∫f / (n-1)^{n+1})^{1/n})."""
    s = summarize(_euclidean(n, r), m)
    lhs = s.area / s.volume ** ((n - 1) / n)
    rhs = ((n + 2) * n**n * s.H ** (n + 2) / (n - 1) ** (n + 1) * s.intf) ** (1.0 / n)
    return lhs, rhs


def constant_CR(summary):
    """C_R two ways: as defined, and as ∫(Rf+n)^2 f + n(n-1)∫|∇f|^2."""
    n, R = summary.dim, summary.R
    direct = R**2 * summary.intf3 + 3 * n * R * summary.intf2 + 2 * n**2 * summary.intf
    positive = (
        R**2 * summary.intf3 + 2 * n * R * summary.intf2 + n**2 * summary.intf
        + n * (n - 1) * summary.intgradf2
    )
    return direct, positive


@dataclass(frozen=True)
class AreaBoundResult:
    area: float
    bound: float
    gap: float
    refined_identity_residual: float
    traceless_ricci_term: float

    def equality(self, rtol=1e-8):
        return abs(self.gap) <= rtol * self.area


def traceless_ricci_integral(model, m=64):
    """∫ f^3 |R̊ic|^2 dV from curvature bundles along the ray x = r e_1."""
    from .curvature import compute_bundle
    from .tensor_algebra import norm2, traceless

    r, w = radial_rule(model, m)
    vals = []
    for ri in r:
        x = np.zeros(model.dim)
        x[0] = ri
        b = compute_bundle(model.metric, x, model.potential, order=2)
        vals.append(b.f**3 * norm2(traceless(b.Ric)))
    return float(w @ np.array(vals))


def area_bound_check(model, m=64, summary=None, ricci_term=None):
    """Area against (n+2) H^3 C_R / (2n(n-1)^2), plus the exact boundary identity.

    ``ricci_term`` is ∫ f^3 |R̊ic|^2; by default it is computed from the
    curvature module along a ray.
    """
    s = summary or summarize(model, m)
    n = s.dim
    cr, _ = constant_CR(s)
    bound = (n + 2) / (2.0 * n * (n - 1) ** 2) * s.H**3 * cr
    if ricci_term is None:
        ricci_term = traceless_ricci_integral(model, m)
    refined = abs(s.area - (s.H**3 * ricci_term + bound))
    return AreaBoundResult(s.area, bound, s.area - bound, refined, ricci_term)


@dataclass(frozen=True)
class IsoperimetricResult:
    area: float
    bound: float
    gap: float
    flux_residual: float
    vol_bound_gap: float
    C_RH: float


def constant_CRH(summary):
    n = summary.dim
    cr, _ = constant_CR(summary)
    return (n + 2) * n ** (n - 2) / (2.0 * (n - 1) ** (n + 1)) * summary.H ** (n + 2) * cr


def flux_residual(summary):
    """| |∇f| |∂M| - R ∫f/(n-1) - n Vol/(n-1) |."""
    n = summary.dim
    return abs(
        summary.gradf_boundary * summary.area
        - summary.R / (n - 1) * summary.intf
        - n / (n - 1) * summary.volume
    )


def isoperimetric_check(model, m=64, summary=None):
    """Isoperimetric bound |∂M| ≥ C_{R,H}^{1/n} Vol^{(n-1)/n}; needs R ≥ 0."""
    s = summary or summarize(model, m)
    if s.R < 0:
        raise PreconditionViolation(
            f"isoperimetric bound needs nonnegative scalar curvature, got R = {s.R:g}"
        )
    n = s.dim
    crh = constant_CRH(s)
    bound = crh ** (1.0 / n) * s.volume ** ((n - 1) / n)
    return IsoperimetricResult(
        area=s.area,
        bound=bound,
        gap=s.area - bound,
        flux_residual=flux_residual(s),
        vol_bound_gap=s.area - n * s.H / (n - 1) * s.volume,
        C_RH=crh,
    )
