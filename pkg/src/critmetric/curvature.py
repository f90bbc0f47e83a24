"""Curvature of a chart metric at a point.

The metric (and potential) enter only through their jets at the point x.
From a jet we form the Taylor polynomial around x and push it through a
JAX pipeline written in chart coordinates; forward-mode differentiation
of that polynomial at x reproduces the jet exactly, so for closed-form
fields every derivative below is exact up to round-off, and for
finite-difference fields the only error is the one already in the jet.

Sign conventions (checked by the test suite against the round sphere):

    R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z,
    R_ijkl  = <R(e_i, e_j) e_l, e_k>,     Ric_ik = R_ijkj,

so the unit sphere has R_ijkl = g_ik g_jl - g_il g_jk.  All outputs are
frame components in the Cholesky orthonormal frame at x.
"""

from dataclasses import dataclass, fields
import functools

import numpy as np

from ._jax import jax, jnp
from . import tensor_algebra as ta
from .errors import OracleOrderUnsupported, SingularMetric


# -- jax building blocks ---------------------------------------------------------

def _taylor(jets, h):
    out = jets[0]
    fact = 1.0
    for k in range(1, len(jets)):
        fact *= k
        t = jets[k]
        for _ in range(k):
            t = t @ h
        out = out + t / fact
    return out


def _jac(fn):
    """Derivative with the new index in front."""
    d = jax.jacfwd(fn)
    return lambda y: jnp.moveaxis(d(y), -1, 0)


def _connection(gfun):
    dg = _jac(gfun)

    def gamma(y):
        gi = jnp.linalg.inv(gfun(y))
        d = dg(y)  # d[a, i, j] = ∂_a g_ij
        low = 0.5 * (d + jnp.swapaxes(d, 0, 1) - jnp.transpose(d, (1, 2, 0)))
        return jnp.einsum("kl,ijl->kij", gi, low)

    return gamma


def _riemann_fn(gfun, gamma):
    dgamma = _jac(gamma)

    def rm(y):
        G = gamma(y)
        dG = dgamma(y)  # dG[a, m, i, j] = ∂_a Γ^m_ij
        up = (
            jnp.einsum("imjl->mijl", dG)
            - jnp.einsum("jmil->mijl", dG)
            + jnp.einsum("mip,pjl->mijl", G, G)
            - jnp.einsum("mjp,pil->mijl", G, G)
        )
        return jnp.einsum("km,mijl->ijkl", gfun(y), up)

    return rm


def _covariant(field, gamma, rank):
    """∇T for a covariant coordinate tensor field; derivative index first."""
    dfield = _jac(field)

    def D(y):
        t = field(y)
        G = gamma(y)
        out = dfield(y)
        for s in range(rank):
            ts = jnp.moveaxis(t, s, 0)
            c = jnp.tensordot(G, ts, axes=([0], [0]))  # [p, a_s, rest...]
            out = out - jnp.moveaxis(c, 1, 1 + s)
        return out

    return D


def _frame_fn(gfun):
    def E(y):
        L = jnp.linalg.cholesky(gfun(y))
        return jnp.linalg.inv(L).T

    return E


def _to_frame_j(T, E):
    for _ in range(T.ndim):
        T = jnp.tensordot(T, E, axes=([0], [0]))
    return T


def _kn_j(a, b):
    return (
        jnp.einsum("ik,jl->ijkl", a, b)
        + jnp.einsum("jl,ik->ijkl", a, b)
        - jnp.einsum("il,jk->ijkl", a, b)
        - jnp.einsum("jk,il->ijkl", a, b)
    )


def _weyl_frame_j(Rm_f):
    n = Rm_f.shape[0]
    g = jnp.eye(n)
    ric = jnp.einsum("ijkj->ik", Rm_f)
    R = jnp.trace(ric)
    return Rm_f - _kn_j(ric, g) / (n - 2) + R / (2.0 * (n - 1) * (n - 2)) * _kn_j(g, g)


_BASIS4 = ta.lambda_basis()


def _weyl_norms_fn(gfun, rm):
    """y -> [|W|^2, |W+|^2, |W-|^2] (the last two only in 4D)."""
    E = _frame_fn(gfun)

    def norms(y):
        W = _weyl_frame_j(_to_frame_j(rm(y), E(y)))
        out = [jnp.sum(W * W)]
        if W.shape[0] == 4:
            for P in (_BASIS4.P_plus, _BASIS4.P_minus):
                Wpm = jnp.einsum("abef,efgh,ghcd->abcd", P, W, P)
                out.append(jnp.sum(Wpm * Wpm))
        return jnp.stack(out)

    return norms


@functools.lru_cache(maxsize=None)
def _pipeline(order, with_f):
    def run(x, jg, jf):
        gfun = lambda y: _taylor(jg, y - x)  # noqa: E731
        gamma = _connection(gfun)
        rm = _riemann_fn(gfun, gamma)
        out = {"g": gfun(x), "Gamma": gamma(x), "Rm": rm(x), "E": _frame_fn(gfun)(x)}
        if order >= 3:
            drm = _covariant(rm, gamma, 4)
            out["dRm"] = drm(x)
        if order >= 4:
            out["ddRm"] = _covariant(drm, gamma, 5)(x)
        if with_f:
            ffun = lambda y: _taylor(jf, y - x)  # noqa: E731
            df = _jac(ffun)
            out["f"] = ffun(x)
            out["df"] = df(x)
            out["hessf"] = _covariant(df, gamma, 1)(x)
            if order >= 4:
                norms = _weyl_norms_fn(gfun, rm)
                dnorms = jax.jacfwd(norms)

                def flux(y):  # rows: f^2 ∇S for each scalar S
                    return ffun(y) ** 2 * dnorms(y) @ jnp.linalg.inv(gfun(y))

                dflux = jax.jacfwd(flux)(x)  # [m, p, q] = ∂_q V_m^p
                G = gamma(x)
                out["div_f2_grad"] = (
                    jnp.einsum("mpp->m", dflux) + jnp.einsum("ppq,mq->m", G, flux(x))
                )
                out["weyl_norms"] = norms(x)
        return out

    return jax.jit(run)


# -- numpy side -------------------------------------------------------------------

def to_frame(T, E):
    """Frame components of a covariant coordinate tensor."""
    T = np.asarray(T)
    for _ in range(T.ndim):
        T = np.tensordot(T, E, axes=([0], [0]))
    return T


@dataclass(frozen=True)
class CurvatureBundle:
    """Curvature quantities at one point, frame components throughout.

    Optional entries are ``None`` when the requested derivative order or the
    absence of a potential does not provide them.
    """

    point: np.ndarray
    frame: np.ndarray
    metric: np.ndarray
    Gamma: np.ndarray
    Rm: np.ndarray
    Ric: np.ndarray
    R: float
    W: np.ndarray
    order: int
    gradRm: np.ndarray = None
    gradRic: np.ndarray = None
    gradR: np.ndarray = None
    gradW: np.ndarray = None
    cotton: np.ndarray = None
    hessRm: np.ndarray = None
    laplRm: np.ndarray = None
    hessRic: np.ndarray = None
    f: float = None
    gradf: np.ndarray = None
    hessf: np.ndarray = None
    laplf: float = None
    T: np.ndarray = None
    div_f2_grad_w2: float = None
    div_f2_grad_wpm: tuple = None
    weyl_norms: np.ndarray = None

    @property
    def dim(self):
        return self.Rm.shape[0]

    def as_dict(self):
        return {fl.name: getattr(self, fl.name) for fl in fields(self)}


def cotton_from(gradRic, gradR):
    """C_ijk = ∇_iR_jk - ∇_jR_ik - (∇_iR g_jk - ∇_jR g_ik) / (2(n-1))."""
    n = gradR.shape[0]
    g = np.eye(n)
    return (
        gradRic
        - gradRic.transpose(1, 0, 2)
        - (np.einsum("i,jk->ijk", gradR, g) - np.einsum("j,ik->ijk", gradR, g)) / (2.0 * (n - 1))
    )


def tensor_T_from(Ric, R, gradf):
    """The 3-tensor T_ijk coupling Ric and ∇f."""
    n = Ric.shape[0]
    g = np.eye(n)
    Rdf = Ric @ gradf
    return (
        (n - 1) / (n - 2) * (np.einsum("ik,j->ijk", Ric, gradf) - np.einsum("jk,i->ijk", Ric, gradf))
        + (np.einsum("ik,j->ijk", g, Rdf) - np.einsum("jk,i->ijk", g, Rdf)) / (n - 2)
        - R / (n - 2) * (np.einsum("ik,j->ijk", g, gradf) - np.einsum("jk,i->ijk", g, gradf))
    )


def _assemble(x, raw, order, with_f):
    E = np.asarray(raw["E"])
    Rm = to_frame(raw["Rm"], E)
    Ric = ta.ricci_contraction(Rm)
    R = float(np.trace(Ric))
    kw = dict(
        point=np.asarray(x, dtype=float), frame=E, metric=np.asarray(raw["g"]),
        Gamma=np.asarray(raw["Gamma"]), Rm=Rm, Ric=Ric, R=R, W=ta.weyl_part(Rm), order=order,
    )
    if order >= 3:
        dRm = to_frame(raw["dRm"], E)
        dRic = np.einsum("pijkj->pik", dRm)
        dR = np.einsum("pii->p", dRic)
        kw.update(
            gradRm=dRm, gradRic=dRic, gradR=dR,
            gradW=np.stack([ta.weyl_part(dRm[p]) for p in range(dRm.shape[0])]),
            cotton=cotton_from(dRic, dR),
        )
    if order >= 4:
        ddRm = to_frame(raw["ddRm"], E)
        kw.update(
            hessRm=ddRm,
            laplRm=np.einsum("qq...->...", ddRm),
            hessRic=np.einsum("qpijkj->qpik", ddRm),
        )
    if with_f:
        df = to_frame(raw["df"], E)
        hess = to_frame(raw["hessf"], E)
        hess = 0.5 * (hess + hess.T)
        kw.update(f=float(raw["f"]), gradf=df, hessf=hess, laplf=float(np.trace(hess)),
                  T=tensor_T_from(Ric, R, df))
        if order >= 4:
            div = np.asarray(raw["div_f2_grad"])
            kw.update(div_f2_grad_w2=float(div[0]), weyl_norms=np.asarray(raw["weyl_norms"]))
            if len(div) == 3:
                kw.update(div_f2_grad_wpm=(float(div[1]), float(div[2])))
    return CurvatureBundle(**kw)


def _run(x, jg, jf, order):
    with_f = jf is not None
    g0 = np.asarray(jg[0])
    try:
        np.linalg.cholesky(g0)
    except np.linalg.LinAlgError:
        raise SingularMetric(f"metric is not positive definite at {np.asarray(x)}") from None
    jf_arg = tuple(jnp.asarray(a) for a in jf) if with_f else None
    raw = _pipeline(order, with_f)(jnp.asarray(x, dtype=float), tuple(jnp.asarray(a) for a in jg), jf_arg)
    return _assemble(x, raw, order, with_f)


def _f_order(order):
    return min(order, 3)


def compute_bundle(metric, x, f=None, order=2, with_coarse=False):
    """Curvature bundle at x using derivatives of g up to ``order`` (2, 3 or 4).

    With ``with_coarse=True`` also returns the bundle computed from the
    one-level-coarser Richardson jets (the same bundle for closed-form
    fields), for use in error estimates.
    """
    if order not in (2, 3, 4):
        raise ValueError("order must be 2, 3 or 4")
    if order > metric.max_order:
        raise OracleOrderUnsupported(f"metric oracle stops at order {metric.max_order}")
    x = np.asarray(x, dtype=float)
    if not with_coarse:
        jf = f.jet(x, _f_order(order)) if f is not None else None
        return _run(x, metric.jet(x, order), jf, order)
    jg, jg_prev = metric.jet_pair(x, order)
    jf, jf_prev = f.jet_pair(x, _f_order(order)) if f is not None else (None, None)
    best = _run(x, jg, jf, order)
    if metric.kind == "closed-form" and (f is None or f.kind == "closed-form"):
        return best, best
    return best, _run(x, jg_prev, jf_prev, order)


# -- the named operations ------------------------------------------------------------

def christoffel(metric, x):
    """Γ^k_ij in chart coordinates, indexed [k, i, j]."""
    return compute_bundle(metric, x, order=2).Gamma


def riemann(metric, x):
    return compute_bundle(metric, x, order=2).Rm


def ricci(metric, x):
    return compute_bundle(metric, x, order=2).Ric


def scalar_curvature(metric, x):
    return compute_bundle(metric, x, order=2).R


def weyl(bundle):
    return bundle.W


def cotton(metric, x):
    return compute_bundle(metric, x, order=3).cotton


def tensor_T(bundle):
    if bundle.T is None:
        raise ValueError("bundle was computed without a potential")
    return bundle.T


def lapl_riemann(metric, x):
    return compute_bundle(metric, x, order=4).laplRm


def hessian(f, metric, x):
    return compute_bundle(metric, x, f=f, order=2).hessf


def laplacian(f, metric, x):
    return compute_bundle(metric, x, f=f, order=2).laplf


def covariant_derivative(metric, field, x, rank):
    """∇T at x for a JAX-traceable covariant coordinate field ``field(y)``.

    Returns frame components with the derivative index first.
    """
    x = np.asarray(x, dtype=float)
    jg = tuple(jnp.asarray(a) for a in metric.jet(x, 1))
    xj = jnp.asarray(x)
    gfun = lambda y: _taylor(jg, y - xj)  # noqa: E731
    D = _covariant(field, _connection(gfun), rank)(xj)
    return to_frame(np.asarray(D), ta.orthonormal_frame(np.asarray(jg[0])))


def second_bianchi_defect(bundle):
    """max |∇_p R_ijkl + ∇_i R_jpkl + ∇_j R_pikl|."""
    D = bundle.gradRm
    cyc = D + np.einsum("ijpkl->pijkl", D) + np.einsum("jpikl->pijkl", D)
    return float(np.max(np.abs(cyc)))


def contracted_bianchi_defect(bundle):
    """max |2 div Ric - ∇R|."""
    div = np.einsum("ppk->k", bundle.gradRic)
    return float(np.max(np.abs(2.0 * div - bundle.gradR)))
