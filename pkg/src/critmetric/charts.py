"""Metrics and potentials on a single coordinate ball, plus the model library.

A field is either *closed-form* (a JAX-traceable function; derivatives come
from forward-mode autodiff and are exact up to round-off) or
*finite-difference* (derivatives from Richardson-extrapolated central
differences of ``eval``).

Geodesic balls in the space forms are written in normal coordinates
x = r*omega, where

    g_ij(x) = A(|x|^2) delta_ij + B(|x|^2) x_i x_j,
    A(u) = s(r)^2 / r^2,   B(u) = (1 - A(u)) / u,

with s = sin or sinh.  A, B and the potentials are entire functions of
u = |x|^2, evaluated from their power series so that all derivatives stay
finite and accurate at the pole.
"""

from dataclasses import dataclass
import functools
import math

import numpy as np

from ._jax import jax, jnp
from . import finite_diff
from .errors import (
    OracleOrderUnsupported,
    PositiveDefinitenessViolation,
    PreconditionViolation,
)

FAMILIES = ("euclidean-ball", "spherical-cap", "hyperbolic-ball", "perturbed-flat")

# Extra radius the series must stay accurate on, for stencils near the edge.
_STENCIL_MARGIN = 0.5


class _Field:
    max_order = 0
    value_shape = ()

    def __init__(self, dim, radius, fn, kind="closed-form", name="", batch_fn=None):
        if kind not in ("closed-form", "finite-difference"):
            raise ValueError(f"unknown kind {kind!r}")
        self.dim = int(dim)
        self.radius = float(radius)
        self.fn = fn
        self.kind = kind
        self.name = name
        self._batch_fn = batch_fn

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, dim={self.dim}, kind={self.kind})"

    @functools.cached_property
    def _jit_eval(self):
        return jax.jit(self.fn)

    @functools.cached_property
    def _batch(self):
        if self._batch_fn is not None:
            return self._batch_fn
        if self.kind == "closed-form":
            return jax.jit(jax.vmap(self.fn))
        fn = self.fn
        return lambda X: np.stack([np.asarray(fn(x)) for x in X])

    @functools.cached_property
    def _jet_fns(self):
        fns = [self.fn]
        for _ in range(self.max_order):
            fns.append(jax.jacfwd(fns[-1]))
        return [jax.jit(f) for f in fns]

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "closed-form":
            return np.asarray(self._jit_eval(x))
        return np.asarray(self.fn(x), dtype=float)

    def eval_many(self, X):
        return np.asarray(self._batch(np.asarray(X, dtype=float)))

    def _check_order(self, order):
        if order < 0 or order > self.max_order:
            raise OracleOrderUnsupported(
                f"{type(self).__name__} supplies partials up to order {self.max_order}, not {order}"
            )

    def derivs(self, x, order):
        """All partials of the given order; derivative axes come last."""
        self._check_order(order)
        x = np.asarray(x, dtype=float)
        if order == 0:
            return self.eval(x)
        if self.kind == "closed-form":
            return np.asarray(self._jet_fns[order](x))
        best, _ = finite_diff.derivative(self.eval_many, x, order)
        return best

    def jet(self, x, order):
        """Tuple (value, d1, ..., d_order) at x."""
        return tuple(self.derivs(x, k) for k in range(order + 1))

    def jet_pair(self, x, order):
        """Best jet and a one-level-coarser jet (identical for closed-form fields)."""
        if self.kind == "closed-form":
            j = self.jet(x, order)
            return j, j
        self._check_order(order)
        x = np.asarray(x, dtype=float)
        best, prev = [self.eval(x)], [self.eval(x)]
        for k in range(1, order + 1):
            b, p = finite_diff.derivative_pair(self.eval_many, x, k)
            best.append(b)
            prev.append(p)
        return tuple(best), tuple(prev)

    def as_finite_difference(self):
        """Same field, but with derivatives taken by finite differences."""
        twin = type(self).__new__(type(self))
        _Field.__init__(
            twin, self.dim, self.radius, lambda x: self.eval(x), "finite-difference",
            self.name + " [fd]", batch_fn=self.eval_many,
        )
        return twin


class ChartMetric(_Field):
    """Riemannian metric g_ij(x) on a coordinate ball, partials to order 4."""

    max_order = 4

    @property
    def value_shape(self):
        return (self.dim, self.dim)

    def partial(self, x, i, j, alpha=()):
        """d^alpha g_ij (x) for a multi-index given as a sequence of axes."""
        d = self.derivs(x, len(alpha))
        return float(d[(i, j) + tuple(alpha)])

    def is_positive_definite(self, x):
        g = self.eval(x)
        if not np.allclose(g, g.T, rtol=0, atol=1e-14):
            return False
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            return False
        return True


class ScalarField(_Field):
    """Potential f(x) with partials to order 3."""

    max_order = 3

    def partial(self, x, alpha=()):
        return float(self.derivs(x, len(alpha))[tuple(alpha)])


# -- power series in u = r^2 -------------------------------------------------

def _series(first, ratio, umax, rtol=1e-18, max_terms=400):
    """Coefficients c_j with c_{j+1} = c_j * ratio(j), truncated once negligible on [0, umax]."""
    coeffs = [first]
    scale = abs(first)
    for j in range(max_terms):
        c = coeffs[-1] * ratio(j)
        coeffs.append(c)
        term = abs(c) * umax ** (j + 1)
        scale = max(scale, term)
        if term < rtol * scale and j > 4:
            break
    return np.array(coeffs)


def _horner(coeffs, u):
    acc = jnp.zeros_like(u) + coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * u + c
    return acc


def space_form_series(curvature, umax):
    """Series coefficients of A(u), B(u) and cos_K(sqrt u) for curvature +1 or -1."""
    s = -float(curvature)
    # A(u) = sum_j s^j 2^(2j+1) u^j / (2j+2)!
    a = _series(1.0, lambda j: s * 4.0 / ((2 * j + 3) * (2 * j + 4)), umax)
    b = -a[1:]
    # cos_K(sqrt u) = sum_j s^j u^j / (2j)!
    c = _series(1.0, lambda j: s / ((2 * j + 1) * (2 * j + 2)), umax)
    return a, b, c


# -- models ------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    family: str
    dim: int
    radius: float = 1.0
    eps: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PreconditionViolation(f"unknown model family {self.family!r}")


@dataclass(frozen=True)
class RadialProfile:
    """Closed-form radial data of a rotationally symmetric model (numpy callables)."""

    warp: object
    dwarp: object
    f: object
    df: object
    curvature: float


@dataclass(frozen=True)
class Model:
    spec: ModelSpec
    metric: ChartMetric
    potential: ScalarField = None
    profile: RadialProfile = None

    @property
    def dim(self):
        return self.spec.dim

    @property
    def radius(self):
        return self.spec.radius

    @property
    def is_critical(self):
        """True when (metric, potential) is known to solve the Miao-Tam equation."""
        return self.potential is not None and self.spec.family != "perturbed-flat"

    @property
    def scalar_curvature(self):
        if self.profile is None:
            return None
        n = self.dim
        return n * (n - 1) * self.profile.curvature


def _check_dim(n):
    if int(n) != n or n < 3:
        raise PreconditionViolation(f"dimension must be an integer >= 3, got {n}")


def make_euclidean_ball(n, r):
    """Flat ball of radius r with f = (r^2 - |x|^2) / (2(n-1))."""
    _check_dim(n)
    if not r > 0:
        raise PreconditionViolation(f"radius must be positive, got {r}")
    n = int(n)
    r = float(r)
    eye = np.eye(n)

    def g(x):
        return jnp.asarray(eye) + 0.0 * x[0]

    def f(x):
        return (r * r - jnp.dot(x, x)) / (2.0 * (n - 1))

    metric = ChartMetric(n, r, g, name=f"euclidean-ball(n={n}, r={r})")
    potential = ScalarField(n, r, f, name="f_euclidean")
    return metric, potential


def _space_form(n, r0, curvature, label):
    n = int(n)
    r0 = float(r0)
    umax = (r0 + _STENCIL_MARGIN) ** 2
    a, b, c = space_form_series(curvature, umax)
    cos0 = float(np.cos(r0)) if curvature > 0 else float(np.cosh(r0))
    sign = 1.0 if curvature > 0 else -1.0
    eye = np.eye(n)

    def g(x):
        u = jnp.dot(x, x)
        return _horner(a, u) * jnp.asarray(eye) + _horner(b, u) * jnp.outer(x, x)

    def f(x):
        u = jnp.dot(x, x)
        return sign * (_horner(c, u) - cos0) / ((n - 1) * cos0)

    metric = ChartMetric(n, r0, g, name=f"{label}(n={n}, r0={r0})")
    potential = ScalarField(n, r0, f, name=f"f_{label}")
    return metric, potential


def make_spherical_cap(n, r0):
    """Geodesic ball of radius r0 < pi/2 in the unit sphere.

    f(r) = (cos r - cos r0) / ((n-1) cos r0).
    """
    _check_dim(n)
    if not 0 < r0 < np.pi / 2:
        raise PreconditionViolation(
            f"spherical cap needs 0 < r0 < pi/2 for f >= 0, got r0={r0}"
        )
    return _space_form(n, r0, +1, "spherical-cap")


def make_hyperbolic_ball(n, r0):
    """Geodesic ball of radius r0 in hyperbolic space.

    f(r) = (cosh r0 - cosh r) / ((n-1) cosh r0).
    """
    _check_dim(n)
    if not r0 > 0:
        raise PreconditionViolation(f"radius must be positive, got r0={r0}")
    return _space_form(n, r0, -1, "hyperbolic-ball")


def _perturbation_terms(n, seed, nterms=3, kmax=2.0):
    rng = np.random.default_rng(seed)
    terms = {}
    for i in range(n):
        for j in range(i, n):
            amp = rng.uniform(-1.0, 1.0, nterms) / nterms
            k1 = rng.uniform(-kmax, kmax, (nterms, n))
            k2 = rng.uniform(-kmax, kmax, (nterms, n))
            ph = rng.uniform(0.0, 2 * np.pi, (nterms, 2))
            terms[i, j] = (amp, k1, k2, ph)
    return terms


def sample_ball(n, radius, count, rng, margin=0.05):
    """Uniform points in the ball of radius (1 - margin) * radius."""
    d = rng.normal(size=(count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    rad = (1.0 - margin) * radius * rng.uniform(size=(count, 1)) ** (1.0 / n)
    return d * rad


def make_perturbed_flat(n, eps, seed, radius=1.0, probes=100):
    """g = I + eps*h with h a seeded sum of sin*cos products per component.

    Only meant for identities that hold for every metric.  Positive
    definiteness is checked at ``probes`` seeded points (plus the centre).
    """
    if n not in (3, 4, 5):
        raise PreconditionViolation(f"perturbed-flat supports n in {{3,4,5}}, got {n}")
    eps = float(eps)
    terms = _perturbation_terms(n, seed)

    def g(x):
        rows = [[None] * n for _ in range(n)]
        for (i, j), (amp, k1, k2, ph) in terms.items():
            h = jnp.sum(amp * jnp.sin(k1 @ x + ph[:, 0]) * jnp.cos(k2 @ x + ph[:, 1]))
            v = (1.0 if i == j else 0.0) + eps * h
            rows[i][j] = rows[j][i] = v
        return jnp.stack([jnp.stack(r) for r in rows])

    metric = ChartMetric(n, radius, g, name=f"perturbed-flat(n={n}, eps={eps}, seed={seed})")
    pts = np.vstack([np.zeros(n), sample_ball(n, radius, probes, np.random.default_rng(seed), margin=0.0)])
    for G in metric.eval_many(pts):
        try:
            np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            raise PositiveDefinitenessViolation(
                f"eps={eps} makes the perturbed metric indefinite (seed={seed})"
            ) from None
    return metric


def _profile(family, n, r0):
    if family == "euclidean-ball":
        return RadialProfile(
            warp=lambda r: np.asarray(r, dtype=float),
            dwarp=lambda r: np.ones_like(np.asarray(r, dtype=float)),
            f=lambda r: (r0**2 - np.asarray(r) ** 2) / (2.0 * (n - 1)),
            df=lambda r: -np.asarray(r) / (n - 1.0),
            curvature=0.0,
        )
    if family == "spherical-cap":
        c0 = np.cos(r0)
        return RadialProfile(
            warp=np.sin, dwarp=np.cos,
            f=lambda r: (np.cos(r) - c0) / ((n - 1) * c0),
            df=lambda r: -np.sin(r) / ((n - 1) * c0),
            curvature=1.0,
        )
    if family == "hyperbolic-ball":
        c0 = np.cosh(r0)
        return RadialProfile(
            warp=np.sinh, dwarp=np.cosh,
            f=lambda r: (c0 - np.cosh(r)) / ((n - 1) * c0),
            df=lambda r: -np.sinh(r) / ((n - 1) * c0),
            curvature=-1.0,
        )
    return None


def build_model(spec):
    """Instantiate a :class:`Model` from its spec."""
    fam, n, r = spec.family, spec.dim, spec.radius
    if fam == "euclidean-ball":
        metric, f = make_euclidean_ball(n, r)
    elif fam == "spherical-cap":
        metric, f = make_spherical_cap(n, r)
    elif fam == "hyperbolic-ball":
        metric, f = make_hyperbolic_ball(n, r)
    else:
        metric = make_perturbed_flat(n, spec.eps, spec.seed, radius=r)
        return Model(spec, metric)
    return Model(spec, metric, f, _profile(fam, n, r))
