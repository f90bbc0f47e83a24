"""Pointwise tensor algebra in an orthonormal frame.

Tensors are plain numpy arrays of frame components, so index raising is
trivial and ``<S, T> = S_ijkl T_ijkl`` is a full sum (no 1/4 factor).

Conventions for the 4D Λ² machinery:

* 2-forms pair as <a, b> = 1/2 a_ij b_ij, so e1^e2 has unit length.
* (*a)_ij = 1/2 eps_ijkl a_kl with eps_1234 = orientation.
* A (0,4) tensor acts on 2-forms by (W a)_ij = 1/2 W_ijkl a_kl; the matrix
  of W on Λ± in the basis w±_a = (e^a + *e^a)/sqrt2 is
  M±_ab = 1/4 W_ijkl (w±_a)_ij (w±_b)_kl.
* det W± is det M±.  With these choices <Q(W)±, W±> = 36 det W± holds
  with calibration factor exactly 1 (pinned by a test fixture).
"""

from dataclasses import dataclass
import itertools

import numpy as np

from .errors import NotFourDimensional, NotWeyl

# <Q(W)±, W±> = DET_CALIBRATION * 36 * det(M±); see test_det_calibration_fixture.
DET_CALIBRATION = 1.0
WEITZENBOCK_DET_CONSTANT = 36.0

SYMMETRY_TOL = 1e-12


def sym2(a):
    """Symmetric part of a square matrix."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def kulkarni_nomizu(a, b):
    """(a ⊙ b)_ijkl = a_ik b_jl + a_jl b_ik - a_il b_jk - a_jk b_il."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return (
        np.einsum("ik,jl->ijkl", a, b)
        + np.einsum("jl,ik->ijkl", a, b)
        - np.einsum("il,jk->ijkl", a, b)
        - np.einsum("jk,il->ijkl", a, b)
    )


def full_inner(S, T):
    """Full contraction of two tensors of equal shape."""
    S = np.asarray(S)
    T = np.asarray(T)
    if S.shape != T.shape:
        raise ValueError(f"dimension mismatch: {S.shape} vs {T.shape}")
    return float(np.sum(S * T))


def norm2(T):
    return full_inner(T, T)


def interior_mult(v, W):
    """(ι_v W)_jkl = v_i W_ijkl."""
    return np.einsum("i,ijkl->jkl", np.asarray(v, dtype=float), W)


def hamilton_Q(Rm):
    """Q(R)_ijkl = Z_ijkl - Z_ijlk - Z_iljk + Z_ikjl,  Z_ijkl = R_ipjq R_kplq."""
    Z = np.einsum("ipjq,kplq->ijkl", Rm, Rm)
    return Z - Z.transpose(0, 1, 3, 2) - Z.transpose(0, 2, 3, 1) + Z.transpose(0, 2, 1, 3)


def traceless(t, g=None):
    """t - (tr_g t / n) g."""
    t = np.asarray(t, dtype=float)
    n = t.shape[0]
    if g is None:
        g = np.eye(n)
    g = np.asarray(g, dtype=float)
    tr = np.einsum("ij,ij->", np.linalg.inv(g), t)
    return t - (tr / n) * g


def ricci_contraction(Rm):
    """Ric_ik = R_ijkj."""
    return np.einsum("ijkj->ik", Rm)


def weyl_part(Rm):
    """Weyl tensor of an algebraic curvature tensor (frame components)."""
    n = Rm.shape[0]
    if n < 3:
        raise ValueError("Weyl part needs n >= 3")
    g = np.eye(n)
    ric = ricci_contraction(Rm)
    R = np.trace(ric)
    return Rm - kulkarni_nomizu(ric, g) / (n - 2) + R / (2.0 * (n - 1) * (n - 2)) * kulkarni_nomizu(g, g)


def curvature_symmetry_defects(T):
    """Max-abs violation of each algebraic-curvature symmetry."""
    return {
        "antisym_ij": float(np.max(np.abs(T + T.transpose(1, 0, 2, 3)))),
        "antisym_kl": float(np.max(np.abs(T + T.transpose(0, 1, 3, 2)))),
        "pair_sym": float(np.max(np.abs(T - T.transpose(2, 3, 0, 1)))),
        "bianchi": float(np.max(np.abs(T + T.transpose(0, 2, 3, 1) + T.transpose(0, 3, 1, 2)))),
    }


def is_algebraic_curvature(T, tol=SYMMETRY_TOL):
    scale = max(1.0, float(np.max(np.abs(T))))
    return all(v <= tol * scale for v in curvature_symmetry_defects(T).values())


def weyl_trace_defect(W):
    """Largest g-trace of W over any index pair."""
    worst = 0.0
    for a, b in itertools.combinations(range(4), 2):
        worst = max(worst, float(np.max(np.abs(np.trace(W, axis1=a, axis2=b)))))
    return worst


def random_sym(rng, n, traceless_part=False):
    a = rng.normal(size=(n, n))
    a = a + a.T
    return traceless(a) if traceless_part else a


def random_algebraic_curvature(rng, n, terms=3):
    """Random algebraic curvature tensor as a sum of ⊙ products."""
    out = np.zeros((n,) * 4)
    for _ in range(terms):
        out += kulkarni_nomizu(random_sym(rng, n), random_sym(rng, n))
    return out


def random_weyl(rng, n=4, terms=3):
    """Random Weyl tensor: random curvature tensor minus its Ricci parts."""
    W = weyl_part(random_algebraic_curvature(rng, n, terms))
    if weyl_trace_defect(W) > 1e-10 * max(1.0, float(np.max(np.abs(W)))):
        raise NotWeyl("random Weyl construction lost trace-freeness")
    return W


# -- dimension four ------------------------------------------------------------

def levi_civita(orientation=1):
    eps = np.zeros((4,) * 4)
    for perm in itertools.permutations(range(4)):
        inv = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
        eps[perm] = (-1) ** inv
    return orientation * eps


def elementary_form(i, j, n=4):
    a = np.zeros((n, n))
    a[i, j] = 1.0
    a[j, i] = -1.0
    return a


def form_inner(a, b):
    return 0.5 * float(np.sum(a * b))


_IDENTITY_2 = 0.5 * (
    np.einsum("ae,bf->abef", np.eye(4), np.eye(4)) - np.einsum("af,be->abef", np.eye(4), np.eye(4))
)


@dataclass(frozen=True)
class LambdaBasis:
    """Orthonormal frame plus orthonormal bases of Λ+ and Λ- (4D only).

    ``frame`` holds the frame vectors e_a as columns in chart coordinates;
    the 2-forms are expressed in that frame.
    """

    frame: np.ndarray
    orientation: int
    eps: np.ndarray
    plus: tuple
    minus: tuple
    P_plus: np.ndarray
    P_minus: np.ndarray

    def star(self, a):
        return 0.5 * np.einsum("ijkl,kl->ij", self.eps, a)

    def forms(self, sign):
        return self.plus if sign > 0 else self.minus

    def projector(self, sign):
        return self.P_plus if sign > 0 else self.P_minus


def orthonormal_frame(g):
    """Frame E with E^T g E = I from the Cholesky factor; det E > 0."""
    L = np.linalg.cholesky(np.asarray(g, dtype=float))
    return np.linalg.inv(L).T


def lambda_basis(g=None, orientation=1):
    if g is None:
        g = np.eye(4)
    g = np.asarray(g, dtype=float)
    if g.shape != (4, 4):
        raise NotFourDimensional(f"Λ± splitting needs dimension 4, got {g.shape[0]}")
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    E = orthonormal_frame(g)
    eps = levi_civita(orientation)
    star = lambda a: 0.5 * np.einsum("ijkl,kl->ij", eps, a)  # noqa: E731
    base = [elementary_form(0, j) for j in (1, 2, 3)]
    plus = tuple((a + star(a)) / np.sqrt(2.0) for a in base)
    minus = tuple((a - star(a)) / np.sqrt(2.0) for a in base)
    P_plus = 0.5 * (_IDENTITY_2 + 0.5 * eps)
    P_minus = 0.5 * (_IDENTITY_2 - 0.5 * eps)
    return LambdaBasis(E, orientation, eps, plus, minus, P_plus, P_minus)


def project_pm(T, basis, sign):
    """P± T P± for a (0,4) tensor acting on 2-forms (full-sum composition)."""
    P = basis.projector(sign)
    return np.einsum("abef,efgh,ghcd->abcd", P, T, P)


def operator_matrix(T, basis, sign):
    """M_ab = 1/4 T_ijkl (w_a)_ij (w_b)_kl on Λ±."""
    forms = basis.forms(sign)
    return np.array([[0.25 * np.einsum("ijkl,ij,kl->", T, a, b) for b in forms] for a in forms])


def tensor_from_matrix(M, basis, sign):
    """Inverse of `operator_matrix` on Λ± ⊗ Λ±: sum_ab M_ab w_a ⊗ w_b."""
    forms = basis.forms(sign)
    out = np.zeros((4,) * 4)
    for a, wa in enumerate(forms):
        for b, wb in enumerate(forms):
            out += M[a, b] * np.einsum("ij,kl->ijkl", wa, wb)
    return out


def weyl_pm_decompose(W, basis=None, tol=1e-10):
    """Split a 4D Weyl tensor into self-dual and anti-self-dual parts.

    Returns ``(W_plus, W_minus, M_plus, M_minus)``.
    """
    W = np.asarray(W, dtype=float)
    if W.shape != (4,) * 4:
        raise NotFourDimensional(f"expected a 4D (0,4) tensor, got shape {W.shape}")
    scale = max(1.0, float(np.max(np.abs(W))))
    if weyl_trace_defect(W) > tol * scale:
        raise NotWeyl(f"trace defect {weyl_trace_defect(W):.3g} exceeds {tol:.1g}")
    if basis is None:
        basis = lambda_basis()
    Wp = project_pm(W, basis, +1)
    Wm = project_pm(W, basis, -1)
    return Wp, Wm, operator_matrix(W, basis, +1), operator_matrix(W, basis, -1)


def det_weyl_pm(M):
    """det W± of a trace-free symmetric 3x3 block, calibrated for the 36-identity."""
    M = np.asarray(M, dtype=float)
    return DET_CALIBRATION * float(np.linalg.det(M))


def ric_kn_identity_check(E):
    """Return (|E⊙E|^2, 8|E|^4 - 8|E^2|^2) for traceless symmetric E in 4D."""
    E = np.asarray(E, dtype=float)
    if E.shape != (4, 4):
        raise NotFourDimensional("identity is stated for n = 4")
    lhs = norm2(kulkarni_nomizu(E, E))
    e2 = norm2(E)
    rhs = 8.0 * e2**2 - 8.0 * norm2(E @ E)
    return lhs, rhs
