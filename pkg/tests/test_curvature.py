import numpy as np
import pytest

from critmetric import curvature as cv
from critmetric import finite_diff
from critmetric import tensor_algebra as ta
from critmetric._jax import jnp
from critmetric.charts import ChartMetric, make_euclidean_ball, sample_ball
from critmetric.errors import SingularMetric

from conftest import model


def _christoffel_numpy(metric, x):
    # Γ^k_ij = 1/2 g^kl (∂_i g_jl + ∂_j g_il - ∂_l g_ij), dg[a,b,c] = ∂_c g_ab
    g = metric.eval(x)
    dg = metric.derivs(x, 1)
    gi = np.linalg.inv(g)
    t = np.einsum("jli->ijl", dg) + np.einsum("ilj->ijl", dg) - np.einsum("ijl->ijl", dg)
    return 0.5 * np.einsum("kl,ijl->kij", gi, t)


def _riemann_oracle(metric, x, h=1e-4):
    """R_ijkl = <R(∂i,∂j)∂l, ∂k> from numpy Christoffels and central differences."""
    n = len(x)
    G = _christoffel_numpy(metric, x)
    dG = np.zeros((n,) + G.shape)  # dG[a, k, i, j] = ∂_a Γ^k_ij
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        dG[a] = (_christoffel_numpy(metric, x + e) - _christoffel_numpy(metric, x - e)) / (2 * h)
    # R^m_{ijl} ∂_m = R(∂i,∂j)∂l
    Rup = (
        np.einsum("imjl->mijl", dG) - np.einsum("jmil->mijl", dG)
        + np.einsum("mip,pjl->mijl", G, G) - np.einsum("mjp,pil->mijl", G, G)
    )
    R = np.einsum("km,mijl->ijkl", metric.eval(x), Rup)
    E = ta.orthonormal_frame(metric.eval(x))
    return cv.to_frame(R, E)


@pytest.mark.parametrize("family,K", [("spherical-cap", 1.0), ("hyperbolic-ball", -1.0)])
@pytest.mark.parametrize("n", [3, 4, 5])
def test_space_form_curvature(family, K, n, rng):
    m = model(family, n, 1.0)
    g = np.eye(n)
    for x in sample_ball(n, 1.0, 5, rng):
        b = cv.compute_bundle(m.metric, x, order=2)
        np.testing.assert_allclose(b.Rm, 0.5 * K * ta.kulkarni_nomizu(g, g), atol=1e-12)
        np.testing.assert_allclose(b.Ric, (n - 1) * K * g, atol=1e-12)
        assert np.isclose(b.R, n * (n - 1) * K, atol=1e-11)
        assert np.max(np.abs(b.W)) < 1e-12


def test_flat_ball_is_flat(rng):
    metric, _ = make_euclidean_ball(4, 1.0)
    b = cv.compute_bundle(metric, sample_ball(4, 1.0, 1, rng)[0], order=4)
    assert np.max(np.abs(b.Rm)) == 0 and np.max(np.abs(b.laplRm)) == 0


@pytest.mark.parametrize("n", [3, 4])
def test_riemann_matches_independent_oracle(n, rng):
    metric = model("perturbed-flat", n).metric
    for x in sample_ball(n, 1.0, 5, rng):
        Rm = cv.riemann(metric, x)
        np.testing.assert_allclose(Rm, _riemann_oracle(metric, x), rtol=1e-6, atol=1e-6)
        assert ta.is_algebraic_curvature(Rm, tol=1e-12)


def test_riemann_oracle_sign_on_the_sphere():
    m = model("spherical-cap", 3, 1.0)
    x = np.array([0.3, -0.2, 0.4])
    np.testing.assert_allclose(_riemann_oracle(m.metric, x), 0.5 * ta.kulkarni_nomizu(np.eye(3), np.eye(3)), atol=1e-6)


def test_christoffel_matches_numpy_formula(rng):
    metric = model("perturbed-flat", 4).metric
    for x in sample_ball(4, 1.0, 10, rng):
        np.testing.assert_allclose(cv.christoffel(metric, x), _christoffel_numpy(metric, x), atol=1e-13)


@pytest.mark.parametrize("n", [3, 4])
def test_bianchi_identities_on_generic_metric(n, rng):
    metric = model("perturbed-flat", n).metric
    for x in sample_ball(n, 1.0, 3, rng):
        b = cv.compute_bundle(metric, x, order=3)
        assert cv.second_bianchi_defect(b) < 1e-12
        assert cv.contracted_bianchi_defect(b) < 1e-12


def test_cotton_vanishes_on_space_forms_only(rng):
    x = sample_ball(3, 0.7, 1, rng)[0]
    assert np.max(np.abs(cv.cotton(model("spherical-cap", 3, 0.7).metric, x))) < 1e-12
    C = cv.cotton(model("perturbed-flat", 3).metric, x)
    assert np.max(np.abs(C)) > 1e-3
    np.testing.assert_allclose(C, -C.transpose(1, 0, 2), atol=1e-14)
    assert np.max(np.abs(np.einsum("iji->j", C))) < 1e-12


def test_laplacian_of_curvature_vanishes_on_the_sphere(rng):
    m = model("spherical-cap", 4, 0.7)
    for x in sample_ball(4, 0.7, 3, rng):
        assert np.max(np.abs(cv.lapl_riemann(m.metric, x))) < 1e-12


def test_hessian_and_laplacian_of_flat_potential(rng):
    metric, f = make_euclidean_ball(3, 1.0)
    x = sample_ball(3, 1.0, 1, rng)[0]
    np.testing.assert_allclose(cv.hessian(f, metric, x), -0.5 * np.eye(3), atol=1e-15)
    assert np.isclose(cv.laplacian(f, metric, x), -1.5)


def test_tensor_T_vanishes_on_einstein_models(rng):
    m = model("spherical-cap", 4, 0.7)
    b = cv.compute_bundle(m.metric, sample_ball(4, 0.7, 1, rng)[0], m.potential)
    assert np.max(np.abs(cv.tensor_T(b))) < 1e-12
    _, f = make_euclidean_ball(4, 1.0)
    b = cv.compute_bundle(model("perturbed-flat", 4).metric, np.array([0.2, 0.1, 0.0, -0.3]), f)
    T = cv.tensor_T(b)
    assert np.max(np.abs(T)) > 1e-4
    np.testing.assert_allclose(T, -T.transpose(1, 0, 2), atol=1e-15)


def test_covariant_derivative_of_metric_and_gradient(rng):
    m = model("spherical-cap", 3, 0.7)
    x = sample_ball(3, 0.7, 1, rng)[0]
    Dg = cv.covariant_derivative(m.metric, m.metric.fn, x, 2)
    assert np.max(np.abs(Dg)) < 1e-13
    import jax

    df = jax.grad(m.potential.fn)
    H = cv.covariant_derivative(m.metric, df, x, 1)
    b = cv.compute_bundle(m.metric, x, m.potential)
    np.testing.assert_allclose(H, b.hessf, atol=1e-13)


def test_weyl_norms_split_on_generic_four_metric():
    _, f = make_euclidean_ball(4, 1.0)
    b = cv.compute_bundle(model("perturbed-flat", 4).metric, np.array([0.1, -0.2, 0.3, 0.0]), f, order=4)
    w2, wp2, wm2 = b.weyl_norms
    assert np.isclose(w2, ta.norm2(b.W), rtol=1e-12)
    assert np.isclose(w2, wp2 + wm2, rtol=1e-12)
    assert w2 > 1e-6


def test_div_f2_grad_w2_matches_finite_difference_divergence():
    # div(f^2 ∇u) = f^2 Δu + 2 f <∇f, ∇u> with u = |W|^2, Δ from FD in the chart
    _, f = make_euclidean_ball(4, 1.0)
    metric = model("perturbed-flat", 4).metric
    x = np.array([0.15, -0.1, 0.2, 0.05])
    u = lambda X: np.array([ta.norm2(cv.compute_bundle(metric, y, order=2).W) for y in X])  # noqa: E731
    du, _ = finite_diff.derivative(u, x, 1, h=1e-3, levels=2)
    ddu, _ = finite_diff.derivative(u, x, 2, h=2e-2, levels=2)
    g = metric.eval(x)
    gi = np.linalg.inv(g)
    G = cv.christoffel(metric, x)
    lap = np.einsum("ij,ij->", gi, ddu - np.einsum("kij,k->ij", G, du))
    fx = float(f.eval(x))
    dfx = f.derivs(x, 1)
    expected = fx**2 * lap + 2 * fx * dfx @ gi @ du
    b = cv.compute_bundle(metric, x, f, order=4)
    assert abs(expected) > 1e-4
    assert np.isclose(b.div_f2_grad_w2, expected, rtol=1e-5, atol=1e-9)


def test_coarse_bundle_pair():
    m = model("spherical-cap", 3, 0.7)
    x = np.array([0.1, 0.0, 0.2])
    best, coarse = cv.compute_bundle(m.metric, x, m.potential, order=3, with_coarse=True)
    assert best is coarse
    fd = m.metric.as_finite_difference()
    best, coarse = cv.compute_bundle(fd, x, order=3, with_coarse=True)
    np.testing.assert_allclose(best.Rm, coarse.Rm, atol=1e-6)
    assert np.max(np.abs(best.gradRic - coarse.gradRic)) > 0


def test_errors():
    bad = ChartMetric(3, 1.0, lambda x: jnp.diag(jnp.array([1.0, -1.0, 1.0])) + 0.0 * x[0])
    with pytest.raises(SingularMetric):
        cv.compute_bundle(bad, np.zeros(3))
    m = model("spherical-cap", 3, 0.7)
    with pytest.raises(ValueError):
        cv.compute_bundle(m.metric, np.zeros(3), order=5)
    with pytest.raises(ValueError):
        cv.tensor_T(cv.compute_bundle(m.metric, np.zeros(3)))
