import numpy as np
import pytest

from critmetric import finite_diff
from critmetric.errors import StepUnderflow


def _batch(fn):
    return lambda X: np.array([fn(x) for x in X])


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_single_step_is_exact_on_monomials_of_that_degree(order):
    # central differences of x^k of order k reproduce k! for any step
    f = _batch(lambda x: x[0] ** order)
    d = finite_diff.central_difference_tensor(f, np.array([0.37]), order, 0.1)
    assert d.shape == (1,) * order
    assert np.isclose(d.item(), np.prod(np.arange(1, order + 1)), rtol=1e-9)


def test_stencil_shares_lattice_points():
    lattice, plan = finite_diff._stencil(3, 2)
    assert len(plan) == 6  # multi-indices of order 2 in 3 variables
    assert len(np.unique(lattice, axis=0)) == len(lattice)


def test_polynomial_derivatives_are_exact_in_two_variables():
    f = _batch(lambda x: x[0] ** 3 * x[1] + 2.0 * x[1] ** 2)
    x = np.array([0.3, -0.7])
    d1, _ = finite_diff.derivative(f, x, 1)
    np.testing.assert_allclose(d1, [3 * 0.09 * -0.7, 0.027 + 4 * -0.7], atol=1e-9)
    d2, _ = finite_diff.derivative(f, x, 2)
    np.testing.assert_allclose(d2, [[6 * 0.3 * -0.7, 0.27], [0.27, 4.0]], atol=1e-7)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_exponential_mixed_partials(order):
    # every partial of exp(a.x) of order k is prod(a_i) exp(a.x)
    a = np.array([0.4, -0.9, 1.3])
    x = np.array([0.1, 0.2, -0.3])
    f = _batch(lambda y: np.exp(a @ y))
    best, err = finite_diff.derivative(f, x, order)
    exact = np.exp(a @ x)
    for _ in range(order):
        exact = np.multiply.outer(exact, a)
    rel = np.max(np.abs(best - exact)) / np.max(np.abs(exact))
    assert rel < 1e-6
    assert err >= 0


def test_value_axes_come_first():
    f = _batch(lambda x: np.array([x[0] * x[1], x[1] ** 2]))
    d, _ = finite_diff.derivative(f, np.array([1.0, 2.0]), 1)
    assert d.shape == (2, 2)
    np.testing.assert_allclose(d, [[2.0, 1.0], [0.0, 4.0]], atol=1e-9)


def test_richardson_improves_on_single_level():
    f = _batch(lambda x: np.sin(3.0 * x[0]))
    x = np.array([0.2])
    exact = -27.0 * np.cos(0.6)
    raw = finite_diff.central_difference_tensor(f, x, 3, 0.05)
    best, _ = finite_diff.derivative(f, x, 3, h=0.05, levels=3)
    assert abs(best[0, 0, 0] - exact) < abs(raw[0, 0, 0] - exact) / 100


def test_step_underflow_carries_partial_result():
    f = _batch(lambda x: np.sin(40.0 * x[0]))
    with pytest.raises(StepUnderflow) as info:
        finite_diff.derivative(f, np.array([0.1]), 4, h=0.2, levels=2, tol=1e-12)
    assert info.value.partial is not None
    assert info.value.error_estimate > 1e-12
