import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from ballspec.ballfun import (
    BallPoly,
    boundary_trace,
    inner_grad,
    inner_L2,
    inner_sphere,
    laplacian,
    normal_derivative_trace,
    radial_from_u_power,
    radial_pow_one_minus_u,
)
from ballspec.quadrature import build_grid, discrete_inner
from ballspec.solvers import random_ballpoly


def poly_x1_r2():
    # x1 * (1 + 2|x|^2) in d = 2: Y^1_1 = sqrt(2) x1
    return BallPoly(2, {(1, 1): radial_from_u_power([1 / math.sqrt(2), 2 / math.sqrt(2)])})


def test_evaluate_examples():
    f = poly_x1_r2()
    assert_allclose(f([0.3, 0.4]), 0.3 * (1 + 2 * 0.25))
    assert BallPoly.constant(3, 2.5)(np.zeros(3)) == 2.5
    assert BallPoly.zero(2)(np.array([[0.1, 0.2], [0.3, 0.1]])).tolist() == [0.0, 0.0]


def test_laplacian_against_sympy():
    x, y = sp.symbols("x y")
    expr = x * (1 + 2 * (x**2 + y**2)) + (x**2 - y**2) * (x**2 + y**2) ** 2
    lap = sp.lambdify((x, y), sp.diff(expr, x, 2) + sp.diff(expr, y, 2))
    f = poly_x1_r2() + BallPoly(2, {(2, 1): radial_from_u_power([0, 0, 1 / math.sqrt(2)])})
    pts = np.random.default_rng(0).uniform(-0.6, 0.6, (10, 2))
    assert_allclose(laplacian(f)(pts), lap(pts[:, 0], pts[:, 1]), rtol=1e-12)


def test_laplacian_of_u_squared():
    # Lap |x|^4 = 4 (d+2) |x|^2 ; d = 3 gives 20 |x|^2
    f = BallPoly.radial(3, radial_from_u_power([0, 0, 1]))
    assert_allclose(f.laplacian().terms[(0, 1)], radial_from_u_power([0, 20]), atol=1e-14)


@pytest.mark.parametrize("d", [2, 3])
def test_polyharmonic_bound(d):
    f = random_ballpoly(d, 9, 3)
    for _ in range(4):
        f = f.laplacian()
    assert f.degree == 1
    assert f.laplacian().is_zero()


def test_traces():
    f = poly_x1_r2()
    tr = boundary_trace(f)
    assert_allclose(tr[(1, 1)], 3 / math.sqrt(2))
    # x . grad [x1 (1 + 2u)] = x1 (1 + 6u) -> 7 x1 on the circle
    assert_allclose(normal_derivative_trace(f)[(1, 1)], 7 / math.sqrt(2))


def test_inner_products_against_mpmath():
    f = poly_x1_r2()
    # (1/pi) int_disk x1^2 (1+2r^2)^2 = int_0^1 r^3 (1+2r^2)^2 dr
    exact = float(mpmath.quad(lambda r: r**3 * (1 + 2 * r**2) ** 2, [0, 1]))
    assert_allclose(inner_L2(f, f), exact, rtol=1e-14)
    # weighted with (1-r^2): normalizer (1/pi) int (1-r^2) = 1/2
    exact_mu = float(mpmath.quad(lambda r: r**3 * (1 + 2 * r**2) ** 2 * (1 - r**2), [0, 1])) / 0.5
    assert_allclose(inner_L2(f, f, 1.0), exact_mu, rtol=1e-14)
    assert_allclose(inner_sphere(f, f), 9 / 2, rtol=1e-14)


def test_inner_L2_rejects_mu():
    with pytest.raises(ValueError):
        inner_L2(BallPoly.constant(2), BallPoly.constant(2), -1.0)


@pytest.mark.parametrize("d", [2, 3])
def test_inner_grad_against_tensor_quadrature(d):
    f, g = random_ballpoly(d, 4, 1), random_ballpoly(d, 3, 2)
    q = build_grid(d, 8)
    gf, gg = f.gradient(q.points), g.gradient(q.points)
    brute = float(np.dot(q.weights, np.einsum("ij,ij->i", gf, gg)))
    assert_allclose(inner_grad(f, g), brute, rtol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_inner_grad_with_finite_difference_gradients(d):
    f, g = random_ballpoly(d, 3, 5), random_ballpoly(d, 3, 6)
    q = build_grid(d, 6)
    h = 1e-5

    def fd(p):
        out = np.zeros_like(q.points)
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            out[:, i] = (p(q.points + e) - p(q.points - e)) / (2 * h)
        return out

    brute = float(np.dot(q.weights, np.einsum("ij,ij->i", fd(f), fd(g))))
    assert_allclose(inner_grad(f, g), brute, rtol=1e-8)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), d=st.sampled_from([2, 3]), deg=st.integers(0, 6))
def test_inner_L2_symmetric_and_positive(seed, d, deg):
    f, g = random_ballpoly(d, deg, seed), random_ballpoly(d, deg, seed + 1)
    assert_allclose(inner_L2(f, g), inner_L2(g, f), rtol=1e-12, atol=1e-12)
    assert inner_L2(f, f) > 0
    assert_allclose(inner_L2(2.0 * f + g, g), 2 * inner_L2(f, g) + inner_L2(g, g), rtol=1e-10, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), d=st.sampled_from([2, 3]))
def test_laplacian_linear(seed, d):
    f, g = random_ballpoly(d, 6, seed), random_ballpoly(d, 5, seed + 7)
    lhs = (3.0 * f - g).laplacian()
    rhs = 3.0 * f.laplacian() - g.laplacian()
    assert (lhs - rhs).max_abs_coeff() <= 1e-11 * max(1.0, lhs.max_abs_coeff())


@pytest.mark.parametrize("d", [2, 3])
def test_discrete_matches_exact_inner(d):
    f, g = random_ballpoly(d, 5, 11), random_ballpoly(d, 6, 12)
    assert_allclose(discrete_inner(build_grid(d, 6), f, g), inner_L2(f, g), rtol=1e-12)


def test_gradient_against_finite_differences():
    f = random_ballpoly(3, 5, 9)
    x = np.random.default_rng(2).uniform(-0.5, 0.5, (5, 3))
    h = 1e-6
    fd = np.column_stack([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(3)])
    assert_allclose(f.gradient(x), fd, atol=1e-7)


def test_euler_operator():
    f = random_ballpoly(2, 6, 4)
    x = np.random.default_rng(3).uniform(-0.5, 0.5, (5, 2))
    assert_allclose(f.euler()(x), np.einsum("ij,ij->i", x, f.gradient(x)), atol=1e-12)


def test_one_minus_u_powers():
    u = np.linspace(0, 1, 5)
    f = BallPoly.radial(2, radial_pow_one_minus_u(3))
    x = np.column_stack([np.sqrt(u), np.zeros(5)])
    assert_allclose(f(x), (1 - u) ** 3, atol=1e-15)


def test_immutable_and_validated():
    f = poly_x1_r2()
    with pytest.raises(TypeError):
        f.terms[(0, 1)] = np.ones(1)
    with pytest.raises(ValueError):
        f.terms[(1, 1)][0] = 1.0
    with pytest.raises(ValueError):
        BallPoly(2, {(1, 3): [1.0]})
    with pytest.raises(ValueError):
        BallPoly(4, {})


def test_json_round_trip():
    f = random_ballpoly(3, 5, 0)
    g = BallPoly.from_json(f.to_json())
    assert (f - g).is_zero()
    assert '"radial_basis": "legendre(2u-1)"' in f.to_json()


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        BallPoly.constant(2) + BallPoly.constant(3)
