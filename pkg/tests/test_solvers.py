import math

import numpy as np
import pytest
import sympy as sp
from numpy.testing import assert_allclose

from ballspec.ballbasis import BasisIndex, ball_basis, basis_indices_upto
from ballspec.ballfun import BallPoly, inner_grad, inner_L2, inner_sphere
from ballspec.quadrature import build_grid, error_metrics
from ballspec.solvers import (
    BiharmonicProblem,
    HelmholtzProblem,
    NotSPDError,
    assemble_biharmonic,
    assemble_helmholtz,
    biharmonic_coeffs,
    convergence_study,
    exam1a,
    exam1b,
    exam1b_exact,
    exam2_exact,
    exam2_rhs,
    fitted_rate,
    helmholtz_coeffs,
    helmholtz_mass,
    helmholtz_stiffness,
    manufactured_biharmonic,
    manufactured_helmholtz,
    solve,
    solve_biharmonic,
    solve_helmholtz,
    solve_tridiagonal_spd,
)
from ballspec.sobolevbasis import SobolevParams, sobolev_inner


def close(a, b, tol=1e-10):
    return (a - b).max_abs_coeff() <= tol * max(1.0, a.max_abs_coeff(), b.max_abs_coeff())


def test_mass_examples():
    # k = 2, j = 0 on the disk: d/(2k+d) = 1/3
    assert_allclose(helmholtz_mass(2, 2, 0)[0, 0], 1 / 3)
    a = helmholtz_mass(2, 0, 2)
    assert_allclose(a[0, 0], 1.0)
    assert_allclose(a[1, 1], 2 / 6 + 2 / 2)
    assert_allclose(a[0, 1], -1.0)
    assert a[0, 2] == 0.0


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("m", [0, 1, 4])
def test_mass_and_stiffness_against_exact_gram(d, m):
    jmax = 4
    basis = [ball_basis(-1, BasisIndex(m + 2 * j, j, 1), d) for j in range(jmax + 1)]
    mass = np.array([[inner_L2(a, b) for b in basis] for a in basis])
    assert_allclose(helmholtz_mass(d, m, jmax), mass, atol=1e-13)
    eta = 0.7
    stiff = np.array([[inner_grad(a, b) + d * eta * inner_sphere(a, b) for b in basis] for a in basis])
    assert_allclose(np.diag(helmholtz_stiffness(d, m, jmax, eta)), stiff, atol=1e-11)


@pytest.mark.parametrize("d", [2, 3])
def test_block_decoupling_against_dense_assembly(d):
    n, lam, eta = 8, 1.3, 0.6
    f = lambda x: np.cos(x[:, 0]) + x[:, 1] ** 3
    g = lambda x: np.sin(2 * x[:, 0])
    prob = HelmholtzProblem(d, lam, eta, f, g)
    system = assemble_helmholtz(prob, n)
    idx = [i for i in basis_indices_upto(d, n)]
    basis = [ball_basis(-1, i, d) for i in idx]
    dense = np.array(
        [[inner_grad(a, b) + lam * inner_L2(a, b) + d * eta * inner_sphere(a, b) for b in basis] for a in basis]
    )
    pos = {i: k for k, i in enumerate(idx)}
    seen = np.zeros_like(dense, dtype=bool)
    for blk in system.blocks:
        rows = [pos[BasisIndex(k, j, blk.ell)] for k, j in zip(blk.degrees, blk.js)]
        assert_allclose(dense[np.ix_(rows, rows)], blk.matrix, atol=1e-11)
        seen[np.ix_(rows, rows)] = True
    assert np.max(np.abs(dense[~seen])) <= 1e-11


def test_tridiagonal_solver():
    rng = np.random.default_rng(1)
    nn = 9
    off = rng.uniform(-1, 1, nn - 1)
    diag = 3.0 + rng.uniform(0, 1, nn)
    a = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    b = rng.normal(size=nn)
    assert_allclose(solve_tridiagonal_spd(diag, off, b), np.linalg.solve(a, b), rtol=1e-12)
    with pytest.raises(NotSPDError):
        solve_tridiagonal_spd(np.array([1.0, 1.0]), np.array([2.0]), np.ones(2))


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("lam,eta", [(1.0, 1.0), (0.0, 1.0), (2.0, 0.0)])
def test_manufactured_helmholtz_reproduced(d, lam, eta):
    prob = manufactured_helmholtz(d, 5, lam, eta, rng=3)
    for n in (5, 7):
        assert close(solve_helmholtz(prob, n), prob.exact)


@pytest.mark.parametrize("d", [2, 3])
def test_galerkin_orthogonality(d):
    prob = manufactured_helmholtz(d, 7, 1.0, 0.5, rng=5)
    n = 4
    un = solve_helmholtz(prob, n)
    e = prob.exact - un
    for i in basis_indices_upto(d, n):
        v = ball_basis(-1, i, d)
        a = inner_grad(e, v) + inner_L2(e, v) + d * 0.5 * inner_sphere(e, v)
        assert abs(a) <= 1e-11


def test_exam1a_exact_from_n3():
    prob = exam1a()
    q = build_grid(2, 12)
    for n in (3, 5, 8):
        un = solve(prob, n)
        e_m, e_l2 = error_metrics(q, lambda x: un(x) - prob.exact(x))
        assert e_m <= 1e-12
        assert e_l2 <= 1e-12


def test_exam1a_data():
    x = np.random.default_rng(0).uniform(-0.6, 0.6, (8, 2))
    prob = exam1a()
    xs, ys = sp.symbols("x y")
    u = xs * (3 - xs**2 - ys**2)
    fexpr = sp.lambdify((xs, ys), -sp.diff(u, xs, 2) - sp.diff(u, ys, 2) + u)
    assert_allclose(prob.f(x), fexpr(x[:, 0], x[:, 1]), rtol=1e-13)
    th = np.linspace(0, 2 * np.pi, 7)
    assert_allclose(prob.g(np.column_stack([np.cos(th), np.sin(th)])), 0.0)


def test_exam1b_data_against_sympy():
    xs = sp.symbols("x0:3")
    u = (4 - xs[0] ** 2 - xs[1] ** 2) / (4 + xs[0] ** 2 + xs[1] ** 2 - 4 * xs[0])
    lap = sp.simplify(sum(sp.diff(u, v, 2) for v in xs))
    assert lap == 0
    normal = sp.lambdify(xs, sum(v * sp.diff(u, v) for v in xs) + u)
    xi = np.random.default_rng(2).normal(size=(6, 3))
    xi /= np.linalg.norm(xi, axis=1)[:, None]
    prob = exam1b()
    assert_allclose(prob.g(xi), normal(*xi.T), rtol=1e-12)
    assert_allclose(prob.f(xi * 0.5), exam1b_exact(xi * 0.5))


def test_exam2_rhs_against_sympy():
    xs, ys = sp.symbols("x y")
    u = sp.cos(2 * sp.pi * (xs**2 + ys**2)) - 1
    lap = lambda w: sp.diff(w, xs, 2) + sp.diff(w, ys, 2)
    rhs = sp.lambdify((xs, ys), lap(lap(u)) - lap(u) + u)
    x = np.random.default_rng(3).uniform(-0.7, 0.7, (10, 2))
    assert_allclose(exam2_rhs(x), rhs(x[:, 0], x[:, 1]), rtol=1e-11, atol=1e-9)
    xi = np.array([[1.0, 0.0], [0.6, 0.8]])
    assert_allclose(exam2_exact(xi), 0.0, atol=1e-14)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("l1,l0", [(1.0, 1.0), (0.0, 0.0), (3.0, 0.5)])
def test_manufactured_biharmonic_reproduced(d, l1, l0):
    prob = manufactured_biharmonic(d, 8, l1, l0, rng=4)
    for n in (8, 9):
        assert close(solve_biharmonic(prob, n), prob.exact)


def test_biharmonic_blocks():
    prob = manufactured_biharmonic(2, 10, 1.0, 1.0)
    system = assemble_biharmonic(prob, 12)
    p2 = SobolevParams.default(2, 2)
    for blk in system.blocks:
        a = blk.matrix
        assert_allclose(a, a.T, atol=0)
        assert np.all(np.linalg.eigvalsh(a) > 0)
        assert np.all(np.triu(a, 3) == 0)
    # with lam1 = lam0 = 0 the blocks are diagonal with the s = 2 norms
    bare = assemble_biharmonic(BiharmonicProblem(2, 0.0, 0.0, prob.f), 12)
    for blk in bare.blocks:
        ref = [sobolev_inner(b, b, p2) for b in (ball_basis(-2, BasisIndex(k, j, 1), 2) for k, j in zip(blk.degrees, blk.js))]
        assert_allclose(np.diag(blk.matrix), ref, rtol=1e-12)
        assert np.count_nonzero(blk.matrix - np.diag(np.diag(blk.matrix))) == 0


def test_biharmonic_traces_vanish():
    prob = BiharmonicProblem(2, 1.0, 1.0, lambda x: np.exp(x[:, 0]) * (1 + x[:, 1]))
    un = solve_biharmonic(prob, 10)
    assert max(abs(v) for v in un.boundary_trace().values()) <= 1e-13
    assert max(abs(v) for v in un.normal_derivative_trace().values()) <= 1e-12


def test_coefficient_tables():
    c = helmholtz_coeffs(exam1a(), 4)
    assert c.family == "sobolev"
    assert c.degree == 4
    b = biharmonic_coeffs(manufactured_biharmonic(2, 6), 6)
    assert all(idx.j >= 2 for idx in b.table)


def test_problem_validation():
    f = lambda x: x[:, 0]
    with pytest.raises(ValueError):
        HelmholtzProblem(2, 0.0, 0.0, f, f)
    with pytest.raises(ValueError):
        HelmholtzProblem(4, 1.0, 1.0, f, f)
    with pytest.raises(ValueError):
        BiharmonicProblem(2, -1.0, 0.0, f)
    with pytest.raises(ValueError):
        solve_biharmonic(BiharmonicProblem(2, 1.0, 1.0, f), 3)
    with pytest.raises(ValueError):
        assemble_helmholtz(exam1a(), 6, grid_n=4)
    with pytest.raises(TypeError):
        solve(object(), 4)
    with pytest.raises(ValueError):
        solve_helmholtz(HelmholtzProblem(2, 1.0, 1.0, lambda x: np.full(len(x), np.inf), f), 3)


def test_fitted_rate():
    ns = [2, 4, 6, 8]
    errs = [10.0 ** (-0.5 * n) for n in ns]
    assert_allclose(fitted_rate(ns, errs), -0.5)
    assert_allclose(fitted_rate(ns + [10], errs + [1e-15]), -0.5)
    assert math.isnan(fitted_rate([2], [1.0]))


def test_convergence_study_small():
    res = convergence_study(exam1b(), [2, 4, 6, 8])
    errs = [r[2] for r in res.rows]
    assert [r[0] for r in res.rows] == [2, 4, 6, 8]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert res.fitted_rate < -0.2
    with pytest.raises(ValueError):
        convergence_study(HelmholtzProblem(2, 1.0, 1.0, lambda x: x[:, 0], lambda x: x[:, 0]), [2])
    with pytest.raises(ValueError):
        convergence_study(exam1b(), [4, 8], grid_n=6)


def test_convergence_study_thread_count_does_not_change_results(monkeypatch):
    monkeypatch.setenv("BALLSPEC_THREADS", "1")
    a = convergence_study(exam1a(), [2, 3, 4])
    monkeypatch.setenv("BALLSPEC_THREADS", "3")
    b = convergence_study(exam1a(), [2, 3, 4])
    assert a.rows == b.rows


def test_manufactured_data_shapes():
    prob = manufactured_helmholtz(3, 4)
    assert isinstance(prob.exact, BallPoly)
    assert prob.name == "manufactured-4"
    with pytest.raises(ValueError):
        manufactured_biharmonic(2, 3)
