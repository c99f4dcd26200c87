import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose

from ballspec.ballbasis import (
    BasisIndex,
    ball_basis,
    ball_norm,
    baseP_radial_eval,
    basis_indices,
    basis_indices_upto,
    check_DiffV,
    check_LaplaceP,
    check_PN2P,
    classical_projection,
    laplace_p_j0,
    monic_eval,
    monic_terms,
    radial_profile,
    weighted_operator,
)
from ballspec.ballfun import BallPoly, inner_L2, radial_eval
from ballspec.checks import classical_gram
from ballspec.solvers import random_ballpoly


def mp_norm(mu, n, j, d):
    """Weighted norm by adaptive mpmath quadrature of the radial profile."""
    q = radial_profile(mu, n, j, d)
    m = n - 2 * j

    def integrand(r):
        u = float(r * r)
        return r ** (d - 1 + 2 * m) * (1 - r * r) ** mu * float(radial_eval(q, u)) ** 2

    num = mpmath.quad(integrand, [0, 1])
    den = mpmath.quad(lambda r: r ** (d - 1) * (1 - r * r) ** mu, [0, 1])
    return float(num / den)


def test_index_counts():
    assert basis_indices(2, 4) == [
        BasisIndex(4, 0, 1),
        BasisIndex(4, 0, 2),
        BasisIndex(4, 1, 1),
        BasisIndex(4, 1, 2),
        BasisIndex(4, 2, 1),
    ]
    assert len(basis_indices_upto(3, 5)) == math.comb(5 + 3, 3)
    assert len(basis_indices_upto(2, 7)) == math.comb(7 + 2, 2)


def test_ball_norm_examples():
    assert ball_norm(1, 1, 0, 3) == pytest.approx(3 / 7)
    assert ball_norm(0, 0, 0, 2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ball_norm(-1, 2, 0, 2)


@pytest.mark.parametrize("mu", [0, 0.5, 1, 2])
@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("n,j", [(0, 0), (3, 1), (4, 2), (6, 1)])
def test_ball_norm_against_mpmath(mu, d, n, j):
    assert_allclose(ball_norm(mu, n, j, d), mp_norm(mu, n, j, d), rtol=1e-12)


def test_inner_of_p0_2_11():
    f = ball_basis(0, BasisIndex(2, 1, 1), 2)
    assert_allclose(inner_L2(f, f), 1 / 3, rtol=1e-14)


@pytest.mark.parametrize("mu", [0, 1, 2, 0.5])
@pytest.mark.parametrize("d", [2, 3])
def test_gram_is_diagonal(mu, d):
    assert classical_gram(d, mu, 8) <= 1e-12


@pytest.mark.parametrize("mu", [0, 1.5, 3])
@pytest.mark.parametrize("n,j", [(2, 1), (5, 2), (8, 3), (12, 6)])
def test_exact_profile_matches_jacobi_sum(mu, n, j):
    u = np.linspace(0, 1, 9)
    assert_allclose(radial_eval(radial_profile(mu, n, j, 3), u), baseP_radial_eval(mu, n, j, 3, u), rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("mu", [0, 1, 0.5])
@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("idx", [BasisIndex(3, 0, 2), BasisIndex(4, 1, 1), BasisIndex(5, 2, 1), BasisIndex(6, 3, 1)])
def test_eigenfunction_of_weighted_operator(mu, d, idx):
    f = ball_basis(mu, idx, d)
    g = weighted_operator(f, mu)
    lam = -(idx.n + d) * (idx.n + 2 * mu)
    assert (g - lam * f).max_abs_coeff() <= 1e-10 * max(1.0, abs(lam) * f.max_abs_coeff())


def test_basis_out_of_range_is_zero():
    assert ball_basis(0, BasisIndex(3, 2, 1), 2).is_zero()
    assert ball_basis(0, BasisIndex(3, -1, 1), 2).is_zero()
    with pytest.raises(ValueError):
        ball_basis(0, BasisIndex(3, 1, 3), 2)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("s", [1, 2, 3])
@pytest.mark.parametrize("n", range(6, 11))
def test_pn2p(d, s, n):
    for j in range(s, n // 2 + 1):
        assert check_PN2P(s, BasisIndex(n, j, 1), d) <= 1e-10


def test_pn2p_rejects_bad_j():
    with pytest.raises(ValueError):
        check_PN2P(2, BasisIndex(6, 1, 1), 2)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_laplace_p(d, s):
    for n in range(0, 11):
        for j in range(n // 2 + 1):
            for k in range(0, j + 1):
                res = check_LaplaceP(s, k, BasisIndex(n, j, 1), d)
                assert res["passed"], (s, k, n, j, res)


def test_laplace_p_remainder_nonzero_when_j_plus_k_below_s():
    # s=4, k=1, n=4, j=2, d=2: s+k >= j holds yet the remainder survives
    res = check_LaplaceP(4, 1, BasisIndex(4, 2, 1), 2)
    assert not res["remainder_must_vanish"]
    assert res["relative_remainder"] > 1e-3
    assert res["passed"]


def test_laplace_p_j0():
    assert laplace_p_j0(4, 4, 2, 2) == 2
    assert laplace_p_j0(1, 4, 2, 3) == 0


def test_monic_example():
    terms = monic_terms(0, (2, 0))
    assert terms == {(2, 0): Fraction(1), (0, 0): Fraction(-1, 4)}
    assert_allclose(monic_eval(0, (2, 0), [0.5, 0.3]), 0.0)


@pytest.mark.parametrize("mu", [0, 1, 0.5])
@pytest.mark.parametrize("alpha", [(3, 1), (2, 2), (4, 0), (2, 1, 1)])
def test_monic_orthogonal_to_lower_degrees(mu, alpha):
    d = len(alpha)
    v = monic_terms(mu, alpha)
    deg = sum(alpha)
    # rewrite V as a BallPoly through the classical projection of its grid samples
    from ballspec.transforms import ballpoly_from_callable

    f = ballpoly_from_callable(lambda x: monic_eval(mu, alpha, x), d, deg)
    for n in range(deg):
        assert classical_projection(f, mu, n).max_abs_coeff() <= 1e-11
    assert max(abs(c) for c in v.values()) >= 1


@pytest.mark.parametrize("mu", [0, 1, 0.5, -0.5])
@pytest.mark.parametrize("alpha,beta", [((3, 1), (1, 0)), ((4, 2), (2, 1)), ((2, 2, 1), (1, 1, 0)), ((3, 0), (4, 0))])
def test_diff_v(mu, alpha, beta):
    assert check_DiffV(mu, alpha, beta) <= 1e-12


def test_diff_v_precondition():
    with pytest.raises(ValueError):
        check_DiffV(-4, (4, 0), (1, 0))


@pytest.mark.parametrize("mu", [0, 1])
def test_classical_projection_reproduces(mu):
    f = random_ballpoly(3, 5, 2)
    total = sum((classical_projection(f, mu, n) for n in range(6)), start=BallPoly.zero(3))
    assert (total - f).max_abs_coeff() <= 1e-12
