import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import sph_harm_y

from ballspec.ballfun import BallPoly
from ballspec.harmonics import (
    harmonic_dim,
    harmonic_indices,
    solid_eval,
    solid_table,
    solid_table_grad,
    sph_eval,
)
from ballspec.quadrature import build_grid

XI = np.array([-0.20826886, 0.60962325, 0.76484219])
XI = XI / np.linalg.norm(XI)

# scipy.special.sph_harm_y at theta=0.7, phi=1.9, rescaled to unit surface mean
SCIPY_VALUES = [
    (0, 1, 0.9999999999999999),
    (1, 1, 1.0558984492697705),
    (1, 3, -0.3607322420845307),
    (2, 2, 1.8058388376743049),
    (3, 7, 0.4667926693919452),
    (4, 1, 0.3698581422479524),
    (5, 6, -1.391974970113986),
]


@pytest.mark.parametrize("d,m,expected", [(2, 0, 1), (2, 5, 2), (3, 0, 1), (3, 1, 3), (3, 4, 9)])
def test_harmonic_dim(d, m, expected):
    assert harmonic_dim(d, m) == expected


def test_harmonic_dim_rejects_bad_input():
    with pytest.raises(ValueError):
        harmonic_dim(4, 1)
    with pytest.raises(ValueError):
        harmonic_dim(2, -1)


def test_index_ordering():
    assert harmonic_indices(2, 2) == [(0, 1), (1, 1), (1, 2), (2, 1), (2, 2)]
    assert [i.ell for i in harmonic_indices(3, 1)] == [1, 1, 2, 3]


@pytest.mark.parametrize("m,ell,expected", SCIPY_VALUES)
def test_d3_against_scipy(m, ell, expected):
    th, ph = 0.7, 1.9
    xi = np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
    assert_allclose(sph_eval(3, m, ell, xi), expected, rtol=1e-12)


@pytest.mark.parametrize("m", range(0, 9))
def test_d3_against_scipy_runtime(m):
    rng = np.random.default_rng(m)
    th, ph = rng.uniform(0, np.pi, 5), rng.uniform(0, 2 * np.pi, 5)
    xi = np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
    for k in range(-m, m + 1):
        ref = sph_harm_y(m, abs(k), th, ph) * math.sqrt(4 * math.pi) * (-1) ** abs(k)
        ref = ref.real if k == 0 else math.sqrt(2) * (ref.imag if k < 0 else ref.real)
        assert_allclose(sph_eval(3, m, k + m + 1, xi), ref, rtol=1e-11, atol=1e-12)


def test_d2_examples():
    assert solid_eval(2, 0, 1, [0.0, 0.0]) == 1.0
    assert_allclose(solid_eval(2, 2, 1, [0.5, 0.0]), math.sqrt(2) * 0.25)
    assert solid_eval(2, 3, 2, [0.0, 0.0]) == 0.0
    assert_allclose(sph_eval(3, 1, 2, [0.0, 0.0, 1.0]), math.sqrt(3))


def test_sph_eval_requires_unit_vectors():
    with pytest.raises(ValueError):
        sph_eval(2, 1, 1, [0.5, 0.5])


@pytest.mark.parametrize("d", [2, 3])
def test_discrete_orthonormality(d):
    q = build_grid(d, 10)
    tab = np.vstack(solid_table(d, 10, q.xi))
    assert_allclose((tab * q.wa) @ tab.T, np.eye(len(tab)), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_solid_harmonics_are_harmonic(d):
    for m, ell in harmonic_indices(d, 12):
        assert BallPoly.solid_harmonic(d, m, ell).laplacian().is_zero()


@pytest.mark.parametrize("d", [2, 3])
def test_gradients_by_finite_differences(d):
    rng = np.random.default_rng(4)
    x = rng.uniform(-0.5, 0.5, (6, d))
    vals, grads = solid_table_grad(d, 6, x)
    h = 1e-6
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        plus = solid_table(d, 6, x + e)
        minus = solid_table(d, 6, x - e)
        for m in range(7):
            fd = (plus[m] - minus[m]) / (2 * h)
            assert_allclose(grads[m][:, :, i], fd, atol=1e-7)


@pytest.mark.parametrize("d", [2, 3])
def test_homogeneity(d):
    x = np.random.default_rng(1).uniform(-0.6, 0.6, (4, d))
    a = solid_table(d, 7, x)
    b = solid_table(d, 7, 0.5 * x)
    for m in range(8):
        assert_allclose(b[m], 0.5**m * a[m], atol=1e-14)


def test_high_degree_stays_finite():
    tab = solid_table(3, 200, XI[None, :])
    assert all(np.all(np.isfinite(t)) for t in tab)
