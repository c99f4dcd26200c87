"""Real orthonormal spherical harmonics on the circle and the 2-sphere.

Normalization: the surface mean of ``Y**2`` is 1, so ``<1, 1>_S = 1``.
Solid harmonics ``rho**m Y(xi)`` are evaluated directly in Cartesian form,
which keeps them (and their gradients) regular at the origin.

Index conventions (``ell`` is 1-based):

* d = 2: ``Y^0_1 = 1``, ``Y^m_1 = sqrt(2) cos(m theta)``, ``Y^m_2 = sqrt(2) sin(m theta)``.
* d = 3: ``ell = k + m + 1`` for the azimuthal order ``k = -m..m`` about the
  ``x3`` axis; ``k < 0`` carries ``sin(|k| phi)``, ``k > 0`` carries ``cos(k phi)``.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np


class HarmonicIndex(NamedTuple):
    m: int
    ell: int


def _check_d(d: int) -> None:
    if d not in (2, 3):
        raise ValueError(f"unsupported dimension d={d}; only 2 and 3 are implemented")


def harmonic_dim(d: int, m: int) -> int:
    """Dimension ``a_m^d`` of the space of degree-``m`` spherical harmonics."""
    _check_d(d)
    if m < 0:
        raise ValueError("degree must be nonnegative")
    top = math.comb(m + d - 1, m)
    low = math.comb(m + d - 3, m - 2) if m >= 2 else 0
    return top - low


def harmonic_indices(d: int, mmax: int) -> list[HarmonicIndex]:
    """All ``(m, ell)`` with ``m <= mmax`` in canonical order."""
    return [HarmonicIndex(m, ell) for m in range(mmax + 1) for ell in range(1, harmonic_dim(d, m) + 1)]


def _check_index(d: int, m: int, ell: int) -> None:
    if not 1 <= ell <= harmonic_dim(d, m):
        raise ValueError(f"ell={ell} out of range for d={d}, m={m}")


def _as_points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise ValueError(f"points must have trailing dimension {d}")
    return x.reshape(-1, d)


def _solid2(mmax: int, x: np.ndarray, grad: bool):
    w = x[:, 0] + 1j * x[:, 1]
    vals, grads = [], []
    wk = np.ones_like(w)
    wprev = np.zeros_like(w)
    s2 = math.sqrt(2.0)
    for m in range(mmax + 1):
        if m == 0:
            vals.append(np.ones((1, len(w))))
            if grad:
                grads.append(np.zeros((1, len(w), 2)))
        else:
            vals.append(s2 * np.stack([wk.real, wk.imag]))
            if grad:
                # d/dx1 w^m = m w^(m-1), d/dx2 w^m = i m w^(m-1)
                dz = m * wprev
                g = np.empty((2, len(w), 2))
                g[0, :, 0], g[0, :, 1] = dz.real, -dz.imag
                g[1, :, 0], g[1, :, 1] = dz.imag, dz.real
                grads.append(s2 * g)
        wprev = wk
        wk = wk * w
    return vals, grads


def _solid3(mmax: int, x: np.ndarray, grad: bool):
    npts = x.shape[0]
    z = x[:, 2]
    r2 = np.einsum("ij,ij->i", x, x)
    w = x[:, 0] + 1j * x[:, 1]
    ez = np.zeros((npts, 3))
    ez[:, 2] = 1.0
    # powers of w = x1 + i x2 and their gradients
    wpow = [np.ones(npts, dtype=complex)]
    for _ in range(mmax):
        wpow.append(wpow[-1] * w)
    # T[l][k]: normalized associated Legendre part in solid form, poly in (z, r2)
    T = [[None] * (mmax + 1) for _ in range(mmax + 1)]
    G = [[None] * (mmax + 1) for _ in range(mmax + 1)]
    ckk = 1.0
    for k in range(mmax + 1):
        if k > 0:
            ckk *= math.sqrt((2 * k + 1) / (2 * k))
        T[k][k] = np.full(npts, ckk)
        G[k][k] = np.zeros((npts, 3))
        if k + 1 <= mmax:
            a = math.sqrt(2 * k + 3)
            T[k + 1][k] = a * z * T[k][k]
            G[k + 1][k] = a * (ez * T[k][k][:, None] + z[:, None] * G[k][k])
        for l in range(k + 2, mmax + 1):
            a = math.sqrt((2 * l + 1) * (2 * l - 1) / ((l - k) * (l + k)))
            b = math.sqrt((2 * l + 1) * (l + k - 1) * (l - k - 1) / ((l - k) * (l + k) * (2 * l - 3)))
            T[l][k] = a * z * T[l - 1][k] - b * r2 * T[l - 2][k]
            if grad:
                G[l][k] = a * (ez * T[l - 1][k][:, None] + z[:, None] * G[l - 1][k]) - b * (
                    2.0 * x * T[l - 2][k][:, None] + r2[:, None] * G[l - 2][k]
                )
    s2 = math.sqrt(2.0)
    vals, grads = [], []
    for m in range(mmax + 1):
        v = np.empty((2 * m + 1, npts))
        g = np.empty((2 * m + 1, npts, 3)) if grad else None
        for k in range(-m, m + 1):
            row = k + m
            ak = abs(k)
            if k == 0:
                v[row] = T[m][0]
                if grad:
                    g[row] = G[m][0]
                continue
            wk = wpow[ak]
            part = wk.imag if k < 0 else wk.real
            v[row] = s2 * T[m][ak] * part
            if grad:
                dz = ak * wpow[ak - 1]
                if k > 0:
                    dpart = np.stack([dz.real, -dz.imag, np.zeros(npts)], axis=1)
                else:
                    dpart = np.stack([dz.imag, dz.real, np.zeros(npts)], axis=1)
                g[row] = s2 * (G[m][ak] * part[:, None] + T[m][ak][:, None] * dpart)
        vals.append(v)
        if grad:
            grads.append(g)
    return vals, grads


def solid_table(d: int, mmax: int, x) -> list[np.ndarray]:
    """Solid harmonics of all degrees ``m <= mmax`` at the points ``x``.

    Returns a list whose entry ``m`` has shape ``(a_m^d, npts)``; row
    ``ell - 1`` holds ``rho**m Y^m_ell(xi)``.
    """
    _check_d(d)
    pts = _as_points(x, d)
    fn = _solid2 if d == 2 else _solid3
    return fn(mmax, pts, False)[0]


def solid_table_grad(d: int, mmax: int, x) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Values and gradients of solid harmonics; gradients have shape ``(a_m, npts, d)``."""
    _check_d(d)
    pts = _as_points(x, d)
    fn = _solid2 if d == 2 else _solid3
    return fn(mmax, pts, True)


def solid_eval(d: int, m: int, ell: int, x):
    """Solid harmonic ``rho**m Y^m_ell(x / rho)``; ``x`` may hold several points."""
    _check_index(d, m, ell)
    x = np.asarray(x, dtype=float)
    out = solid_table(d, m, x)[m][ell - 1]
    return float(out[0]) if x.ndim == 1 else out.reshape(x.shape[:-1])


def sph_eval(d: int, m: int, ell: int, xi):
    """Spherical harmonic ``Y^m_ell`` at unit vector(s) ``xi``."""
    xi = np.asarray(xi, dtype=float)
    nrm = np.linalg.norm(xi, axis=-1)
    if np.any(np.abs(nrm - 1.0) > 1e-12):
        raise ValueError("xi must lie on the unit sphere")
    return solid_eval(d, m, ell, xi)
