"""Sobolev inner product ``<., .>_{-s}`` and its mutually orthogonal basis.

``<f, g>_{-s} = <grad^s f, grad^s g>_B + sum_{k < ceil(s/2)} lambda_k <Lap^k f, Lap^k g>_S``
with ``grad^{2m} = Lap^m`` and ``grad^{2m+1} = grad Lap^m``.

The harmonic lifts ``Y^{n,j} = sum_i c_i (1-|x|^2)^i Y^n`` satisfy
``Lap Y^{n,j} = Y^{n,j-1}`` and ``Lap^k Y^{n,j}|_S = delta_{k,j} Y^n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .ballbasis import BasisIndex, ball_basis, basis_indices, classical_projection
from .ballfun import (
    BallPoly,
    inner_grad,
    inner_L2,
    inner_sphere,
    radial_pow_one_minus_u,
)
from .jacobi import pochhammer


@dataclass(frozen=True)
class SobolevParams:
    """Order ``s`` and the boundary weights ``lambda_0 .. lambda_{ceil(s/2)-1}``."""

    s: int
    lambdas: tuple[float, ...]

    def __post_init__(self):
        if self.s < 1:
            raise ValueError("s must be a positive integer")
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if len(self.lambdas) != math.ceil(self.s / 2):
            raise ValueError(f"need {math.ceil(self.s / 2)} boundary weights for s={self.s}")
        if any(v <= 0 for v in self.lambdas):
            raise ValueError("boundary weights must be positive")

    @classmethod
    def default(cls, s: int, d: int) -> "SobolevParams":
        """All boundary weights equal to ``d``."""
        return cls(s, (float(d),) * math.ceil(s / 2))

    @property
    def nbnd(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True)
class LiftCoeffs:
    n: int
    j: int
    d: int
    c: tuple[float, ...]


def system_matrix(d: int, n: int, j: int) -> np.ndarray:
    """Matrix ``A[k, i] = 4^k (-i)_k (-k)_{i-k} (n+d/2)_k / (n+d/2)_{i-k}`` for ``k <= i``."""
    h = n + d / 2
    a = np.zeros((j + 1, j + 1))
    for k in range(j + 1):
        for i in range(k, j + 1):
            a[k, i] = 4.0**k * pochhammer(-i, k) * pochhammer(-k, i - k) * pochhammer(h, k) / pochhammer(h, i - k)
    return a


@lru_cache(maxsize=1024)
def lift_coeffs(d: int, n: int, j: int) -> LiftCoeffs:
    """Coefficients ``c_0..c_j`` of ``Y^{n,j}`` from a dense LU solve."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    a = system_matrix(d, n, j)
    rhs = np.zeros(j + 1)
    rhs[j] = 1.0
    try:
        c = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular lift system for n={n}, j={j}") from exc
    resid = np.max(np.abs(a @ c - rhs)) / max(1.0, np.max(np.abs(a)) * np.max(np.abs(c)))
    if resid > 1e-12:
        raise np.linalg.LinAlgError(f"lift system residual {resid:.2e} for n={n}, j={j}")
    return LiftCoeffs(n, j, d, tuple(float(v) for v in c))


def lift_radial(d: int, n: int, j: int) -> np.ndarray:
    """Legendre coefficients of ``sum_i c_i (1-u)^i``."""
    c = lift_coeffs(d, n, j).c
    out = np.zeros(j + 1)
    for i, ci in enumerate(c):
        r = radial_pow_one_minus_u(i)
        out[: len(r)] += ci * r
    return out


def lift_eval(d: int, n: int, j: int, ell: int) -> BallPoly:
    """``Y^{n,j}_ell`` as a BallPoly (zero for ``j < 0``)."""
    if j < 0:
        return BallPoly.zero(d)
    return BallPoly(d, {(n, ell): lift_radial(d, n, j)})


def delta_y_trace(d: int, n: int, j: int, k: int) -> float:
    """Scalar ``Lap^k [(1-|x|^2)^j Y]|_S / Y`` for ``Y`` of degree ``n``.

    Equals ``4^k (-j)_k (-k)_{j-k} (n+d/2)_k / (n+d/2)_{j-k}``, the same
    coefficients that build the lift system (zero unless ``k <= j <= 2k``).
    """
    if j < k:
        return 0.0
    h = n + d / 2
    return 4.0**k * pochhammer(-j, k) * pochhammer(-k, j - k) * pochhammer(h, k) / pochhammer(h, j - k)


def _lap_power(f: BallPoly, k: int) -> BallPoly:
    for _ in range(k):
        f = f.laplacian()
    return f


def _sobolev_parts(f: BallPoly, p: SobolevParams) -> tuple[tuple[BallPoly, ...], BallPoly]:
    """``(Lap^k f for k < ceil(s/2), Lap^{floor(s/2)} f)``."""
    laps = [f]
    for _ in range(max(p.nbnd - 1, p.s // 2)):
        laps.append(laps[-1].laplacian())
    return tuple(laps[: p.nbnd]), laps[p.s // 2]


def _inner_from_parts(fp, gp, p: SobolevParams) -> float:
    total = sum(lam * inner_sphere(a, b) for lam, a, b in zip(p.lambdas, fp[0], gp[0]))
    if p.s % 2 == 0:
        return total + inner_L2(fp[1], gp[1], 0.0)
    a, b = fp[1], gp[1]
    if len(a.terms) > len(b.terms):
        a, b = b, a
    return total + inner_grad(a, b)


def sobolev_inner(f: BallPoly, g: BallPoly, p: SobolevParams) -> float:
    """``<f, g>_{-s}`` computed exactly on the BallPoly representation."""
    return _inner_from_parts(_sobolev_parts(f, p), _sobolev_parts(g, p), p)


@lru_cache(maxsize=4096)
def q_basis(p: SobolevParams, idx: BasisIndex, d: int) -> BallPoly:
    """``Q^{-s,n}_{j,ell}`` via the three-branch construction."""
    n, j, ell = idx
    s, nb = p.s, p.nbnd
    m = n - 2 * j
    if j >= s:
        return ball_basis(-s, idx, d)
    if j < nb:
        return lift_eval(d, m, j, ell)
    pb = ball_basis(-s, idx, d)
    out = pb
    lap = pb
    for k in range(nb):
        ratio = lap.boundary_trace().get((m, ell), 0.0)
        out = out - ratio * lift_eval(d, m, k, ell)
        lap = lap.laplacian()
    return out


def q_norm(p: SobolevParams, n: int, j: int, d: int) -> float:
    """Closed-form ``h^{-s}_{j,n} = <Q^{-s,n}_j, Q^{-s,n}_j>_{-s}``."""
    s, nb = p.s, p.nbnd
    h = n + d / 2
    if j >= nb:
        return 2.0 ** (2 * s - 1) * d * pochhammer(h - s, s) * pochhammer(h - s + 1, s - 1)
    if s % 2 == 1 and j == (s - 1) // 2:
        return d * (n - 2 * j) + p.lambdas[j]
    return p.lambdas[j]


@lru_cache(maxsize=4096)
def _q_parts(p: SobolevParams, idx: BasisIndex, d: int):
    return _sobolev_parts(q_basis(p, idx, d), p)


def sobolev_coefficients(f: BallPoly, p: SobolevParams, n: int) -> dict[BasisIndex, float]:
    """Coefficients ``<f, Q^{-s,n}_{j,ell}>_{-s} / h^{-s}_{j,n}`` of the degree-``n`` part."""
    out = {}
    fp = None
    for idx in basis_indices(f.d, n):
        if (n - 2 * idx.j, idx.ell) not in f.terms:
            continue
        if fp is None:
            fp = _sobolev_parts(f, p)
        out[idx] = _inner_from_parts(fp, _q_parts(p, idx, f.d), p) / q_norm(p, n, idx.j, f.d)
    return out


def sobolev_projection(f: BallPoly, p: SobolevParams, n: int) -> BallPoly:
    """``proj_n^{-s} f`` as a BallPoly."""
    out = BallPoly.zero(f.d)
    for idx, c in sobolev_coefficients(f, p, n).items():
        out = out + c * q_basis(p, idx, f.d)
    return out


def _sphere_points(d: int, n: int) -> np.ndarray:
    from .quadrature import build_grid

    return build_grid(d, n).sphere_points


def check_boundary_projection(p: SobolevParams, n: int, k: int, f: BallPoly) -> float:
    """Sup over a sphere grid of ``Lap^k proj_n^{-s} f - proj^H_{n-2k} Lap^k f``."""
    if not 0 <= k < p.nbnd:
        raise ValueError("need 0 <= k <= ceil(s/2) - 1")
    lhs = _lap_power(sobolev_projection(f, p, n), k)
    lhs = BallPoly(f.d, {key: [v] for key, v in lhs.boundary_trace().items()})
    tr = _lap_power(f, k).boundary_trace()
    rhs = BallPoly(f.d, {key: [v] for key, v in tr.items() if key.m == n - 2 * k})
    xi = _sphere_points(f.d, max(n, 4) + 2)
    return float(np.max(np.abs(lhs(xi) - rhs(xi)), initial=0.0))


def check_factorization(s: int, n: int, g: BallPoly, p: SobolevParams | None = None) -> float:
    """Residual of ``proj_n^{-s}[(1-|x|^2)^s g] = (1-|x|^2)^s proj^s_{n-2s} g``."""
    p = p or SobolevParams.default(s, g.d)
    if p.s != s:
        raise ValueError("parameter order mismatch")
    w = radial_pow_one_minus_u(s)
    lhs = sobolev_projection(g.mul_radial(w), p, n)
    rhs = classical_projection(g, s, n - 2 * s).mul_radial(w) if n >= 2 * s else BallPoly.zero(g.d)
    diff = lhs - rhs
    scale = max(1.0, lhs.max_abs_coeff(), rhs.max_abs_coeff())
    return diff.max_abs_coeff() / scale


def q_structure_report(p: SobolevParams, idx: BasisIndex, d: int) -> dict[str, float]:
    """Residuals for the three structural properties of ``Q^{-s,n}_{j,ell}``.

    ``traces``: ``Lap^k Q|_S - delta_{jk} Y`` for ``k < ceil(s/2)``.
    ``top``: ``Lap^{floor(s/2)} Q`` minus ``2^s (n+d/2-s)_s P^{0,n-s}_{j-s/2}`` (even s)
    or ``2^{s-1} (n+d/2-s+1)_{s-1} P^{-1,n-s+1}_{j-(s-1)/2}`` (odd s, with the
    value ``Y^{n-2j}`` at ``j = floor(s/2)``); only for ``j >= floor(s/2)``.
    """
    n, j, ell = idx
    s = p.s
    q = q_basis(p, idx, d)
    m = n - 2 * j
    trace_err = 0.0
    lap = q
    for k in range(p.nbnd):
        tr = lap.boundary_trace()
        for key, v in tr.items():
            target = 1.0 if (key == (m, ell) and k == j) else 0.0
            trace_err = max(trace_err, abs(v - target))
        if k == j and (m, ell) not in tr:
            trace_err = max(trace_err, 1.0)
        lap = lap.laplacian()
    out = {"traces": trace_err}
    half = s // 2
    if j >= half:
        top = _lap_power(q, half)
        h = n + d / 2
        if s % 2 == 0:
            ref = 2.0**s * pochhammer(h - s, s) * ball_basis(0, BasisIndex(n - s, j - half, ell), d)
        elif j == half:
            ref = BallPoly.solid_harmonic(d, m, ell)
        else:
            ref = 2.0 ** (s - 1) * pochhammer(h - s + 1, s - 1) * ball_basis(-1, BasisIndex(n - s + 1, j - half, ell), d)
        scale = max(1.0, top.max_abs_coeff(), ref.max_abs_coeff())
        out["top"] = (top - ref).max_abs_coeff() / scale
    return out


def gram_matrix(p: SobolevParams, indices: Sequence[BasisIndex], d: int) -> np.ndarray:
    """Gram matrix of ``Q^{-s}`` over ``indices`` under ``<., .>_{-s}``."""
    qs = [q_basis(p, idx, d) for idx in indices]
    g = np.zeros((len(qs), len(qs)))
    for a in range(len(qs)):
        for b in range(a, len(qs)):
            ia, ib = indices[a], indices[b]
            if (ia.n - 2 * ia.j, ia.ell) != (ib.n - 2 * ib.j, ib.ell):
                continue
            g[a, b] = g[b, a] = sobolev_inner(qs[a], qs[b], p)
    return g
