"""Spectral-Galerkin solvers for Helmholtz and clamped biharmonic problems on the ball.

Helmholtz: ``-Lap u + lam u = f`` in B, ``d_n u + eta u = g`` on S, in the
P^{-1} basis.  With normalized measures the weak form reads
``<grad u, grad v> + lam <u, v> + d eta <u, v>_S = <f, v> + d <g, v>_S``.

Biharmonic: ``Lap^2 u - lam1 Lap u + lam0 u = f`` with ``u = d_n u = 0``, in the
basis ``P^{-2,k}_j`` (``j >= 2``) spanning ``(1-|x|^2)^2 Pi_{n-4}``.

Both systems decouple into one block per harmonic index ``(m, ell)``; the
block matrices depend only on ``m``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .ballbasis import BasisIndex, ball_basis, radial_profile
from .ballfun import BallPoly, inner_grad, inner_L2, radial_at_one, radial_eval
from .harmonics import harmonic_dim, solid_table
from .quadrature import BallQuadrature, build_grid, error_metrics
from .sobolevbasis import SobolevParams, q_norm
from .transforms import SpectralCoeffs


class NotSPDError(np.linalg.LinAlgError):
    """A block that should be symmetric positive definite is not."""


@dataclass(frozen=True)
class HelmholtzProblem:
    d: int
    lam: float
    eta: float
    f: Callable
    g: Callable
    exact: Callable | None = None
    name: str = "helmholtz"

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"unsupported dimension d={self.d}")
        if self.lam < 0 or self.eta < 0 or self.lam + self.eta <= 0:
            raise ValueError("need lam >= 0, eta >= 0 and lam + eta > 0")


@dataclass(frozen=True)
class BiharmonicProblem:
    d: int
    lambda1: float
    lambda0: float
    f: Callable
    exact: Callable | None = None
    name: str = "biharmonic"

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"unsupported dimension d={self.d}")
        if self.lambda1 < 0 or self.lambda0 < 0:
            raise ValueError("need lambda1, lambda0 >= 0")


@dataclass(frozen=True)
class Block:
    m: int
    ell: int
    degrees: tuple[int, ...]
    js: tuple[int, ...]
    matrix: np.ndarray
    rhs: np.ndarray


@dataclass(frozen=True)
class GalerkinSystem:
    kind: str
    d: int
    n: int
    blocks: tuple[Block, ...]


# radial transform of callables


def _radial_moments(q: BallQuadrature, f: Callable, mmax: int) -> list[np.ndarray]:
    """Angular coefficients of ``f`` at each radial node: entry m is ``(a_m, n_radial)``."""
    vals = np.asarray(f(q.points), dtype=float).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise ValueError("right-hand side is not finite on the grid")
    v = vals.reshape(len(q.rho), len(q.wa))
    tab = solid_table(q.d, mmax, q.xi)
    return [(t * q.wa) @ v.T for t in tab]


def _sphere_moments(q: BallQuadrature, g: Callable, mmax: int) -> list[np.ndarray]:
    vals = np.asarray(g(q.xi), dtype=float).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise ValueError("boundary data is not finite on the grid")
    tab = solid_table(q.d, mmax, q.xi)
    return [t @ (q.wa * vals) for t in tab]


def _load(q: BallQuadrature, ang: np.ndarray, mu: float, k: int, j: int, m: int) -> float:
    """``<f, P^{mu,k}_j Y^m>`` from the per-radius angular coefficients ``ang``."""
    u = q.rho**2
    r = radial_eval(radial_profile(mu, k, j, q.d), u) * q.rho**m
    return float(np.dot(q.wr, ang * r))


# Helmholtz


def helmholtz_mass(d: int, m: int, jmax: int) -> np.ndarray:
    """Gram matrix ``<P^{-1,m+2j}_j, P^{-1,m+2i}_i>`` for ``i, j <= jmax``.

    Diagonal ``d/(2k+d)`` plus ``d/(2k+d-4)`` when ``j >= 1``; the only other
    entries couple ``j`` and ``j-1`` with value ``-d/(2(k-2)+d)``.
    """
    a = np.zeros((jmax + 1, jmax + 1))
    for j in range(jmax + 1):
        k = m + 2 * j
        a[j, j] = d / (2 * k + d) + (d / (2 * k + d - 4) if j >= 1 else 0.0)
        if j >= 1:
            a[j, j - 1] = a[j - 1, j] = -d / (2 * (k - 2) + d)
    return a


def helmholtz_stiffness(d: int, m: int, jmax: int, eta: float) -> np.ndarray:
    """Diagonal of ``<grad P, grad P> + d eta <P, P>_S`` (the ``h^{-1}`` norms with ``lambda_0 = d eta``)."""
    out = np.empty(jmax + 1)
    for j in range(jmax + 1):
        k = m + 2 * j
        out[j] = d * k + d * eta if j == 0 else 2.0 * d * (k + d / 2 - 1)
    return out


def assemble_helmholtz(p: HelmholtzProblem, n: int, grid_n: int | None = None) -> GalerkinSystem:
    if n < 0:
        raise ValueError("n must be nonnegative")
    grid_n = n + 16 if grid_n is None else grid_n
    if grid_n < n:
        raise ValueError("quadrature grid coarser than the discretization")
    d = p.d
    q = build_grid(d, grid_n)
    ang = _radial_moments(q, p.f, n)
    bnd = _sphere_moments(q, p.g, n)
    blocks = []
    for m in range(n + 1):
        jmax = (n - m) // 2
        mat = np.diag(helmholtz_stiffness(d, m, jmax, p.eta)) + p.lam * helmholtz_mass(d, m, jmax)
        for ell in range(1, harmonic_dim(d, m) + 1):
            rhs = np.empty(jmax + 1)
            for j in range(jmax + 1):
                k = m + 2 * j
                tr = radial_at_one(radial_profile(-1, k, j, d))
                rhs[j] = _load(q, ang[m][ell - 1], -1, k, j, m) + d * bnd[m][ell - 1] * tr
            blocks.append(Block(m, ell, tuple(m + 2 * j for j in range(jmax + 1)), tuple(range(jmax + 1)), mat, rhs))
    return GalerkinSystem("helmholtz", d, n, tuple(blocks))


def solve_tridiagonal_spd(diag: np.ndarray, off: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """LDL^T solve of a symmetric tridiagonal system (no pivoting)."""
    nn = len(diag)
    dd = np.empty(nn)
    lo = np.empty(max(nn - 1, 0))
    y = np.empty(nn)
    for i in range(nn):
        dd[i] = diag[i] - (lo[i - 1] ** 2 * dd[i - 1] if i else 0.0)
        if not dd[i] > 0:
            raise NotSPDError(f"nonpositive pivot {dd[i]!r} at row {i}")
        if i < nn - 1:
            lo[i] = off[i] / dd[i]
        y[i] = rhs[i] - (lo[i - 1] * y[i - 1] if i else 0.0)
    x = np.empty(nn)
    for i in range(nn - 1, -1, -1):
        x[i] = y[i] / dd[i] - (lo[i] * x[i + 1] if i < nn - 1 else 0.0)
    return x


def _to_ballpoly(system: GalerkinSystem, coeffs: dict, mu: int) -> BallPoly:
    terms = {}
    for b in system.blocks:
        c = coeffs[(b.m, b.ell)]
        r = np.zeros(max(len(b.js) + 2, 1))
        for cj, j, k in zip(c, b.js, b.degrees):
            prof = radial_profile(mu, k, j, system.d)
            r[: len(prof)] += cj * prof
        terms[(b.m, b.ell)] = r
    return BallPoly(system.d, terms)


def _coeff_table(system: GalerkinSystem, coeffs: dict) -> dict[BasisIndex, float]:
    return {
        BasisIndex(k, j, b.ell): float(cj)
        for b in system.blocks
        for cj, j, k in zip(coeffs[(b.m, b.ell)], b.js, b.degrees)
    }


def solve_helmholtz_system(system: GalerkinSystem) -> dict:
    out = {}
    for b in system.blocks:
        band = np.diag(b.matrix, 1)
        out[(b.m, b.ell)] = solve_tridiagonal_spd(np.diag(b.matrix).copy(), band, b.rhs)
    return out


def solve_helmholtz(p: HelmholtzProblem, n: int, grid_n: int | None = None) -> BallPoly:
    """Galerkin solution ``u_n`` in radial-harmonic form."""
    system = assemble_helmholtz(p, n, grid_n)
    return _to_ballpoly(system, solve_helmholtz_system(system), -1)


def helmholtz_coeffs(p: HelmholtzProblem, n: int, grid_n: int | None = None) -> SpectralCoeffs:
    """Solution coefficients in the ``P^{-1}`` basis (Sobolev family ``s = 1``)."""
    system = assemble_helmholtz(p, n, grid_n)
    lam0 = p.d * p.eta if p.eta > 0 else 1.0
    return SpectralCoeffs("sobolev", (1, lam0), p.d, _coeff_table(system, solve_helmholtz_system(system)))


# biharmonic


def _biharmonic_block(d: int, m: int, n: int, lambda1: float, lambda0: float) -> np.ndarray:
    js = list(range(2, (n - m) // 2 + 1))
    basis = [ball_basis(-2, BasisIndex(m + 2 * j, j, 1), d) for j in js]
    p2 = SobolevParams.default(2, d)
    nb = len(js)
    a = np.zeros((nb, nb))
    for r in range(nb):
        a[r, r] += q_norm(p2, m + 2 * js[r], js[r], d)
        for c in range(r, nb):
            v = lambda1 * inner_grad(basis[r], basis[c]) + lambda0 * inner_L2(basis[r], basis[c])
            a[r, c] += v
            if c != r:
                a[c, r] += v
    scale = np.max(np.abs(a)) if nb else 1.0
    for r in range(nb):
        for c in range(nb):
            if abs(r - c) > 2 and abs(a[r, c]) > 1e-12 * scale:
                raise AssertionError(f"biharmonic block m={m} has bandwidth > 2")
            if abs(r - c) > 2:
                a[r, c] = 0.0
    return a


def assemble_biharmonic(p: BiharmonicProblem, n: int, grid_n: int | None = None) -> GalerkinSystem:
    if n < 4:
        raise ValueError("biharmonic discretization needs n >= 4")
    grid_n = n + 16 if grid_n is None else grid_n
    if grid_n < n:
        raise ValueError("quadrature grid coarser than the discretization")
    d = p.d
    q = build_grid(d, grid_n)
    ang = _radial_moments(q, p.f, n)
    blocks = []
    for m in range(n - 3):
        mat = _biharmonic_block(d, m, n, p.lambda1, p.lambda0)
        js = tuple(range(2, (n - m) // 2 + 1))
        degs = tuple(m + 2 * j for j in js)
        for ell in range(1, harmonic_dim(d, m) + 1):
            rhs = np.array([_load(q, ang[m][ell - 1], -2, k, j, m) for j, k in zip(js, degs)])
            blocks.append(Block(m, ell, degs, js, mat, rhs))
    return GalerkinSystem("biharmonic", d, n, tuple(blocks))


def solve_biharmonic_system(system: GalerkinSystem) -> dict:
    out = {}
    for b in system.blocks:
        nb = len(b.js)
        ab = np.zeros((3, nb))
        for off in range(3):
            ab[2 - off, off:] = np.diag(b.matrix, off)
        try:
            out[(b.m, b.ell)] = scipy.linalg.solveh_banded(ab, b.rhs)
        except np.linalg.LinAlgError as exc:
            raise NotSPDError(f"biharmonic block m={b.m} is not positive definite") from exc
    return out


def solve_biharmonic(p: BiharmonicProblem, n: int, grid_n: int | None = None) -> BallPoly:
    """Galerkin solution ``u_n`` in ``(1-|x|^2)^2 Pi_{n-4}``."""
    system = assemble_biharmonic(p, n, grid_n)
    return _to_ballpoly(system, solve_biharmonic_system(system), -2)


def biharmonic_coeffs(p: BiharmonicProblem, n: int, grid_n: int | None = None) -> SpectralCoeffs:
    system = assemble_biharmonic(p, n, grid_n)
    return SpectralCoeffs("sobolev", (2, float(p.d)), p.d, _coeff_table(system, solve_biharmonic_system(system)))


def solve(problem, n: int, grid_n: int | None = None) -> BallPoly:
    if isinstance(problem, HelmholtzProblem):
        return solve_helmholtz(problem, n, grid_n)
    if isinstance(problem, BiharmonicProblem):
        return solve_biharmonic(problem, n, grid_n)
    raise TypeError(f"unknown problem type {type(problem).__name__}")


# convergence studies


@dataclass(frozen=True)
class ConvergenceResult:
    rows: tuple[tuple[int, float, float], ...]
    fitted_rate: float
    floor: float


def _threads() -> int:
    env = os.environ.get("BALLSPEC_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def fitted_rate(ns: Sequence[int], errs: Sequence[float], floor: float = 1e-12) -> float:
    """Least-squares slope of ``log10 e`` vs ``n`` over the leading entries above ``floor``."""
    pre = []
    for n, e in zip(ns, errs):
        if e <= floor:
            break
        pre.append((n, e))
    if len(pre) < 2:
        return float("nan")
    x = np.array([a for a, _ in pre], dtype=float)
    y = np.log10([b for _, b in pre])
    return float(np.polyfit(x, y, 1)[0])


def convergence_study(problem, n_list: Sequence[int], grid_n: int | None = None, floor: float = 1e-12) -> ConvergenceResult:
    """Errors ``(n, e_M, e_L2)`` of the Galerkin solutions against ``problem.exact``."""
    if problem.exact is None:
        raise ValueError("convergence study needs an exact solution")
    n_list = list(n_list)
    grid_n = max(n_list) if grid_n is None else grid_n
    if grid_n < max(n_list):
        raise ValueError("measuring grid must satisfy grid_n >= max(n_list)")
    q = build_grid(problem.d, grid_n)
    exact_vals = np.asarray(problem.exact(q.points), dtype=float)

    def one(n: int):
        un = solve(problem, n)
        diff = un(q.points) - exact_vals
        e_m, e_l2 = error_metrics(q, lambda _x, v=diff: v)
        return n, e_m, e_l2

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = tuple(pool.map(one, n_list))
    return ConvergenceResult(rows, fitted_rate([r[0] for r in rows], [r[2] for r in rows], floor), floor)


# built-in examples


def _exam1a_exact(x):
    x = np.asarray(x, dtype=float)
    return 3.0 * x[..., 0] - (x[..., 0] ** 2 + x[..., 1] ** 2) * x[..., 0]


def exam1a() -> HelmholtzProblem:
    """d = 2, lam = 1, eta = 0, exact ``u = x1 (3 - x1^2 - x2^2)``, ``f = x1 (11 - x1^2 - x2^2)``, ``g = 0``."""

    def f(x):
        x = np.asarray(x, dtype=float)
        return x[..., 0] * (11.0 - x[..., 0] ** 2 - x[..., 1] ** 2)

    def g(x):
        return np.zeros(np.asarray(x).shape[:-1])

    return HelmholtzProblem(2, 1.0, 0.0, f, g, _exam1a_exact, "exam1a")


def _exam1b_parts(x):
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    r2 = x1**2 + x2**2
    num = 4.0 - r2
    den = 4.0 + r2 - 4.0 * x1
    u = num / den
    g1 = (-2.0 * x1 * den - num * (2.0 * x1 - 4.0)) / den**2
    g2 = (-2.0 * x2 * den - num * 2.0 * x2) / den**2
    return u, g1, g2


def exam1b_exact(x):
    return _exam1b_parts(x)[0]


def exam1b() -> HelmholtzProblem:
    """d = 3, lam = eta = 1, exact ``u = (4 - x1^2 - x2^2) / (4 + x1^2 + x2^2 - 4 x1)``.

    ``u`` is harmonic, so ``f = u``; ``g = x . grad u + u`` on the sphere.
    """

    def g(x):
        x = np.asarray(x, dtype=float)
        u, g1, g2 = _exam1b_parts(x)
        return x[..., 0] * g1 + x[..., 1] * g2 + u

    return HelmholtzProblem(3, 1.0, 1.0, exam1b_exact, g, exam1b_exact, "exam1b")


def exam2_exact(x):
    x = np.asarray(x, dtype=float)
    return np.cos(2.0 * np.pi * np.einsum("...i,...i->...", x, x)) - 1.0


def exam2_rhs(x):
    """``Lap^2 u - Lap u + u`` for ``u = cos(2 pi |x|^2) - 1`` in d = 2."""
    x = np.asarray(x, dtype=float)
    r = np.einsum("...i,...i->...", x, x)
    a = 2.0 * np.pi
    c, s = np.cos(a * r), np.sin(a * r)
    return (
        64.0 * a**3 * r * s
        + 16.0 * a**4 * r**2 * c
        - 32.0 * a**2 * c
        + 4.0 * a**2 * r * c
        + 4.0 * a * s
        + c
        - 1.0
    )


def exam2() -> BiharmonicProblem:
    """d = 2, lam1 = lam0 = 1, exact ``u = cos(2 pi |x|^2) - 1``."""
    return BiharmonicProblem(2, 1.0, 1.0, exam2_rhs, exam2_exact, "exam2")


EXAMPLES = {"exam1a": exam1a, "exam1b": exam1b, "exam2": exam2}


def manufactured_helmholtz(d: int, degree: int, lam: float = 1.0, eta: float = 1.0, rng=0) -> HelmholtzProblem:
    """Random polynomial exact solution of the given degree with matching ``f`` and ``g``."""
    u = random_ballpoly(d, degree, rng)
    f = lam * u - u.laplacian()
    ndt, tr = u.normal_derivative_trace(), u.boundary_trace()
    gpoly = BallPoly(d, {k: [ndt[k] + eta * tr[k]] for k in tr})
    return HelmholtzProblem(d, lam, eta, f, gpoly, u, f"manufactured-{degree}")


def manufactured_biharmonic(d: int, degree: int, lambda1: float = 1.0, lambda0: float = 1.0, rng=0) -> BiharmonicProblem:
    """Random exact solution ``(1-|x|^2)^2 p`` with ``deg p = degree - 4``."""
    if degree < 4:
        raise ValueError("degree must be at least 4")
    from .ballfun import radial_pow_one_minus_u

    u = random_ballpoly(d, degree - 4, rng).mul_radial(radial_pow_one_minus_u(2))
    lap = u.laplacian()
    f = lap.laplacian() - lambda1 * lap + lambda0 * u
    return BiharmonicProblem(d, lambda1, lambda0, f, u, f"manufactured-{degree}")


def random_ballpoly(d: int, degree: int, rng=0) -> BallPoly:
    """BallPoly of exact total degree ``degree`` with standard normal coefficients."""
    rng = np.random.default_rng(rng)
    terms = {}
    for m in range(degree + 1):
        for ell in range(1, harmonic_dim(d, m) + 1):
            terms[(m, ell)] = rng.standard_normal((degree - m) // 2 + 1)
    return BallPoly(d, terms)
