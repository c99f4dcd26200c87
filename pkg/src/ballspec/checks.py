"""Identity, orthogonality and quadrature suites shared by the CLI and the test-suite.

Each suite returns a list of :class:`CheckResult`; a check passes when its
residual is at most its tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np
from numpy.polynomial import legendre as L

from .ballbasis import (
    BasisIndex,
    ball_basis,
    ball_norm,
    basis_indices_upto,
    check_DiffV,
    check_LaplaceP,
    check_PN2P,
)
from .ballfun import BallPoly, inner_L2, radial_pow_one_minus_u
from .harmonics import harmonic_dim
from .jacobi import (
    gauss_jacobi_rule,
    gjacobi_coeffs,
    gjacobi_derivative,
    gjacobi_eval,
    gjacobi_value_at_one,
    pochhammer,
)
from .quadrature import build_grid, discrete_inner
from .sobolevbasis import (
    SobolevParams,
    _lap_power,
    check_boundary_projection,
    check_factorization,
    delta_y_trace,
    gram_matrix,
    q_structure_report,
    lift_eval,
    q_basis,
    q_norm,
)
from .solvers import random_ballpoly
from .transforms import check_commutation_mu, check_commutation_sobolev


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} residual={self.residual:.3e} tol={self.tol:.0e}"


def _worst(name: str, values: Iterable[float], tol: float) -> CheckResult:
    return CheckResult(name, max(values, default=0.0), tol)


# generalized Jacobi identities


def check_DiffP(alpha, beta, j: int, rng=0) -> float:
    """Relative residual of ``d/dt P-hat_j = P-hat_{j-1}^{(alpha+1,beta+1)} / 2`` against exact differentiation."""
    t = np.random.default_rng(rng).uniform(-1, 1, 20)
    c = gjacobi_coeffs(Fraction(alpha), Fraction(beta), j)
    # d/dt sum c_k v^k with v = (t-1)/2
    dc = [Fraction(k, 2) * c[k] for k in range(1, len(c))]
    v = (t - 1.0) / 2.0
    ref = np.array([float(sum(ck * Fraction(float(vv)) ** k for k, ck in enumerate(dc))) for vv in v]) if dc else np.zeros_like(t)
    got = gjacobi_derivative((alpha, beta), j, t)
    return float(np.max(np.abs(got - ref))) / max(1.0, float(np.max(np.abs(ref))))


def check_JacPN(s: int, beta, j: int, rng=0) -> float:
    """Residual of ``P-hat^{(-s,beta)}_j = ((t-1)/2)^s P-hat^{(s,beta)}_{j-s} / (j-s+1)_s``."""
    t = np.random.default_rng(rng).uniform(-1, 1, 20)
    lhs = gjacobi_eval((-s, beta), j, t)
    rhs = ((t - 1.0) / 2.0) ** s * gjacobi_eval((s, beta), j - s, t) / pochhammer(j - s + 1, s)
    return float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(rhs))))


def check_BndP(alpha, beta, j: int) -> float:
    """``P-hat_j(1)`` from the closed form versus direct evaluation."""
    a = gjacobi_value_at_one((alpha, beta), j)
    b = gjacobi_eval((alpha, beta), j, 1.0)
    return abs(a - b) / max(1.0, abs(b))


def jacobi_suite(rng=0) -> list[CheckResult]:
    out = []
    cases = [(a, b, j) for a in (-3, -2, -1, 0, 0.5, 2) for b in (0, 0.5, 1, 3) for j in range(0, 9)]
    out.append(_worst("jacobi-derivative", (check_DiffP(a, b, j, rng) for a, b, j in cases), 1e-12))
    jac = [(s, b, j) for s in (1, 2, 3) for b in (0, 0.5, 1, 2.5) for j in range(s, s + 8)]
    out.append(_worst("jacobi-negative-factorization", (check_JacPN(s, b, j, rng) for s, b, j in jac), 1e-11))
    out.append(_worst("jacobi-value-at-one", (check_BndP(a, b, j) for a, b, j in cases), 1e-12))
    return out


# ball basis identities


def ballbasis_suite(d: int, nmax: int = 10, rng=0) -> list[CheckResult]:
    out = []
    pn2p = []
    laplace = []
    for s in (1, 2, 3):
        for idx in basis_indices_upto(d, nmax):
            if idx.ell != 1:
                continue
            if s <= idx.j:
                pn2p.append(check_PN2P(s, idx, d, rng))
            for k in range(0, s + 1):
                if idx.j >= k:
                    rep = check_LaplaceP(s, k, idx, d)
                    laplace.append(0.0 if rep["passed"] else max(rep["relative_remainder"], 1.0))
    out.append(_worst("negative-mu-factorization", pn2p, 1e-10))
    out.append(_worst("laplacian-power", laplace, 1e-10))
    diffv = []
    alphas = [(2, 0), (3, 0), (2, 1), (4, 2), (3, 3)] if d == 2 else [(2, 0, 0), (1, 2, 1), (3, 0, 2), (2, 2, 2)]
    for mu in (0, 0.5, 1, 2):
        for alpha in alphas:
            for i in range(d):
                beta = tuple(1 if k == i else 0 for k in range(d))
                diffv.append(check_DiffV(mu, alpha, beta, rng))
            diffv.append(check_DiffV(mu, alpha, alpha[:1] + (0,) * (d - 1), rng))
    out.append(_worst("monic-derivative", diffv, 1e-12))
    return out


# Sobolev identities


def check_DeltaY(d: int, n: int, j: int, k: int) -> float:
    """``Lap^k[(1-|x|^2)^j Y]|_S`` against the closed-form scalar."""
    f = BallPoly.solid_harmonic(d, n, 1).mul_radial(radial_pow_one_minus_u(j))
    tr = _lap_power(f, k).boundary_trace().get((n, 1), 0.0)
    ref = delta_y_trace(d, n, j, k)
    return abs(tr - ref) / max(1.0, abs(ref))


def check_Ynj(d: int, n: int, j: int) -> float:
    """``Lap Y^{n,j} = Y^{n,j-1}`` and ``Lap^k Y^{n,j}|_S = delta_{kj}``."""
    y = lift_eval(d, n, j, 1)
    res = (y.laplacian() - lift_eval(d, n, j - 1, 1)).max_abs_coeff() / max(1.0, y.max_abs_coeff())
    lap = y
    for k in range(j + 2):
        tr = lap.boundary_trace().get((n, 1), 0.0)
        res = max(res, abs(tr - (1.0 if k == j else 0.0)))
        lap = lap.laplacian()
    return res


def sobolev_suite(d: int, s: int, nmax: int = 10, rng=0) -> list[CheckResult]:
    p = SobolevParams.default(s, d)
    out = []
    out.append(_worst("weighted-trace", (check_DeltaY(d, n, j, k) for n in range(5) for j in range(5) for k in range(5)), 1e-10))
    out.append(_worst("harmonic-lift", (check_Ynj(d, n, j) for n in range(6) for j in range(5)), 1e-10))
    traces, tops = [], []
    for idx in basis_indices_upto(d, nmax):
        rep = q_structure_report(p, idx, d)
        scale = max(1.0, q_basis(p, idx, d).max_abs_coeff())
        traces.append(rep["traces"] / scale)
        if "top" in rep:
            tops.append(rep["top"])
    out.append(_worst(f"Q-traces(s={s})", traces, 1e-10))
    out.append(_worst(f"Q-top(s={s})", tops, 1e-10))
    gen = np.random.default_rng(rng)
    bnd = []
    for trial in range(3):
        f = random_ballpoly(d, min(nmax, 12), gen)
        scale = max(1.0, f.max_abs_coeff())
        for n in range(2 * s, min(nmax, 12) + 1, 2):
            for k in range(p.nbnd):
                bnd.append(check_boundary_projection(p, n, k, f) / scale)
    out.append(_worst(f"boundary-projection(s={s})", bnd, 1e-9))
    fac = []
    for n in range(0, nmax + 1):
        g = random_ballpoly(d, 4, gen)
        fac.append(check_factorization(s, n, g))
    out.append(_worst(f"proj-factorization(s={s})", fac, 1e-9))
    comm = {}
    for trial in range(2):
        f = random_ballpoly(d, 9, gen)
        for n in range(s, min(nmax, 8) + 1):
            for key, v in check_commutation_sobolev(f, p, n, gen).items():
                comm.setdefault(key, []).append(v)
    out.append(_worst(f"lap-commutation(s={s})", comm.get("laplacian", []), 1e-8))
    if "gradient" in comm:
        out.append(_worst(f"grad-commutation(s={s})", comm["gradient"], 1e-8))
    return out


def commutation_mu_suite(d: int, rng=0) -> list[CheckResult]:
    gen = np.random.default_rng(rng)
    res = []
    for mu in (0, 1, 2):
        f = random_ballpoly(d, 8, gen)
        for n in (3, 5):
            for i in range(1, d + 1):
                res.append(check_commutation_mu(f, mu, n, i, gen))
    return [_worst("partial-commutation-mu", res, 1e-9)]


# orthogonality


def _gram_residual(gram: np.ndarray, h: np.ndarray) -> float:
    norm = np.sqrt(np.outer(h, h))
    return float(np.max(np.abs(gram - np.diag(h)) / norm))


def classical_gram(d: int, mu: float, nmax: int = 10) -> float:
    idx = basis_indices_upto(d, nmax)
    basis = [ball_basis(mu, i, d) for i in idx]
    g = np.zeros((len(idx), len(idx)))
    for a in range(len(idx)):
        for b in range(a, len(idx)):
            if (idx[a].n - 2 * idx[a].j, idx[a].ell) != (idx[b].n - 2 * idx[b].j, idx[b].ell):
                continue
            g[a, b] = g[b, a] = inner_L2(basis[a], basis[b], mu)
    h = np.array([ball_norm(mu, i.n, i.j, d) for i in idx])
    return _gram_residual(g, h)


def sobolev_gram(d: int, s: int, nmax: int = 10) -> float:
    p = SobolevParams.default(s, d)
    idx = basis_indices_upto(d, nmax)
    h = np.array([q_norm(p, i.n, i.j, d) for i in idx])
    return _gram_residual(gram_matrix(p, idx, d), h)


def gram_suite(d: int, nmax: int = 10, mus=(0, 1, 2), ss=(1, 2, 3, 4)) -> list[CheckResult]:
    out = [CheckResult(f"gram-classical(mu={mu},d={d})", classical_gram(d, mu, nmax), 1e-8) for mu in mus]
    out += [CheckResult(f"gram-sobolev(s={s},d={d})", sobolev_gram(d, s, nmax), 1e-8) for s in ss]
    return out


# quadrature


def jacobi_moment(k: int, alpha: float, beta: float) -> float:
    """``int_{-1}^{1} (1+t)^k (1-t)^alpha (1+t)^beta dt`` in closed form."""
    a, b = alpha + 1.0, beta + k + 1.0
    return 2.0 ** (alpha + beta + k + 1) * math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def gauss_jacobi_moment_error(n: int, alpha: float, beta: float) -> float:
    """Worst relative error of the ``n+1``-point rule on ``(1+t)^k``, ``k <= 2n+1``."""
    rule = gauss_jacobi_rule(n, (alpha, beta))
    worst = 0.0
    for k in range(2 * n + 2):
        approx = float(np.dot(rule.weights, (1.0 + rule.nodes) ** k))
        exact = jacobi_moment(k, alpha, beta)
        worst = max(worst, abs(approx - exact) / exact)
    return worst


def quadrature_suite(nmax_rule: int = 64, nmax_grid: int = 12) -> list[CheckResult]:
    params = [(0.0, 0.0), (0.0, 0.5), (0.0, -0.5), (1.0, 0.5), (2.0, 0.0), (0.5, 2.0), (-0.5, -0.5)]
    ns = sorted({0, 1, 2, 3, 5, 8, 13, 21, 32, 48, nmax_rule})
    out = [_worst("gauss-jacobi-moments", (gauss_jacobi_moment_error(n, a, b) for n in ns for a, b in params), 1e-12)]
    ones, norms = [], []
    one: Callable = lambda x: np.ones(len(x))
    for d in (2, 3):
        for n in range(nmax_grid + 1):
            q = build_grid(d, n)
            ones.append(abs(discrete_inner(q, one, one) - 1.0))
            for idx in basis_indices_upto(d, n):
                if idx.ell != 1:
                    continue
                p = ball_basis(0, idx, d)
                h = ball_norm(0, idx.n, idx.j, d)
                norms.append(abs(discrete_inner(q, p, p) - h) / h)
    out.append(_worst("grid-constant", ones, 1e-12))
    out.append(_worst("grid-norms", norms, 1e-12))
    return out


def harmonic_suite(d: int, nmax: int = 10) -> list[CheckResult]:
    """Discrete orthonormality of the spherical harmonics and harmonicity of solid ones."""
    from .harmonics import solid_table

    q = build_grid(d, nmax)
    tab = np.vstack(solid_table(d, nmax, q.xi))
    gram = (tab * q.wa) @ tab.T
    orth = float(np.max(np.abs(gram - np.eye(len(gram)))))
    lap = max(
        (BallPoly.solid_harmonic(d, m, ell).laplacian().max_abs_coeff() for m in range(nmax + 1) for ell in range(1, harmonic_dim(d, m) + 1)),
        default=0.0,
    )
    return [CheckResult("harmonic-orthonormality", orth, 1e-12), CheckResult("harmonicity", lap, 1e-12)]


def run_all(d: int, s: int, nmax: int = 10, rng=0) -> list[CheckResult]:
    """Every suite for one dimension and Sobolev order (used by ``ballspec check``)."""
    out = jacobi_suite(rng)
    out += harmonic_suite(d, nmax)
    out += ballbasis_suite(d, nmax, rng)
    out += sobolev_suite(d, s, nmax, rng)
    out += commutation_mu_suite(d, rng)
    out += gram_suite(d, nmax, ss=(s,))
    out += quadrature_suite(nmax_rule=min(64, 4 * nmax + 24), nmax_grid=min(nmax, 12))
    return out
