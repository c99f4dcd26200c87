"""Ball bases ``P^{mu,n}_{j,ell}`` for real ``mu``, their norms, and the monic family.

``P^{mu,n}_{j,ell}(x) = (n-j+d/2)_j Phat^{(mu, n-2j+d/2-1)}_j(2|x|^2-1) Y^{n-2j}_ell(x)``.

Radial profiles are built in exact rational arithmetic (Legendre coefficients
in ``t = 2u - 1``) and rounded once, so every downstream identity check starts
from correctly rounded data.  For ``j0 = 0`` this normalization coincides with
the classical one ``(n-j+d/2)_j / (n-j+d/2+mu)_j P_j^{(mu,beta)}`` because
``j + mu + beta + 1 = n - j + d/2 + mu``.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .ballfun import BallPoly, radial_pow_one_minus_u
from .harmonics import harmonic_dim
from .jacobi import as_fraction, gjacobi_coeffs, jacobi_eval, pochhammer


class BasisIndex(NamedTuple):
    n: int
    j: int
    ell: int


def basis_indices(d: int, n: int) -> list[BasisIndex]:
    """Indices ``(n, j, ell)`` of the degree-``n`` orthogonal polynomials."""
    return [
        BasisIndex(n, j, ell)
        for j in range(n // 2 + 1)
        for ell in range(1, harmonic_dim(d, n - 2 * j) + 1)
    ]


def basis_indices_upto(d: int, nmax: int) -> list[BasisIndex]:
    return [idx for n in range(nmax + 1) for idx in basis_indices(d, n)]


def _check_index(idx: BasisIndex, d: int) -> None:
    n, j, ell = idx
    if n < 0 or not 0 <= j <= n / 2 or not 1 <= ell <= harmonic_dim(d, n - 2 * j):
        raise ValueError(f"invalid basis index {tuple(idx)} for d={d}")


def _leg_times_v(c: list[Fraction]) -> list[Fraction]:
    """Multiply Legendre series (in t) by ``v = (t - 1)/2`` exactly."""
    out = [Fraction(0)] * (len(c) + 1)
    for i, ci in enumerate(c):
        if ci == 0:
            continue
        out[i + 1] += ci * Fraction(i + 1, 2 * i + 1)
        if i > 0:
            out[i - 1] += ci * Fraction(i, 2 * i + 1)
    return [(a - b) / 2 for a, b in zip(out, c + [Fraction(0)])]


@lru_cache(maxsize=8192)
def radial_profile_exact(mu: Fraction, n: int, j: int, d: int) -> tuple[Fraction, ...]:
    """Exact Legendre coefficients (in ``t = 2u-1``) of the radial factor of ``P^{mu,n}_j``."""
    if j < 0 or j > n / 2:
        return ()
    beta = n - 2 * j + Fraction(d, 2) - 1
    coeffs = gjacobi_coeffs(mu, beta, j)
    acc = [coeffs[j]]
    for k in range(j - 1, -1, -1):
        acc = _leg_times_v(acc)
        acc[0] += coeffs[k]
    scale = pochhammer(n - j + Fraction(d, 2), j)
    return tuple(scale * a for a in acc)


def radial_profile(mu, n: int, j: int, d: int) -> np.ndarray:
    """Float Legendre coefficients of the radial factor of ``P^{mu,n}_{j,ell}``."""
    return np.array([float(c) for c in radial_profile_exact(as_fraction(mu), n, j, d)])


def ball_basis(mu, idx: BasisIndex, d: int) -> BallPoly:
    """``P^{mu,n}_{j,ell}`` as a :class:`BallPoly` (zero when ``j < 0`` or ``j > n/2``)."""
    n, j, ell = idx
    if j < 0 or j > n / 2:
        return BallPoly.zero(d)
    _check_index(BasisIndex(n, j, ell), d)
    return BallPoly(d, {(n - 2 * j, ell): radial_profile(mu, n, j, d)})


def ball_norm(mu: float, n: int, j: int, d: int) -> float:
    """Closed-form ``h^mu_{j,n} = <P^{mu,n}_{j,ell}, P^{mu,n}_{j,ell}>_mu``."""
    if mu <= -1:
        raise ValueError("ball_norm needs mu > -1")
    if not 0 <= j <= n / 2:
        raise ValueError("need 0 <= j <= n/2")
    mu_f, h = as_fraction(mu), Fraction(d, 2)
    num = pochhammer(mu_f + 1, j) * pochhammer(1 - n - h, j) * pochhammer(h, n)
    den = math.factorial(j) * pochhammer(1 - n - h - mu_f, j) * pochhammer(h + mu_f + 1, n)
    return float(num / den)


def baseP_radial_eval(mu, n: int, j: int, d: int, u):
    """Radial factor of the classical normalization, evaluated via the Jacobi sum.

    ``(n-j+d/2)_j / (n-j+d/2+mu)_j * P_j^{(mu, n-2j+d/2-1)}(2u-1)``; equals the
    radial factor of :func:`ball_basis` whenever ``mu > -1``.
    """
    beta = n - 2 * j + d / 2 - 1
    scale = pochhammer(n - j + d / 2, j) / pochhammer(n - j + d / 2 + mu, j)
    return scale * jacobi_eval((mu, beta), j, 2 * np.asarray(u, dtype=float) - 1)


def weighted_operator(f: BallPoly, mu: float) -> BallPoly:
    """``D_mu f = Lap f - (d + E)(2 mu + E) f`` with ``E`` the Euler operator.

    Orthogonal polynomials of degree ``n`` for ``(1-|x|^2)^mu`` are
    eigenfunctions with eigenvalue ``-(n+d)(n+2mu)``.
    """
    g = f.euler() + 2.0 * mu * f
    return f.laplacian() - (g.euler() + f.d * g)


def _random_points(d: int, count: int, rng) -> np.ndarray:
    rng = np.random.default_rng(rng)
    x = rng.normal(size=(count, d))
    x /= np.linalg.norm(x, axis=1)[:, None]
    return x * rng.uniform(0, 1, size=(count, 1)) ** (1.0 / d)


def _rel_residual(a: BallPoly, b: BallPoly, x: np.ndarray) -> float:
    va, vb = a(x), b(x)
    scale = max(1.0, float(np.max(np.abs(va))), float(np.max(np.abs(vb))))
    return float(np.max(np.abs(va - vb))) / scale


def pn2p_constant(s: int, n: int, j: int, d: int) -> Fraction:
    h = Fraction(d, 2)
    return pochhammer(1 - n - h, j) / (pochhammer(Fraction(-j), s) * pochhammer(1 - n - h + 2 * s, j - s))


def check_PN2P(s: int, idx: BasisIndex, d: int, rng=0) -> float:
    """Relative residual of ``P^{-s,n}_j = c (|x|^2-1)^s P^{s,n-2s}_{j-s}`` at 50 random points."""
    n, j, ell = idx
    if not 1 <= s <= j <= n / 2:
        raise ValueError("need 1 <= s <= j <= n/2")
    lhs = ball_basis(-s, idx, d)
    rhs = ball_basis(s, BasisIndex(n - 2 * s, j - s, ell), d)
    c = float(pn2p_constant(s, n, j, d)) * (-1) ** s
    rhs = c * rhs.mul_radial(radial_pow_one_minus_u(s))
    return _rel_residual(lhs, rhs, _random_points(d, 50, rng))


def laplace_p_j0(s: int, n: int, j: int, d: int) -> int:
    """Truncation index ``j0 = s + j - n - d/2 + 1`` when it lies in ``1..j``, else 0."""
    psi = Fraction(s + j - n + 1) - Fraction(d, 2)
    return int(psi) if psi.denominator == 1 and 1 <= psi <= j else 0


def check_LaplaceP(s: int, k: int, idx: BasisIndex, d: int, tol: float = 1e-10) -> dict:
    """Check ``Lap^k P^{-s,n}_j = 4^k (n+d/2-2k)_{2k} P^{2k-s,n-2k}_{j-k} + q Y``.

    Reports the remainder's numerical degree (radial, in ``u``), the bound
    ``j0 - k - 1``, and whether the remainder must vanish (``j + k >= s``).
    """
    n, j, ell = idx
    _check_index(idx, d)
    m = n - 2 * j
    f = ball_basis(-s, idx, d)
    for _ in range(k):
        f = f.laplacian()
    lead_c = 4.0**k * pochhammer(n + d / 2 - 2 * k, 2 * k)
    lead = lead_c * ball_basis(2 * k - s, BasisIndex(n - 2 * k, j - k, ell), d)
    rem = (f - lead).terms.get((m, ell), np.zeros(0))
    scale = max(f.max_abs_coeff(), lead.max_abs_coeff(), 1.0)
    big = np.nonzero(np.abs(rem) > tol * scale)[0]
    rem_degree = int(big[-1]) if len(big) else -1
    bound = laplace_p_j0(s, n, j, d) - k - 1
    must_vanish = j + k >= s
    allowed = -1 if must_vanish else max(bound, -1)
    passed = rem_degree <= allowed
    return {
        "remainder_degree": rem_degree,
        "degree_bound": bound,
        "remainder_must_vanish": must_vanish,
        "relative_remainder": float(np.max(np.abs(rem), initial=0.0)) / scale,
        "passed": bool(passed),
    }


# monic orthogonal polynomials V_alpha^mu

def _gamma_range(alpha: Sequence[int]):
    return itertools.product(*[range(a // 2 + 1) for a in alpha])


def monic_terms(mu, alpha: Sequence[int]) -> dict[tuple[int, ...], Fraction]:
    """Exact monomial expansion ``{exponent: coefficient}`` of ``V_alpha^mu``.

    Uses the truncated sum (``|gamma| <= mu + d/2 + |alpha| - 1``) when a
    denominator Pochhammer would vanish for an admissible ``gamma``.
    """
    alpha = tuple(int(a) for a in alpha)
    d = len(alpha)
    mu_f = as_fraction(mu)
    c = 1 - mu_f - Fraction(d, 2) - sum(alpha)
    gammas = list(_gamma_range(alpha))
    truncated = any(pochhammer(c, sum(g)) == 0 for g in gammas)
    limit = mu_f + Fraction(d, 2) + sum(alpha) - 1
    out: dict[tuple[int, ...], Fraction] = {}
    for g in gammas:
        size = sum(g)
        if truncated and size > limit:
            continue
        num = Fraction(1)
        gfact = 1
        for a, gi in zip(alpha, g):
            num *= pochhammer(Fraction(-a), 2 * gi)
            gfact *= math.factorial(gi)
        coef = num / (pochhammer(c, size) * gfact) / 4**size
        if coef != 0:
            out[tuple(a - 2 * gi for a, gi in zip(alpha, g))] = coef
    return out


def _eval_monomials(terms: dict[tuple[int, ...], Fraction], x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, x.shape[-1])
    out = np.zeros(len(pts))
    for e, c in terms.items():
        out += float(c) * np.prod(pts ** np.array(e), axis=1)
    return out.reshape(x.shape[:-1])


def monic_eval(mu, alpha: Sequence[int], x):
    """``V_alpha^mu(x)``; ``x`` may hold several points (last axis = d)."""
    if len(alpha) != np.shape(x)[-1]:
        raise ValueError("multi-index length must equal the point dimension")
    val = _eval_monomials(monic_terms(mu, alpha), x)
    return float(val) if np.ndim(val) == 0 else val


def _differentiate(terms: dict, beta: Sequence[int]) -> dict:
    out = {}
    for e, c in terms.items():
        if any(b > a for a, b in zip(e, beta)):
            continue
        factor = 1
        for a, b in zip(e, beta):
            factor *= math.perm(a, b)
        out[tuple(a - b for a, b in zip(e, beta))] = c * factor
    return out


def check_DiffV(mu, alpha: Sequence[int], beta: Sequence[int], rng=0) -> float:
    """Residual of ``d^beta V_alpha^mu = (-1)^|beta| (-alpha)_beta V^{mu+|beta|}_{alpha-beta}``."""
    d = len(alpha)
    lim = sum(a // 2 for a in alpha)
    crit = as_fraction(mu) + Fraction(d, 2) + sum(alpha)
    if crit.denominator == 1 and 1 <= crit <= lim:
        raise ValueError("precondition mu + d/2 + |alpha| not in {1..|alpha/2|} violated")
    lhs = _differentiate(monic_terms(mu, alpha), beta)
    if any(b > a for a, b in zip(alpha, beta)):
        rhs: dict = {}
    else:
        factor = 1
        for a, b in zip(alpha, beta):
            factor *= math.perm(a, b)
        reduced = tuple(a - b for a, b in zip(alpha, beta))
        rhs = {e: c * factor for e, c in monic_terms(as_fraction(mu) + sum(beta), reduced).items()}
    x = _random_points(d, 50, rng)
    diff = {e: lhs.get(e, 0) - rhs.get(e, 0) for e in set(lhs) | set(rhs)}
    scale = max([1.0] + [abs(float(c)) for c in lhs.values()])
    return float(np.max(np.abs(_eval_monomials(diff, x)))) / scale


def classical_coefficients(f: BallPoly, mu: float, n: int) -> dict[BasisIndex, float]:
    """Exact coefficients ``<f, P^{mu,n}_{j,ell}>_mu / h^mu_{j,n}`` of the degree-``n`` part."""
    from .ballfun import radial_inner

    out = {}
    for key, q in f.terms.items():
        m, ell = key
        if m > n or (n - m) % 2:
            continue
        j = (n - m) // 2
        val = radial_inner(q, radial_profile(mu, n, j, f.d), m, mu, f.d) / ball_norm(mu, n, j, f.d)
        out[BasisIndex(n, j, ell)] = val
    return out


def classical_projection(f: BallPoly, mu: float, n: int) -> BallPoly:
    """``proj_n^mu f``: orthogonal projection onto degree-``n`` polynomials for ``(1-|x|^2)^mu``."""
    terms = {}
    for idx, c in classical_coefficients(f, mu, n).items():
        terms[(idx.n - 2 * idx.j, idx.ell)] = c * radial_profile(mu, idx.n, idx.j, f.d)
    return BallPoly(f.d, terms)
