"""Classical and generalized Jacobi polynomials and Gauss-Jacobi quadrature.

The classical polynomials :math:`P^{(\\alpha,\\beta)}_j` are evaluated from the
explicit sum in powers of ``(t-1)/2``.  The generalized polynomials
:math:`\\hat P^{(\\alpha,\\beta)}_j` truncate that sum at ``k = j0`` so that
they stay well defined (and nonzero) for negative integer parameters.

Explicit power sums cancel catastrophically for moderate degree, so the sums
are carried out in exact rational arithmetic on the binary value of ``t`` and
rounded once at the end.  Parameters are converted to :class:`fractions.Fraction`
(small rationals such as half integers are recovered exactly).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np


class JacobiParams(NamedTuple):
    alpha: float
    beta: float


class JacobiDegenerateError(ArithmeticError):
    """A denominator Pochhammer symbol in a retained term vanished."""


class QuadratureConvergenceError(RuntimeError):
    """Node finding for a Gauss-Jacobi rule failed."""


@dataclass(frozen=True)
class GaussJacobiRule:
    """Gauss rule for the weight ``(1-t)**alpha * (1+t)**beta`` on [-1, 1]."""

    alpha: float
    beta: float
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def degree_exactness(self) -> int:
        return 2 * len(self.nodes) - 1


def as_fraction(x) -> Fraction:
    """Exact rational for ``x``, snapping float noise on small rationals."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    f = Fraction(float(x))
    g = f.limit_denominator(1000)
    if abs(float(g - f)) < 1e-12:
        return g
    return f


def pochhammer(a, k: int):
    """Rising factorial ``(a)_k = a (a+1) ... (a+k-1)``.

    Works for floats and for :class:`~fractions.Fraction` arguments.  Returns an
    exact zero when ``a`` is a nonpositive integer with ``-a < k``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    out = Fraction(1) if isinstance(a, Fraction) else 1.0
    for i in range(k):
        out *= a + i
    return out


def _params(p) -> tuple[Fraction, Fraction]:
    alpha, beta = p
    return as_fraction(alpha), as_fraction(beta)


def _j0_exact(alpha: Fraction, beta: Fraction, j: int) -> int:
    v = -j - alpha - beta
    if v.denominator == 1 and 1 <= v <= j:
        return int(v)
    return 0


def gjacobi_j0(p, j: int) -> int:
    """Truncation index ``j0`` of the generalized Jacobi polynomial.

    Equals ``-j - alpha - beta`` when that number is an integer in ``1..j``
    (tested with tolerance 1e-9), otherwise 0.
    """
    alpha, beta = p
    v = -j - float(alpha) - float(beta)
    r = round(v)
    if abs(v - r) < 1e-9 and 1 <= r <= j:
        return int(r)
    return 0


@lru_cache(maxsize=4096)
def _classical_coeffs(alpha: Fraction, beta: Fraction, j: int) -> tuple[Fraction, ...]:
    ab1 = j + alpha + beta + 1
    return tuple(
        pochhammer(k + alpha + 1, j - k) * pochhammer(ab1, k)
        / (math.factorial(j - k) * math.factorial(k))
        for k in range(j + 1)
    )


@lru_cache(maxsize=4096)
def gjacobi_coeffs(alpha: Fraction, beta: Fraction, j: int) -> tuple[Fraction, ...]:
    """Exact coefficients of ``P-hat`` in powers of ``(t-1)/2`` (index k = 0..j)."""
    if j < 0:
        return ()
    j0 = _j0_exact(alpha, beta, j)
    out = []
    for k in range(j + 1):
        if k < j0:
            out.append(Fraction(0))
            continue
        den = pochhammer(j + alpha + beta + k + 1, j - k)
        if den == 0:
            raise JacobiDegenerateError(
                f"vanishing denominator for alpha={alpha}, beta={beta}, j={j}, k={k}"
            )
        num = pochhammer(k + alpha + 1, j - k)
        out.append(num / (den * math.factorial(j - k) * math.factorial(k)))
    return tuple(out)


def _eval_exact(coeffs: tuple[Fraction, ...], t) -> float | np.ndarray:
    """Evaluate ``sum c_k ((t-1)/2)**k`` exactly and round once."""
    if not coeffs:
        return np.zeros_like(t, dtype=float) if np.ndim(t) else 0.0
    den_lcm = 1
    for c in coeffs:
        den_lcm = den_lcm * c.denominator // math.gcd(den_lcm, c.denominator)
    ints = [c.numerator * (den_lcm // c.denominator) for c in coeffs]
    deg = len(ints) - 1

    def one(tv: float) -> float:
        v = (Fraction(float(tv)) - 1) / 2
        a, b = v.numerator, v.denominator
        acc = ints[deg]
        bpow = 1
        for k in range(deg - 1, -1, -1):
            bpow *= b
            acc = acc * a + ints[k] * bpow
        return acc / (den_lcm * b**deg)

    if np.ndim(t) == 0:
        return one(t)
    arr = np.asarray(t, dtype=float)
    return np.array([one(v) for v in arr.ravel()]).reshape(arr.shape)


def jacobi_eval(p, j: int, t):
    """Classical Jacobi polynomial ``P_j^{(alpha,beta)}(t)``.

    Uses the explicit sum in powers of ``(t-1)/2``; ``t`` may be an array.
    """
    if j < 0:
        raise ValueError("degree must be nonnegative")
    alpha, beta = _params(p)
    return _eval_exact(_classical_coeffs(alpha, beta, j), t)


def gjacobi_eval(p, j: int, t):
    """Generalized Jacobi polynomial ``P-hat_j^{(alpha,beta)}(t)``.

    Zero for negative ``j``.  When ``j0 = 0`` this equals
    ``P_j^{(alpha,beta)}(t) / (j+alpha+beta+1)_j``.
    """
    alpha, beta = _params(p)
    return _eval_exact(gjacobi_coeffs(alpha, beta, j), t)


def gjacobi_value_at_one(p, j: int) -> float:
    """``P-hat_j(1) = (alpha+1)_j / (j! (j+alpha+beta+1)_j)`` if ``j0 = 0``, else 0."""
    alpha, beta = _params(p)
    if j < 0 or _j0_exact(alpha, beta, j) != 0:
        return 0.0
    val = pochhammer(alpha + 1, j) / (math.factorial(j) * pochhammer(j + alpha + beta + 1, j))
    return float(val)


def gjacobi_derivative(p, j: int, t):
    """Derivative in ``t``: ``(1/2) P-hat_{j-1}^{(alpha+1,beta+1)}(t)``."""
    alpha, beta = _params(p)
    if j <= 0:
        return np.zeros_like(t, dtype=float) if np.ndim(t) else 0.0
    return 0.5 * gjacobi_eval((alpha + 1, beta + 1), j - 1, t)


def jacobi_recurrence(p, j: int, t):
    """``P_j^{(alpha,beta)}(t)`` by the three-term recurrence (alpha, beta > -1)."""
    a, b = float(p[0]), float(p[1])
    t = np.asarray(t, dtype=float)
    p0 = np.ones_like(t)
    if j == 0:
        return p0
    p1 = 0.5 * (a - b + (a + b + 2.0) * t)
    for k in range(2, j + 1):
        c = 2 * k + a + b
        a1 = 2.0 * k * (k + a + b) * (c - 2.0)
        a2 = (c - 1.0) * (a * a - b * b)
        a3 = (c - 2.0) * (c - 1.0) * c
        a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c
        p0, p1 = p1, ((a2 + a3 * t) * p1 - a4 * p0) / a1
    return p1


def _value_and_derivative(a: float, b: float, n: int, t: np.ndarray):
    val = jacobi_recurrence((a, b), n, t)
    der = 0.5 * (n + a + b + 1.0) * jacobi_recurrence((a + 1.0, b + 1.0), n - 1, t)
    return val, der


def _brackets(a: float, b: float, npts: int) -> np.ndarray:
    m = max(40 * npts, 400)
    for _ in range(6):
        theta = np.linspace(0.0, np.pi, m + 2)[1:-1]
        t = np.cos(theta)[::-1]
        v = jacobi_recurrence((a, b), npts, t)
        sgn = np.where(v < 0, -1, 1)
        idx = np.nonzero(sgn[:-1] != sgn[1:])[0]
        if len(idx) == npts:
            return np.column_stack([t[idx], t[idx + 1]])
        m *= 4
    raise QuadratureConvergenceError(
        f"could not bracket the {npts} zeros of P^({a},{b})_{npts}"
    )


@lru_cache(maxsize=512)
def _rule(n: int, a: float, b: float) -> GaussJacobiRule:
    npts = n + 1
    br = _brackets(a, b, npts)
    lo, hi = br[:, 0].copy(), br[:, 1].copy()
    flo = jacobi_recurrence((a, b), npts, lo)
    x = 0.5 * (lo + hi)
    for _ in range(200):
        f, fp = _value_and_derivative(a, b, npts, x)
        left = np.sign(f) == np.sign(flo)
        lo = np.where(left, x, lo)
        flo = np.where(left, f, flo)
        hi = np.where(left, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - f / fp
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        dx = np.abs(xn - x)
        x = xn
        if np.all(dx <= 4.0 * np.finfo(float).eps):
            break
    else:
        raise QuadratureConvergenceError(f"Newton iteration did not converge (n={n})")
    # one polishing step
    f, fp = _value_and_derivative(a, b, npts, x)
    x = x - f / fp
    if np.any(np.diff(x) <= 0) or np.any(np.abs(x) >= 1):
        raise QuadratureConvergenceError(f"nodes not distinct for n={n}")
    _, fp = _value_and_derivative(a, b, npts, x)
    logc = (
        (a + b + 1.0) * math.log(2.0)
        + math.lgamma(npts + a + 1.0)
        + math.lgamma(npts + b + 1.0)
        - math.lgamma(npts + a + b + 1.0)
        - math.lgamma(npts + 1.0)
    )
    w = math.exp(logc) / ((1.0 - x) * (1.0 + x) * fp**2)
    x.setflags(write=False)
    w.setflags(write=False)
    return GaussJacobiRule(alpha=a, beta=b, nodes=x, weights=w)


def gauss_jacobi_rule(n: int, p) -> GaussJacobiRule:
    """Gauss-Jacobi rule with ``n+1`` nodes, exact for degree ``2n+1``.

    Nodes are the zeros of ``P_{n+1}^{(alpha,beta)}`` found by safeguarded
    Newton iteration on the recurrence; weights are the Christoffel numbers.
    """
    a, b = float(p[0]), float(p[1])
    if a <= -1 or b <= -1:
        raise ValueError("Gauss-Jacobi rule needs alpha, beta > -1")
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _rule(int(n), a, b)
