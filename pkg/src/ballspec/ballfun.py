"""Exact algebra for functions ``sum q_{m,ell}(|x|^2) Y^m_ell(x)`` on the ball.

Each radial profile ``q`` is a polynomial in ``u = |x|^2`` stored as Legendre
coefficients in the shifted variable ``t = 2u - 1``.  That basis keeps high
radial degrees accurate; the monomial basis in ``u`` loses every digit by
degree 20 or so.

On a single term the Laplacian acts as ``q -> Dq = 4 [u q'' + (m + d/2) q']``,
the boundary trace is ``q(1)`` and the normal derivative is ``m q(1) + 2 q'(1)``.
Inner products are normalized so that ``<1, 1> = 1`` on the ball and on the
sphere.
"""
from __future__ import annotations

import json
import math
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import legendre as L

from .harmonics import HarmonicIndex, harmonic_dim, solid_table, solid_table_grad
from .jacobi import gauss_jacobi_rule

# (1 - u) and u in the t = 2u - 1 Legendre basis
ONE_MINUS_U = np.array([0.5, -0.5])
U = np.array([0.5, 0.5])


def _trim(q) -> np.ndarray:
    q = np.asarray(q, dtype=float).ravel()
    nz = np.nonzero(q)[0]
    return q[: nz[-1] + 1].copy() if len(nz) else np.zeros(0)


def radial_from_u_power(c) -> np.ndarray:
    """Legendre coefficients of ``sum c_k u**k``."""
    c = np.asarray(c, dtype=float)
    out = np.zeros(1)
    for ck in c[::-1]:
        out = L.legadd(L.legmul(out, U), [ck])
    return _trim(out)


def radial_pow_one_minus_u(s: int) -> np.ndarray:
    """Legendre coefficients of ``(1 - u)**s``."""
    return L.legpow(ONE_MINUS_U, s) if s > 0 else np.ones(1)


def radial_eval(q, u):
    """Value of the radial profile at ``u`` in [0, 1]."""
    q = np.asarray(q, dtype=float)
    if len(q) == 0:
        return np.zeros_like(np.asarray(u, dtype=float))
    return L.legval(2.0 * np.asarray(u, dtype=float) - 1.0, q)


def radial_du(q) -> np.ndarray:
    """Derivative with respect to ``u``."""
    q = np.asarray(q, dtype=float)
    if len(q) <= 1:
        return np.zeros(0)
    return 2.0 * L.legder(q)


def radial_D(q, m: int, d: int) -> np.ndarray:
    """Radial Laplacian ``4 [u q'' + (m + d/2) q']`` for harmonic degree ``m``."""
    q = np.asarray(q, dtype=float)
    if len(q) <= 1:
        return np.zeros(0)
    q1 = radial_du(q)
    q2 = radial_du(q1)
    out = (m + 0.5 * d) * q1
    if len(q2):
        out = L.legadd(out, 0.5 * L.legadd(L.legmulx(q2), q2))
    out = 4.0 * out
    return _trim(out[: len(q) - 1])


def radial_at_one(q) -> float:
    return float(np.sum(q))


def radial_du_at_one(q) -> float:
    return float(np.sum(radial_du(q)))


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def radial_inner(p, q, m: int, mu: float, d: int, weight=None) -> float:
    """Normalized ball inner product of ``p(u) Y`` and ``q(u) Y`` for one index.

    Equal to ``int_0^1 p q (1-u)^mu u^(m+d/2-1) du / B(d/2, mu+1)``; evaluated by
    a Gauss-Jacobi rule exact for the polynomial part.  ``weight`` optionally
    multiplies the integrand by a further radial polynomial.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if len(p) == 0 or len(q) == 0:
        return 0.0
    deg = len(p) + len(q) - 2
    if weight is not None:
        deg += len(weight) - 1
    npts = deg // 2 + 1
    beta = m + 0.5 * d - 1.0
    rule = gauss_jacobi_rule(npts - 1, (mu, beta))
    t = rule.nodes
    vals = L.legval(t, p) * L.legval(t, q)
    if weight is not None:
        vals = vals * L.legval(t, weight)
    logscale = -(m + 0.5 * d + mu) * math.log(2.0) - _log_beta(0.5 * d, mu + 1.0)
    return float(np.dot(rule.weights, vals) * math.exp(logscale))


class BallPoly:
    """Finite sum ``sum q_{m,ell}(|x|^2) Y^m_ell(x)`` on the unit ball of R^d.

    ``terms`` maps ``(m, ell)`` to Legendre coefficients of ``q`` in
    ``t = 2|x|^2 - 1``.  Instances are immutable.
    """

    __slots__ = ("d", "_terms")

    def __init__(self, d: int, terms: Mapping | None = None):
        if d not in (2, 3):
            raise ValueError(f"unsupported dimension d={d}")
        clean = {}
        for key, q in (terms or {}).items():
            m, ell = int(key[0]), int(key[1])
            if not 1 <= ell <= harmonic_dim(d, m):
                raise ValueError(f"invalid harmonic index ({m}, {ell}) for d={d}")
            q = _trim(q)
            if len(q):
                q.setflags(write=False)
                clean[HarmonicIndex(m, ell)] = q
        self.d = d
        self._terms = MappingProxyType(dict(sorted(clean.items())))

    # construction helpers
    @classmethod
    def zero(cls, d: int) -> "BallPoly":
        return cls(d)

    @classmethod
    def constant(cls, d: int, c: float = 1.0) -> "BallPoly":
        return cls(d, {(0, 1): [c]})

    @classmethod
    def solid_harmonic(cls, d: int, m: int, ell: int, c: float = 1.0) -> "BallPoly":
        return cls(d, {(m, ell): [c]})

    @classmethod
    def radial(cls, d: int, q) -> "BallPoly":
        return cls(d, {(0, 1): q})

    @property
    def terms(self) -> Mapping[HarmonicIndex, np.ndarray]:
        return self._terms

    @property
    def degree(self) -> int:
        """Total degree ``max(m + 2 deg q)``; -1 for the zero polynomial."""
        return max((k.m + 2 * (len(q) - 1) for k, q in self._terms.items()), default=-1)

    @property
    def max_m(self) -> int:
        return max((k.m for k in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    # linear algebra
    def _combine(self, other: "BallPoly", sign: float) -> "BallPoly":
        if not isinstance(other, BallPoly):
            return NotImplemented
        if other.d != self.d:
            raise ValueError("dimension mismatch")
        out = dict(self._terms)
        for k, q in other._terms.items():
            out[k] = L.legadd(out[k], sign * q) if k in out else sign * q
        return BallPoly(self.d, out)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __neg__(self):
        return BallPoly(self.d, {k: -q for k, q in self._terms.items()})

    def __mul__(self, c):
        if isinstance(c, BallPoly):
            return NotImplemented
        return BallPoly(self.d, {k: float(c) * q for k, q in self._terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def mul_radial(self, r) -> "BallPoly":
        """Multiply by a radial polynomial given in the same Legendre basis."""
        return BallPoly(self.d, {k: L.legmul(q, r) for k, q in self._terms.items()})

    def map_terms(self, fn: Callable[[int, np.ndarray], np.ndarray]) -> "BallPoly":
        return BallPoly(self.d, {k: fn(k.m, q) for k, q in self._terms.items()})

    # evaluation
    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)

    def gradient(self, x) -> np.ndarray:
        """Pointwise gradient, shape ``x.shape``."""
        x = np.asarray(x, dtype=float)
        pts = x.reshape(-1, self.d)
        u = np.einsum("ij,ij->i", pts, pts)
        out = np.zeros_like(pts)
        if self._terms:
            vals, grads = solid_table_grad(self.d, self.max_m, pts)
            for k, q in self._terms.items():
                y = vals[k.m][k.ell - 1]
                gy = grads[k.m][k.ell - 1]
                qv = radial_eval(q, u)
                dq = radial_eval(radial_du(q), u)
                out += (2.0 * dq * y)[:, None] * pts + qv[:, None] * gy
        return out.reshape(x.shape)

    # calculus
    def laplacian(self) -> "BallPoly":
        return self.map_terms(lambda m, q: radial_D(q, m, self.d))

    def euler(self) -> "BallPoly":
        """Euler operator ``x . grad``: ``q -> 2 u q' + m q``."""
        return self.map_terms(lambda m, q: L.legadd(2.0 * L.legmul(U, radial_du(q)) if len(q) > 1 else [0.0], m * q))

    def boundary_trace(self) -> dict[HarmonicIndex, float]:
        return {k: radial_at_one(q) for k, q in self._terms.items()}

    def normal_derivative_trace(self) -> dict[HarmonicIndex, float]:
        return {k: k.m * radial_at_one(q) + 2.0 * radial_du_at_one(q) for k, q in self._terms.items()}

    def max_abs_coeff(self) -> float:
        return max((float(np.max(np.abs(q))) for q in self._terms.values()), default=0.0)

    # serialization
    def to_json(self) -> str:
        doc = {
            "d": self.d,
            "radial_basis": "legendre(2u-1)",
            "terms": [{"m": k.m, "ell": k.ell, "q": [float(c) for c in q]} for k, q in self._terms.items()],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BallPoly":
        doc = json.loads(text)
        if doc.get("radial_basis", "legendre(2u-1)") != "legendre(2u-1)":
            raise ValueError("unknown radial basis")
        return cls(int(doc["d"]), {(t["m"], t["ell"]): t["q"] for t in doc["terms"]})

    def __repr__(self) -> str:
        return f"BallPoly(d={self.d}, degree={self.degree}, terms={len(self._terms)})"


def evaluate(f: BallPoly, x) -> np.ndarray | float:
    """Evaluate ``f`` at one point or an array of points (last axis = d)."""
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, f.d)
    out = np.zeros(len(pts))
    if f.terms:
        u = np.einsum("ij,ij->i", pts, pts)
        table = solid_table(f.d, f.max_m, pts)
        t = 2.0 * u - 1.0
        for k, q in f.terms.items():
            out += L.legval(t, q) * table[k.m][k.ell - 1]
    if x.ndim == 1:
        return float(out[0])
    return out.reshape(x.shape[:-1])


def laplacian(f: BallPoly) -> BallPoly:
    return f.laplacian()


def boundary_trace(f: BallPoly) -> dict[HarmonicIndex, float]:
    """Coefficients of ``f`` restricted to the sphere in the harmonic basis."""
    return f.boundary_trace()


def normal_derivative_trace(f: BallPoly) -> dict[HarmonicIndex, float]:
    """Coefficients of the outward normal derivative on the sphere."""
    return f.normal_derivative_trace()


def inner_L2(f: BallPoly, g: BallPoly, mu: float = 0.0) -> float:
    """``<f, g>_mu`` with weight ``(1-|x|^2)^mu``, normalized so ``<1,1>_mu = 1``."""
    if mu <= -1:
        raise ValueError("mu must exceed -1")
    if f.d != g.d:
        raise ValueError("dimension mismatch")
    total = 0.0
    for k, q in f.terms.items():
        p = g.terms.get(k)
        if p is not None:
            total += radial_inner(q, p, k.m, mu, f.d)
    return total


def inner_sphere(f: BallPoly, g: BallPoly) -> float:
    """``<f, g>`` on the unit sphere (normalized surface measure)."""
    tf, tg = f.boundary_trace(), g.boundary_trace()
    return float(sum(v * tg[k] for k, v in tf.items() if k in tg))


def inner_grad(f: BallPoly, g: BallPoly) -> float:
    """``<grad f, grad g>`` on the ball via ``d <d_n f, g>_S - <Lap f, g>``."""
    nf, tg = f.normal_derivative_trace(), g.boundary_trace()
    surf = sum(v * tg[k] for k, v in nf.items() if k in tg)
    return float(f.d * surf - inner_L2(f.laplacian(), g, 0.0))
