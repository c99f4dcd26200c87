"""Projections and partial sums for the harmonic, classical and Sobolev families.

Coefficients are stored in a :class:`SpectralCoeffs` table keyed by
``BasisIndex(n, j, ell)``; ``partial_sum`` turns a table back into a BallPoly,
optionally damped by a smooth cut-off ``eta(n'/n)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Sequence, TextIO

import numpy as np

from .ballbasis import (
    BasisIndex,
    _random_points,
    ball_basis,
    ball_norm,
    basis_indices,
    classical_coefficients,
    radial_profile,
)
from .ballfun import BallPoly, radial_eval
from .harmonics import harmonic_dim, solid_table
from .jacobi import gauss_jacobi_rule
from .quadrature import BallQuadrature, build_grid
from .sobolevbasis import (
    SobolevParams,
    _lap_power,
    q_basis,
    q_norm,
    sobolev_coefficients,
)

FAMILIES = ("harmonic", "classical", "sobolev")


@dataclass(frozen=True)
class SpectralCoeffs:
    """Expansion coefficients for one family.

    ``params`` is ``()`` for harmonic, ``(mu,)`` for classical and
    ``(s, lambda_0, ...)`` for Sobolev.
    """

    family: str
    params: tuple
    d: int
    table: Mapping[BasisIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        tab = {BasisIndex(*k): float(v) for k, v in self.table.items()}
        for idx in tab:
            if idx.j < 0 or 2 * idx.j > idx.n or not 1 <= idx.ell <= harmonic_dim(self.d, idx.n - 2 * idx.j):
                raise ValueError(f"invalid index {idx} for d={self.d}")
            if self.family == "harmonic" and idx.j != 0:
                raise ValueError("harmonic coefficients need j = 0")
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "table", MappingProxyType(dict(sorted(tab.items()))))

    @property
    def degree(self) -> int:
        return max((k.n for k in self.table), default=-1)

    def basis(self, idx: BasisIndex) -> BallPoly:
        """The basis polynomial behind ``table[idx]``."""
        if self.family == "harmonic":
            return BallPoly.solid_harmonic(self.d, idx.n, idx.ell)
        if self.family == "classical":
            return ball_basis(self.params[0], idx, self.d)
        return q_basis(sobolev_params(self), idx, self.d)

    def to_csv(self, stream: TextIO) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["family", "n", "j", "ell", "value"])
        tag = _family_tag(self)
        for idx, v in self.table.items():
            w.writerow([tag, idx.n, idx.j, idx.ell, f"{v:.17g}"])


def _family_tag(c: SpectralCoeffs) -> str:
    if not c.params:
        return c.family
    return f"{c.family}(" + ";".join(f"{p:.17g}" for p in c.params) + ")"


def sobolev_params(c: SpectralCoeffs) -> SobolevParams:
    return SobolevParams(int(c.params[0]), tuple(c.params[1:]))


def read_coeffs_csv(stream: TextIO, d: int) -> SpectralCoeffs:
    """Inverse of :meth:`SpectralCoeffs.to_csv`."""
    rows = list(csv.DictReader(stream))
    if not rows:
        raise ValueError("empty coefficient table")
    tag = rows[0]["family"]
    name, _, rest = tag.partition("(")
    params = tuple(float(v) for v in rest.rstrip(")").split(";")) if rest else ()
    if name == "sobolev":
        params = (int(params[0]),) + params[1:]
    table = {BasisIndex(int(r["n"]), int(r["j"]), int(r["ell"])): float(r["value"]) for r in rows}
    return SpectralCoeffs(name, params, d, table)


# cut-off


def _g(tau: float) -> float:
    return math.exp(-1.0 / tau) if tau > 0 else 0.0


def cutoff_eval(t: float) -> float:
    """Smooth admissible cut-off: 1 on [0, 1], 0 on [2, inf), C-infinity between."""
    if t < 0:
        raise ValueError("cut-off argument must be nonnegative")
    if t <= 1.0:
        return 1.0
    if t >= 2.0:
        return 0.0
    a, b = _g(2.0 - t), _g(t - 1.0)
    return a / (a + b)


CutoffFunction = Callable[[float], float]


# projections


def _check_d(f, d: int | None) -> int:
    if isinstance(f, BallPoly):
        if d is not None and d != f.d:
            raise ValueError("dimension mismatch")
        return f.d
    if d is None:
        raise ValueError("d is required for callable input")
    return d


def _angular_coeffs(values: np.ndarray, q: BallQuadrature, mmax: int) -> list[np.ndarray]:
    """Per-radius harmonic coefficients; entry m has shape ``(a_m, n_radial)``."""
    table = solid_table(q.d, mmax, q.xi)
    v = values.reshape(len(values) // len(q.wa), len(q.wa))
    return [(tab * q.wa) @ v.T for tab in table]


def _callable_grid(q: BallQuadrature, mu: float):
    """Radial nodes/weights for ``(1-u)^mu``, normalized to total mass 1."""
    rule = gauss_jacobi_rule(len(q.rho) - 1, (mu, q.d / 2 - 1.0))
    u = (rule.nodes + 1.0) / 2.0
    w = rule.weights / rule.weights.sum()
    return u, w


def project_classical(f, mu: float, n: int, d: int | None = None, q: BallQuadrature | None = None) -> SpectralCoeffs:
    """Coefficients of ``S_n^mu f`` (all degrees ``0..n``).

    BallPoly input is projected exactly; a callable is sampled on a product grid
    whose radial rule matches the weight ``(1-|x|^2)^mu`` (default size ``n + 8``).
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    d = _check_d(f, d)
    table: dict[BasisIndex, float] = {}
    if isinstance(f, BallPoly):
        for k in range(n + 1):
            table.update(classical_coefficients(f, mu, k))
        return SpectralCoeffs("classical", (float(mu),), d, table)
    q = q or build_grid(d, n + 8)
    u, wr = _callable_grid(q, mu)
    rho = np.sqrt(u)
    pts = (rho[:, None, None] * q.xi[None, :, :]).reshape(-1, d)
    vals = np.asarray(f(pts), dtype=float).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise ValueError("callable produced non-finite values on the grid")
    ang = _angular_coeffs(vals, q, n)
    for idx in [i for k in range(n + 1) for i in basis_indices(d, k)]:
        m = idx.n - 2 * idx.j
        r = radial_eval(radial_profile(mu, idx.n, idx.j, d), u) * rho**m
        table[idx] = float(np.dot(wr, ang[m][idx.ell - 1] * r)) / ball_norm(mu, idx.n, idx.j, d)
    return SpectralCoeffs("classical", (float(mu),), d, table)


def project_harmonic(f, n: int, d: int | None = None, q: BallQuadrature | None = None) -> SpectralCoeffs:
    """Coefficients of ``S_n^H f``: the harmonic expansion of the boundary values."""
    d = _check_d(f, d)
    if isinstance(f, BallPoly):
        tr = f.boundary_trace()
        table = {BasisIndex(k.m, 0, k.ell): v for k, v in tr.items() if k.m <= n}
        return SpectralCoeffs("harmonic", (), d, table)
    q = q or build_grid(d, n + 8)
    vals = np.asarray(f(q.xi), dtype=float).reshape(1, -1)
    ang = _angular_coeffs(vals.ravel(), q, n)
    table = {BasisIndex(m, 0, ell): float(ang[m][ell - 1, 0]) for m in range(n + 1) for ell in range(1, harmonic_dim(d, m) + 1)}
    return SpectralCoeffs("harmonic", (), d, table)


def project_sobolev(f: BallPoly, p: SobolevParams, n: int, d: int | None = None) -> SpectralCoeffs:
    """Coefficients of ``S_n^{-s} f`` computed exactly from the BallPoly form."""
    if not isinstance(f, BallPoly):
        raise TypeError("use project_sobolev_callable for non-polynomial input")
    d = _check_d(f, d)
    table = {}
    for k in range(n + 1):
        table.update(sobolev_coefficients(f, p, k))
    return SpectralCoeffs("sobolev", (p.s,) + p.lambdas, d, table)


def project_sobolev_callable(
    top: Callable,
    traces: Sequence[Callable],
    p: SobolevParams,
    n: int,
    d: int,
    q: BallQuadrature | None = None,
) -> SpectralCoeffs:
    """Coefficients of ``S_n^{-s} f`` from derivative callables.

    ``top`` returns ``Lap^{s/2} f`` (even ``s``, shape ``(N,)``) or
    ``grad Lap^{(s-1)/2} f`` (odd ``s``, shape ``(N, d)``); ``traces[k]``
    returns ``Lap^k f`` on sphere points for ``k < ceil(s/2)``.
    """
    if len(traces) != p.nbnd:
        raise ValueError(f"need {p.nbnd} trace callables")
    q = q or build_grid(d, n + 8)
    half = p.s // 2
    topv = np.asarray(top(q.points), dtype=float)
    trv = [np.asarray(t(q.xi), dtype=float).reshape(-1) for t in traces]
    table = {}
    for k in range(n + 1):
        for idx in basis_indices(d, k):
            qb = q_basis(p, idx, d)
            lap = _lap_power(qb, half)
            if p.s % 2 == 0:
                main = float(np.dot(q.weights, topv * lap(q.points)))
            else:
                main = float(np.dot(q.weights, np.einsum("ij,ij->i", topv, lap.gradient(q.points))))
            bnd = 0.0
            lq = qb
            for kk in range(p.nbnd):
                if kk:
                    lq = lq.laplacian()
                bnd += p.lambdas[kk] * float(np.dot(q.wa, trv[kk] * lq(q.xi)))
            table[idx] = (main + bnd) / q_norm(p, idx.n, idx.j, d)
    return SpectralCoeffs("sobolev", (p.s,) + p.lambdas, d, table)


def partial_sum(c: SpectralCoeffs, n: int | None = None, eta: CutoffFunction | None = None) -> BallPoly:
    """``S_n f`` from coefficients, or ``S_{n,eta} f = sum_k eta(k/n) proj_k f`` when ``eta`` is given.

    With ``eta`` the sum stops at degree ``2n - 1``; ``c`` should hold
    coefficients up to that degree.
    """
    n = c.degree if n is None else n
    out = BallPoly.zero(c.d)
    for idx, v in c.table.items():
        if eta is None:
            if idx.n > n:
                continue
            w = 1.0
        else:
            if n <= 0:
                w = 1.0 if idx.n == 0 else 0.0
            else:
                w = eta(idx.n / n)
            if idx.n > 2 * n - 1 and idx.n > 0:
                w = 0.0
        if w != 0.0 and v != 0.0:
            out = out + (w * v) * c.basis(idx)
    return out


def classical_partial(f: BallPoly, mu: float, n: int) -> BallPoly:
    return partial_sum(project_classical(f, mu, n))


def sobolev_partial(f: BallPoly, p: SobolevParams, n: int) -> BallPoly:
    return partial_sum(project_sobolev(f, p, n))


def ballpoly_from_callable(f: Callable, d: int, n: int, q: BallQuadrature | None = None) -> BallPoly:
    """``S_n^0 f`` for a callable; exact for polynomials of degree ``<= n``."""
    return partial_sum(project_classical(f, 0.0, n, d, q or build_grid(d, n + 1)))


def partial_derivative(f: BallPoly, i: int) -> BallPoly:
    """``d f / d x_i`` as a BallPoly (``i`` is 1-based).

    The gradient is sampled on a grid exact for degree ``2 deg f`` and
    projected onto polynomials of degree ``deg f - 1``.
    """
    if not 1 <= i <= f.d:
        raise ValueError("coordinate index out of range")
    deg = f.degree
    if deg <= 0:
        return BallPoly.zero(f.d)
    return ballpoly_from_callable(lambda x: f.gradient(x)[:, i - 1], f.d, deg - 1, build_grid(f.d, deg))


# identity checks


def _residual(a: BallPoly, b: BallPoly, rng) -> float:
    x = _random_points(a.d, 200, rng)
    va, vb = a(x), b(x)
    scale = max(1.0, float(np.max(np.abs(va))), float(np.max(np.abs(vb))))
    return float(np.max(np.abs(va - vb))) / scale


def check_commutation_mu(f: BallPoly, mu: float, n: int, i: int, rng=0) -> float:
    """Residual of ``d_i S_n^mu f = S_{n-1}^{mu+1} d_i f`` at random points."""
    if not 1 <= i <= f.d:
        raise ValueError("need 1 <= i <= d")
    lhs = partial_derivative(classical_partial(f, mu, n), i)
    rhs = classical_partial(partial_derivative(f, i), mu + 1, n - 1)
    return _residual(lhs, rhs, rng)


def check_commutation_sobolev(f: BallPoly, p: SobolevParams, n: int, rng=0) -> dict[str, float]:
    """Residuals of the Sobolev commutation identities.

    ``laplacian``: ``Lap^{s//2} S_n^{-s} f = S^{2(s//2)-s}_{n-2(s//2)} Lap^{s//2} f``,
    where the right family is classical ``mu = 0`` for even ``s`` and
    Sobolev ``s = 1`` (boundary weight ``lambda_{s//2}``) for odd ``s``.
    ``gradient`` (odd ``s``): ``d_i Lap^{s//2} S_n^{-s} f = S^0_{n-s} d_i Lap^{s//2} f``.
    """
    if n < p.s:
        raise ValueError("need n >= s")
    half = p.s // 2
    sn = sobolev_partial(f, p, n)
    lhs = _lap_power(sn, half)
    lf = _lap_power(f, half)
    if p.s % 2 == 0:
        rhs = classical_partial(lf, 0.0, n - 2 * half)
    else:
        rhs = sobolev_partial(lf, SobolevParams(1, (p.lambdas[half],)), n - 2 * half)
    out = {"laplacian": _residual(lhs, rhs, rng)}
    if p.s % 2 == 1:
        out["gradient"] = max(
            _residual(partial_derivative(lhs, i), classical_partial(partial_derivative(lf, i), 0.0, n - p.s), rng)
            for i in range(1, f.d + 1)
        )
    return out
