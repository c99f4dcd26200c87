"""Product grids on the disk and the ball, discrete inner products, error metrics.

Radial nodes ``rho_i = sqrt((t_i + 1)/2)`` come from the Gauss-Jacobi rule for
``(0, d/2 - 1)``; the azimuth is equispaced with ``2n+1`` points and, for d = 3,
the polar angle is ``arccos`` of the Gauss-Legendre nodes.  Weights are
normalized so the constant 1 integrates to 1 over the ball (and over the
sphere for the angular part alone).

The rule integrates exactly every polynomial of total degree ``<= 2n``; the
equispaced azimuth aliases frequency ``2n+1`` so degree ``2n+1`` is not exact
in general.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, TextIO

import numpy as np

from .jacobi import gauss_jacobi_rule


@dataclass(frozen=True)
class BallQuadrature:
    d: int
    n: int
    rho: np.ndarray
    wr: np.ndarray
    xi: np.ndarray
    wa: np.ndarray
    points: np.ndarray
    weights: np.ndarray

    @property
    def sphere_points(self) -> np.ndarray:
        return self.xi

    @property
    def sphere_weights(self) -> np.ndarray:
        return self.wa

    @property
    def volume(self) -> float:
        """Lebesgue volume of the unit ball."""
        return math.pi if self.d == 2 else 4.0 * math.pi / 3.0

    @property
    def shape(self) -> tuple[int, int]:
        """``(radial nodes, angular nodes)``; ``points`` is radial-major."""
        return len(self.rho), len(self.wa)


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


@lru_cache(maxsize=64)
def build_grid(d: int, n: int) -> BallQuadrature:
    """Measuring/quadrature grid with ``n+1`` radial and ``2n+1`` azimuthal nodes."""
    if d not in (2, 3):
        raise ValueError(f"unsupported dimension d={d}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    rule = gauss_jacobi_rule(n, (0.0, d / 2 - 1.0))
    rho = np.sqrt((rule.nodes + 1.0) / 2.0)
    wr = (d / 2) * 2.0 ** (-d / 2) * rule.weights
    nphi = 2 * n + 1
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    if d == 2:
        xi = np.column_stack([np.cos(phi), np.sin(phi)])
        wa = np.full(nphi, 1.0 / nphi)
    else:
        leg = gauss_jacobi_rule(n, (0.0, 0.0))
        ct = leg.nodes
        st = np.sqrt(1.0 - ct**2)
        xi = np.column_stack(
            [np.repeat(ct, nphi), np.outer(st, np.cos(phi)).ravel(), np.outer(st, np.sin(phi)).ravel()]
        )
        wa = np.outer(leg.weights / 2.0, np.full(nphi, 1.0 / nphi)).ravel()
    points = (rho[:, None, None] * xi[None, :, :]).reshape(-1, d)
    weights = np.outer(wr, wa).ravel()
    _freeze(rho, wr, xi, wa, points, weights)
    return BallQuadrature(d, n, rho, wr, xi, wa, points, weights)


def _values(q: BallQuadrature, f, pts=None) -> np.ndarray:
    pts = q.points if pts is None else pts
    v = np.asarray(f(pts), dtype=float).reshape(-1)
    if v.shape[0] != pts.shape[0]:
        raise ValueError("callable returned the wrong number of values")
    if not np.all(np.isfinite(v)):
        raise ValueError("callable produced non-finite values on the grid")
    return v


def discrete_inner(q: BallQuadrature, f: Callable, g: Callable) -> float:
    """``sum_k w_k f(x_k) g(x_k)``, the normalized ball inner product on the grid."""
    return float(np.dot(q.weights, _values(q, f) * _values(q, g)))


def sphere_inner(q: BallQuadrature, f: Callable, g: Callable) -> float:
    """Normalized sphere inner product using the angular part of the grid."""
    return float(np.dot(q.wa, _values(q, f, q.xi) * _values(q, g, q.xi)))


def error_metrics(q: BallQuadrature, f: Callable) -> tuple[float, float]:
    """``(e_M, e_L2)`` of the error function ``f`` on the measuring grid.

    ``e_L2`` is the square root of the Lebesgue-weighted sum ``vol * sum w |f|^2``.
    """
    m = error_metrics_full(q, f)
    return m["e_M"], m["e_L2"]


def error_metrics_full(q: BallQuadrature, f: Callable) -> dict[str, float]:
    """Like :func:`error_metrics` and also reports the squared sum ``e_L2_sq``."""
    v = _values(q, f)
    sq = q.volume * float(np.dot(q.weights, v * v))
    return {"e_M": float(np.max(np.abs(v), initial=0.0)), "e_L2": math.sqrt(sq), "e_L2_sq": sq}


def write_grid_csv(q: BallQuadrature, stream: TextIO) -> None:
    """Dump grid points and normalized weights (columns x1..xd, weight)."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(q.d)] + ["weight"])
    for p, wt in zip(q.points, q.weights):
        w.writerow([f"{v:.17g}" for v in p] + [f"{wt:.17g}"])
