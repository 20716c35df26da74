"""Quadrature helpers: adaptive improper integrals and spectral cumulative tables.

Two regimes are served. One-off improper integrals (total bend, asymptotic
offsets) go through ``scipy.integrate.quad`` with an analytic tail cutoff
supplied by the caller. Grid-resolution cumulative antiderivatives use
piecewise Chebyshev collocation: the integrand is sampled once per segment,
fitted, and integrated exactly, which also yields the antiderivative at the
interior collocation nodes. That inner-node feature is what lets dependent
integrands (a cosine of a running integral) be built in a single pass.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from scipy.integrate import quad

from .errors import QuadratureError

_DEG = 20
_LOBATTO = np.cos(np.pi * np.arange(_DEG, -1, -1) / _DEG)  # ascending in [-1, 1]


def adaptive_integral(fun, a, b, *, epsabs=1e-12, limit=400):
    """Integrate ``fun`` on [a, b] (end points may be infinite) with error control.

    Raises QuadratureError when the reported absolute error exceeds 100x the
    request (quad warnings alone are not treated as fatal).
    """
    val, err = quad(fun, a, b, epsabs=epsabs, epsrel=epsabs, limit=limit)
    if not np.isfinite(val) or err > max(100 * epsabs, 1e-8):
        raise QuadratureError(
            f"integral on [{a}, {b}] did not converge (value={val}, err={err})"
        )
    return val


class SegmentTable:
    """Chebyshev collocation nodes for each segment of a sorted 1-d grid.

    The grid may be real (longitudinal axis) or a set of vertical segments of
    varying complex length: ``half`` widths are allowed to be complex and of
    either sign; zero-width segments are handled (their integrals vanish).
    """

    def __init__(self, left, right):
        left = np.asarray(left)
        right = np.asarray(right)
        self.half = 0.5 * (right - left)
        self.mid = 0.5 * (left + right)
        # (segments, nodes)
        self.nodes = self.mid[:, None] + np.outer(self.half, _LOBATTO)

    def local_antiderivative(self, samples):
        """Antiderivative of each segment from its own left end.

        Parameters
        ----------
        samples : array (segments, nodes)
            Integrand at ``self.nodes``.

        Returns
        -------
        totals : array (segments,)
            Integral over each segment.
        at_nodes : array (segments, nodes)
            Antiderivative at the collocation nodes, zero at each left end.
        """
        samples = np.asarray(samples)
        coef = _cheb.chebfit(_LOBATTO, samples.T, _DEG)
        anti = _cheb.chebint(coef, lbnd=-1)
        at_nodes = _cheb.chebval(_LOBATTO, anti, tensor=True) * self.half[:, None]
        totals = _cheb.chebval(1.0, anti) * self.half
        return totals, at_nodes

    def cumulative(self, samples, base=0.0):
        """Chained antiderivative across consecutive segments.

        Returns the antiderivative at segment end points (``segments + 1``
        values, starting from ``base``) and at every collocation node.
        """
        totals, local = self.local_antiderivative(samples)
        at_ends = base + np.concatenate([[0.0], np.cumsum(totals)])
        at_nodes = at_ends[:-1, None] + local
        return at_ends, at_nodes

    def integrals(self, samples):
        """Per-segment integrals only."""
        return self.local_antiderivative(samples)[0]


def cumulative_on_grid(fun, grid, base, base_point=None):
    """Cumulative antiderivative of ``fun`` along a sorted real grid.

    ``base`` is the antiderivative at ``grid[0]`` (or at ``base_point`` when
    given, in which case the stretch from ``base_point`` to ``grid[0]`` is
    integrated first). Returns values at the grid points.
    """
    grid = np.asarray(grid, dtype=float)
    if base_point is not None and base_point != grid[0]:
        base = base + adaptive_integral(fun, base_point, grid[0])
    table = SegmentTable(grid[:-1], grid[1:])
    at_ends, _ = table.cumulative(fun(table.nodes), base)
    return at_ends
