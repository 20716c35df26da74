"""Field interaction, curvature potential, regimes, and the reference interaction.

The electric field of strength ``F`` and direction ``eta`` enters the tube
frame as ``W(s, u) = F * (C(s) + u * sin(eta - alpha(s)))`` with
``C(s)`` the running integral of ``cos(eta - alpha)``. Far along the guide,
``W`` is asymptotically linear; the reference interaction is that piecewise
linear asymptote, exact up to a remainder decaying like the bending angle's
tail. Both objects continue analytically to complex longitudinal arguments
by integrating up the imaginary offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GeometryError, RegimeError
from .geometry import CurvatureKind, CurvatureModel, GeometrySetup, bending_angle, bending_angle_table
from .quadrature import SegmentTable, adaptive_integral, cumulative_on_grid

# directions this close to a critical angle are rejected; slightly wider
# than the stated minimum of 1e-9 so that nine-digit truncations of pi/2
# (the canonical way users hit the boundary) are caught as well
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class FieldConfig:
    """Uniform electric field: strength F in (0, 1) and direction eta (radians)."""

    F: float
    eta: float

    def __post_init__(self):
        if not (0.0 < self.F < 1.0):
            raise RegimeError(f"field strength must satisfy 0 < F < 1, got {self.F}")


class Regime(Enum):
    """Asymptotic character of the field interaction along the two guide ends."""

    RESONANT_BOTH_ENDS = "resonant_both_ends"   # |eta| < pi/2, |eta - bend| > pi/2
    BG = "bg"                                    # both angles acute: one end up, one down
    CONFINING = "confining"                      # |eta| > pi/2, |eta - bend| < pi/2
    SYMMETRIC_RESONANT = "symmetric_resonant"    # both angles obtuse


def classify_regime(eta: float, alpha0: float, tol: float = BOUNDARY_TOL) -> Regime:
    """Classify the field direction against the total bend.

    Directions within ``tol`` of either critical angle are rejected: the
    asymptotic slopes of the interaction degenerate there and no regime is
    defined.
    """
    half_pi = 0.5 * math.pi
    a = abs(eta)
    b = abs(eta - alpha0)
    # the defining inequalities compare cosines; reduce mod 2*pi into [0, pi]
    a_red = math.acos(math.cos(eta))
    b_red = math.acos(math.cos(eta - alpha0))
    if abs(a_red - half_pi) < tol or abs(b_red - half_pi) < tol:
        raise RegimeError(
            f"boundary field direction: |eta|={a:.12g}, |eta-alpha0|={b:.12g} too close to pi/2"
        )
    first_acute = a_red < half_pi
    second_acute = b_red < half_pi
    if first_acute and not second_acute:
        return Regime.RESONANT_BOTH_ENDS
    if first_acute and second_acute:
        return Regime.BG
    if not first_acute and second_acute:
        return Regime.CONFINING
    return Regime.SYMMETRIC_RESONANT


@dataclass(frozen=True)
class ReferenceInteraction:
    """Piecewise-linear asymptote of the field interaction.

    On each half line the interaction is exactly linear in s with the
    asymptotic slope, plus a transverse tilt and a constant offset fixed by
    matching the true interaction at infinity. The two branches need not
    agree at s = 0.
    """

    F: float
    eta: float
    alpha0: float
    A_minus: float
    A_plus: float

    @property
    def slope_minus(self) -> float:
        return self.F * math.cos(self.eta)

    @property
    def slope_plus(self) -> float:
        return self.F * math.cos(self.eta - self.alpha0)

    @property
    def tilt_minus(self) -> float:
        return self.F * math.sin(self.eta)

    @property
    def tilt_plus(self) -> float:
        return self.F * math.sin(self.eta - self.alpha0)

    def evaluate(self, z, u, branch=None):
        """Evaluate at longitudinal argument ``z`` (may be complex).

        The branch (left for s < 0, right for s >= 0) follows the real part
        of ``z`` unless ``branch`` (an array of real abscissas) overrides it,
        which is how distorted arguments keep the branch of their real
        preimage.
        """
        z = np.asarray(z)
        u = np.asarray(u)
        ref = np.real(z) if branch is None else np.asarray(branch)
        left = ref < 0.0
        val_left = self.F * (z * math.cos(self.eta) + u * math.sin(self.eta) + self.A_minus)
        val_right = self.F * (
            z * math.cos(self.eta - self.alpha0)
            + u * math.sin(self.eta - self.alpha0)
            + self.A_plus
        )
        return np.where(left, val_left, val_right)


def reference_constants(setup: GeometrySetup, field: FieldConfig, alpha0: float | None = None) -> ReferenceInteraction:
    """Compute the asymptotic offsets of the reference interaction.

    Improper integrals are cut at the curvature's analytic tail radius and
    the first-order tail restored in closed form, keeping the absolute error
    at the 1e-12 scale.
    """
    model = setup.model
    if alpha0 is None:
        alpha0 = cached_total_bend(setup)
    eta = field.eta
    if model.kind is CurvatureKind.ZERO:
        return ReferenceInteraction(field.F, eta, alpha0, 0.0, 0.0)

    key = (model.kind, model.amplitude, model.exponent, eta)
    if key not in _OFFSET_CACHE:
        T = _offset_cutoff(model, 1e-13)
        a_minus = adaptive_integral(
            lambda t: math.cos(eta) - math.cos(eta - bending_angle(setup, t)), -T, 0.0
        )
        a_minus -= math.sin(eta) * _alpha_tail_integral(model, T)
        a_plus = adaptive_integral(
            lambda t: math.cos(eta - bending_angle(setup, t)) - math.cos(eta - alpha0), 0.0, T
        )
        a_plus -= math.sin(eta - alpha0) * _alpha_tail_integral(model, T)
        _OFFSET_CACHE[key] = (a_minus, a_plus)
    a_minus, a_plus = _OFFSET_CACHE[key]
    return ReferenceInteraction(field.F, eta, alpha0, a_minus, a_plus)


def _offset_cutoff(model: CurvatureModel, tol: float) -> float:
    """Cutoff for the asymptotic-offset integrals.

    After restoring the first-order tail in closed form, the residual is the
    quadratic term of the cosine expansion, of size a^2 T^(3-2m) / (2 (m-1)^2
    (2m-3)); this inverts that bound and respects the curvature's own cutoff.
    """
    m = 2 * model.exponent
    a = abs(model.amplitude)
    q = 2 * m - 3
    T_quad = (a * a / (2.0 * (m - 1) ** 2 * q * tol)) ** (1.0 / q)
    return max(model.tail_cutoff(tol), T_quad)


def _alpha_tail_integral(model: CurvatureModel, T: float) -> float:
    """Integral of the bending-angle tail over (-inf, -T], two series terms.

    By symmetry of the rational family this equals the integral of
    (alpha0 - alpha) over [T, inf).
    """
    m = 2 * model.exponent
    a = model.amplitude
    return a * (
        T ** (2 - m) / ((m - 1) * (m - 2))
        - T ** (2 - 2 * m) / ((2 * m - 1) * (2 * m - 2))
    )


_BEND_CACHE: dict = {}
_OFFSET_CACHE: dict = {}


def cached_total_bend(setup: GeometrySetup) -> float:
    """Total bending angle, memoized per curvature model."""
    key = (setup.model.kind, setup.model.amplitude, setup.model.exponent)
    if key not in _BEND_CACHE:
        from .geometry import total_bend

        _BEND_CACHE[key] = total_bend(setup)
    return _BEND_CACHE[key]


def potential_from_curvature(g, g1, g2, u):
    """Curvature-induced potential from a (gamma, gamma', gamma'') triple.

    Three-term expression; the single assembly path for both real and
    distorted coefficients so that a vanishing distortion reproduces the
    real tables exactly.
    """
    u = np.asarray(u)
    den = 1.0 + u * g
    if np.any(np.abs(den) < 1e-10):
        raise GeometryError("curvature potential degenerate: |1 + u*gamma| < 1e-10")
    den2 = den * den
    den3 = den2 * den
    return -g * g / (4.0 * den2) + u * g2 / (2.0 * den3) - 1.25 * u * u * g1 * g1 / (den2 * den2)


def curvature_potential(setup: GeometrySetup, z, u):
    """Curvature potential at longitudinal argument ``z`` (real or complex)."""
    g, g1, g2 = setup.model.eval(z)
    return potential_from_curvature(g, g1, g2, u)


@dataclass
class LongitudinalTables:
    """Per-grid cache of the bending angle and the field's cosine integral.

    One cumulative quadrature pass over a sorted grid; every consumer of
    alpha or C reads from here instead of re-integrating.
    """

    s: np.ndarray
    alpha: np.ndarray
    cosint: np.ndarray
    eta: float

    @classmethod
    def build(cls, setup: GeometrySetup, field: FieldConfig, s_grid) -> "LongitudinalTables":
        s_grid = np.asarray(s_grid, dtype=float)
        eta = field.eta
        if setup.model.kind is CurvatureKind.ZERO:
            alpha = np.zeros_like(s_grid)
            cosint = math.cos(eta) * s_grid
            return cls(s_grid, alpha, cosint, eta)
        base_alpha = bending_angle(setup, float(s_grid[0]))
        table = SegmentTable(s_grid[:-1], s_grid[1:])
        gamma_nodes = setup.model.eval(table.nodes)[0]
        alpha_ends, alpha_nodes = table.cumulative(gamma_nodes, base_alpha)
        cos_base = _cos_integral(setup, eta, float(s_grid[0]))
        cos_totals = table.integrals(np.cos(eta - alpha_nodes))
        cosint = cos_base + np.concatenate([[0.0], np.cumsum(cos_totals)])
        return cls(s_grid, np.real(alpha_ends), np.real(cosint), eta)


def vertical_continuation(model: CurvatureModel, eta: float, s, h, alpha_s, cosint_s):
    """Continue alpha and the cosine integral from s to s + i*h.

    The contour runs along the real axis to s and then straight up the
    imaginary offset; the two vertical legs are evaluated by Chebyshev
    collocation on each segment (the integrands are restrictions of entire
    compositions of the analytic curvature, so convergence is spectral).
    Points with h == 0 are passed through untouched.
    """
    s = np.asarray(s, dtype=float)
    h = np.asarray(h, dtype=float)
    alpha_theta = np.asarray(alpha_s, dtype=complex).copy()
    cosint_theta = np.asarray(cosint_s, dtype=complex).copy()
    live = h != 0.0
    if not np.any(live):
        return alpha_theta, cosint_theta
    sl, hl = s[live], h[live]
    table = SegmentTable(np.zeros_like(hl), hl)
    znodes = sl[:, None] + 1j * table.nodes
    gamma_nodes = model.eval(znodes)[0]
    gamma_totals, gamma_local = table.local_antiderivative(gamma_nodes)
    alpha_vert_nodes = np.asarray(alpha_s, dtype=complex)[live][:, None] + 1j * gamma_local
    cos_totals = table.integrals(np.cos(eta - alpha_vert_nodes))
    alpha_theta[live] = alpha_theta[live] + 1j * gamma_totals
    cosint_theta[live] = cosint_theta[live] + 1j * cos_totals
    return alpha_theta, cosint_theta


def _cos_integral(setup: GeometrySetup, eta: float, s: float) -> float:
    """Integral of cos(eta - alpha) from 0 to s by piecewise-spectral chaining."""
    if s == 0.0:
        return 0.0
    if setup.model.kind is CurvatureKind.ZERO:
        return math.cos(eta) * s
    grid = np.linspace(0.0, s, max(9, int(math.ceil(abs(s) / 0.25)) + 1))
    table = SegmentTable(grid[:-1], grid[1:])
    gamma_nodes = setup.model.eval(table.nodes)[0]
    _, alpha_nodes = table.cumulative(gamma_nodes, bending_angle(setup, 0.0))
    return float(np.sum(table.integrals(np.cos(eta - alpha_nodes))).real)


def stark_potential(setup: GeometrySetup, field: FieldConfig, s, u, distortion=None):
    """Field interaction at a single tube point.

    With ``distortion`` (a distortion field object providing ``pack``), the
    longitudinal argument is moved to ``s + i*beta*f(s)`` and the analytic
    continuation is evaluated; the return is then complex. This is the exact
    but slow path; assemblies use cached tables instead.
    """
    s = float(s)
    alpha_s = bending_angle(setup, s)
    cosint = _cos_integral(setup, field.eta, s)
    if distortion is None:
        return field.F * (cosint + u * math.sin(field.eta - alpha_s))
    f = float(distortion.pack(np.array([s]))[0][0])
    h = distortion.beta * f
    alpha_t, cosint_t = vertical_continuation(
        setup.model, field.eta, np.array([s]), np.array([h]), np.array([alpha_s]), np.array([cosint])
    )
    return complex(field.F * (cosint_t[0] + u * np.sin(field.eta - alpha_t[0])))


def remainder(setup: GeometrySetup, field: FieldConfig, s, u, distortion=None, reference=None):
    """Difference between the true and the reference interaction.

    Vanishing-by-convention on the opposite half line: the value returned is
    the remainder of the branch that ``s`` lives on.
    """
    if reference is None:
        reference = reference_constants(setup, field)
    w = stark_potential(setup, field, s, u, distortion=distortion)
    if distortion is None:
        z = s
        branch = None
    else:
        f = float(distortion.pack(np.array([s]))[0][0])
        z = s + 1j * distortion.beta * f
        branch = np.asarray(float(s))
    wref = reference.evaluate(z, u, branch=branch)
    return w - complex(wref) if distortion is not None else w - float(wref)
