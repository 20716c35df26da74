"""Curvature models, tube geometry, bending angle, and admissibility checks.

A guide is a planar strip of width ``d`` drawn around a reference curve with
signed curvature ``gamma(s)``. Everything downstream needs gamma and its
first two derivatives, possibly at complex longitudinal arguments, so models
carry closed forms for all three; numerical differentiation never enters the
assembly path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import CurvatureEvaluationError, GeometryError
from .quadrature import adaptive_integral, cumulative_on_grid

POLE_GUARD = 1e-8
TAIL_TOL = 1e-12


class CurvatureKind(str, Enum):
    ZERO = "zero"
    RATIONAL = "rational"


@dataclass(frozen=True)
class CurvatureModel:
    """Analytic curvature family with closed-form derivatives.

    The rational family is ``gamma(s) = amplitude / (1 + s**(2*exponent))``
    with ``exponent >= 2`` so the decay rate ``2*exponent`` exceeds 3. The
    zero family is the straight guide. Evaluation accepts complex arguments;
    the analytic extension of the rational family has poles on ``|z| = 1``,
    guarded by a denominator threshold.
    """

    kind: CurvatureKind
    amplitude: float = 0.0
    exponent: int = 2

    def __post_init__(self):
        if self.kind is CurvatureKind.RATIONAL:
            if not (isinstance(self.exponent, (int, np.integer)) and self.exponent >= 2):
                raise GeometryError(
                    f"rational curvature needs integer exponent >= 2, got {self.exponent}"
                )
            if self.amplitude == 0.0:
                raise GeometryError("rational curvature with zero amplitude; use the zero model")

    @classmethod
    def zero(cls) -> "CurvatureModel":
        return cls(CurvatureKind.ZERO)

    @classmethod
    def rational(cls, amplitude: float = -0.8, exponent: int = 2) -> "CurvatureModel":
        return cls(CurvatureKind.RATIONAL, float(amplitude), int(exponent))

    @property
    def decay_rate(self) -> float:
        """Decay exponent of |gamma| at infinity (inf for the straight guide)."""
        if self.kind is CurvatureKind.ZERO:
            return math.inf
        return 2.0 * self.exponent

    @property
    def sup_abs(self) -> float:
        if self.kind is CurvatureKind.ZERO:
            return 0.0
        return abs(self.amplitude)

    def eval(self, z):
        """Return (gamma, gamma', gamma'') at ``z`` (scalar or array, may be complex).

        Real input yields exactly real output. Integer powers are built by
        repeated multiplication so that complex arguments with zero imaginary
        part reproduce the real-axis values bit for bit.
        """
        z = np.asarray(z)
        if self.kind is CurvatureKind.ZERO:
            zero = np.zeros_like(z)
            return zero, zero, zero
        n = self.exponent
        a = self.amplitude
        z2 = z * z
        p_nm1 = z2
        for _ in range(n - 2):
            p_nm1 = p_nm1 * z2          # z^(2n-2)
        p = p_nm1 * z2                  # z^(2n)
        den = 1.0 + p
        small = np.abs(den) < POLE_GUARD
        if np.any(small):
            where = np.asarray(z)[small].ravel()[:3]
            raise CurvatureEvaluationError(
                f"curvature evaluation degenerate near a pole: |1+z^{2*n}| < {POLE_GUARD} at z={where}"
            )
        g = a / den
        g1 = -2 * n * a * (p_nm1 * z) / (den * den)
        g2 = -2 * n * a * p_nm1 * ((2 * n - 1) - (2 * n + 1) * p) / (den * den * den)
        return g, g1, g2

    def tail_cutoff(self, tol: float = TAIL_TOL) -> float:
        """Smallest T such that the series tail value is accurate to ``tol``.

        ``tail_integral`` keeps two terms of the asymptotic expansion, so the
        truncation error is the third term; this inverts that bound.
        """
        if self.kind is CurvatureKind.ZERO:
            return 1.0
        m = 2 * self.exponent
        q = 3 * m - 1
        return max(2.0, (abs(self.amplitude) / (q * tol)) ** (1.0 / q))

    def tail_integral(self, T: float) -> float:
        """Series value of the left tail integral of gamma over (-inf, -T].

        Two asymptotic terms; the truncation is below ``TAIL_TOL`` once T is
        at least ``tail_cutoff()``.
        """
        if self.kind is CurvatureKind.ZERO:
            return 0.0
        m = 2 * self.exponent
        a = self.amplitude
        return a * (T ** (1 - m) / (m - 1) - T ** (1 - 2 * m) / (2 * m - 1))


def curvature_eval(model: CurvatureModel, z):
    """Module-level alias for :meth:`CurvatureModel.eval`."""
    return model.eval(z)


@dataclass(frozen=True)
class GeometrySetup:
    """Physical guide: curvature model plus strip width.

    Construction enforces ``d * sup|gamma| < 1`` (verified on a sampling
    sweep in addition to the model's closed-form supremum) so the tube
    coordinates are globally non-degenerate.
    """

    model: CurvatureModel
    d: float = 1.0

    def __post_init__(self):
        if self.d <= 0:
            raise GeometryError(f"strip width must be positive, got {self.d}")
        sup = self.model.sup_abs
        s = np.linspace(-50.0, 50.0, 20001)
        sampled = float(np.max(np.abs(self.model.eval(s)[0])))
        sup = max(sup, sampled)
        if self.d * sup >= 1.0:
            raise GeometryError(
                f"d*sup|gamma| = {self.d * sup:.6g} >= 1: tube coordinates degenerate"
            )

    @property
    def continuum_threshold(self) -> float:
        """Lowest transverse mode (pi/d)^2; bottom of the essential spectrum."""
        return (math.pi / self.d) ** 2


def bending_angle(setup: GeometrySetup, s: float) -> float:
    """Integral of the curvature from -infinity up to ``s``, error <= 1e-10.

    The improper tail is cut at the model's analytic bound and restored by
    its series value, then the finite part is integrated adaptively.
    """
    model = setup.model
    if model.kind is CurvatureKind.ZERO:
        return 0.0
    T = model.tail_cutoff()
    tail = model.tail_integral(T)
    if s <= -T:
        # entirely inside the tail region: integrate the series complement
        return tail - adaptive_integral(lambda t: model.eval(t)[0], s, -T)
    return tail + adaptive_integral(lambda t: model.eval(t)[0], -T, s)


def total_bend(setup: GeometrySetup) -> float:
    """Total bending angle: integral of the curvature over the whole line."""
    model = setup.model
    if model.kind is CurvatureKind.ZERO:
        return 0.0
    T = model.tail_cutoff()
    # both tails by series (the model is even in its decay), bulk adaptively
    return 2 * model.tail_integral(T) + adaptive_integral(lambda t: model.eval(t)[0], -T, T)


def bending_angle_table(setup: GeometrySetup, s_grid) -> np.ndarray:
    """Bending angle at every point of a sorted grid via one cumulative pass."""
    s_grid = np.asarray(s_grid, dtype=float)
    base = bending_angle(setup, float(s_grid[0]))
    if setup.model.kind is CurvatureKind.ZERO:
        return np.zeros_like(s_grid)
    return cumulative_on_grid(lambda t: setup.model.eval(t)[0], s_grid, base)


def embed(setup: GeometrySetup, s: float, u: float) -> tuple[float, float]:
    """Map tube coordinates (s, u) to the plane.

    ``u`` measures across the strip from the reference curve; the preimage of
    the strip is the rectangle ``R x (0, d)``. The arc integrals run over a
    piecewise-spectral segmentation of [0, s], chained off one adaptive base
    integral for the bending angle.
    """
    if not (0.0 <= u <= setup.d):
        raise GeometryError(f"transverse coordinate u={u} outside [0, {setup.d}]")
    if setup.model.kind is CurvatureKind.ZERO:
        return float(s), float(u)
    from .quadrature import SegmentTable

    if s == 0.0:
        alpha_s = bending_angle(setup, 0.0)
        return -u * math.sin(alpha_s), u * math.cos(alpha_s)
    grid = np.linspace(0.0, s, max(9, int(math.ceil(abs(s) / 0.25)) + 1))
    table = SegmentTable(grid[:-1], grid[1:])
    gamma_nodes = setup.model.eval(table.nodes)[0]
    _, alpha_nodes = table.cumulative(gamma_nodes, bending_angle(setup, 0.0))
    cx = float(np.sum(table.integrals(np.cos(alpha_nodes))).real)
    cy = float(np.sum(table.integrals(np.sin(alpha_nodes))).real)
    alpha_s = bending_angle(setup, s)
    return cx - u * math.sin(alpha_s), cy + u * math.cos(alpha_s)


def metric_factor(gamma_val, u):
    """Longitudinal metric coefficient (1 + u*gamma)**-2.

    Guards against a near-singular denominator, which cannot occur on the
    real axis for an admissible setup but can for careless complex calls.
    """
    den = 1.0 + np.asarray(u) * np.asarray(gamma_val)
    if np.any(np.abs(den) < 1e-10):
        raise GeometryError("metric factor degenerate: |1 + u*gamma| < 1e-10")
    return den ** (-2.0)


@dataclass
class HypothesisReport:
    """Outcome of the admissibility sweep for a geometry.

    ``h3_surrogate_ok`` uses the real-axis sign condition f*gamma' >= 0 on
    the set where the distortion acts (curvature non-increasing toward the
    left end, non-decreasing toward the right end), which is the operative
    necessary condition for small distortion strengths.
    """

    h1_ok: bool
    h2_ok: bool
    h3_surrogate_ok: bool
    sup_abs_gamma: float
    fitted_decay_exponent: float
    violations: list = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return self.h1_ok and self.h2_ok and self.h3_surrogate_ok


def _fit_decay_exponent(model: CurvatureModel) -> float:
    if model.kind is CurvatureKind.ZERO:
        return math.inf
    s = np.logspace(1.0, 3.0, 40)
    g = np.abs(model.eval(s)[0])
    slope = np.polyfit(np.log(s), np.log(g), 1)[0]
    return -float(slope)


def check_hypotheses(
    setup,
    distortion_field=None,
    *,
    onset: float = 1.0,
    span: float = 200.0,
    n_samples: int = 4001,
    decay_margin: float = 0.5,
) -> HypothesisReport:
    """Sampled verification of the three geometric admissibility conditions.

    Failures are reported, never raised; to diagnose a geometry that
    :class:`GeometrySetup` itself would reject, pass a ``(model, d)`` pair
    instead of a setup. When ``distortion_field`` (an object with a
    ``pack(s)`` method, see the distortion module) is supplied, the sign
    surrogate is evaluated literally as f*gamma' >= 0 wherever f != 0;
    otherwise the asymptotic sign pattern of gamma' is checked beyond
    ``onset``.
    """
    if isinstance(setup, GeometrySetup):
        model, d = setup.model, setup.d
    else:
        model, d = setup
    violations = []

    s = np.linspace(-span, span, n_samples)
    g, g1, _ = model.eval(s)
    sup = float(np.max(np.abs(g)))
    h1 = d * max(sup, model.sup_abs) < 1.0
    if not h1:
        violations.append(("h1", float(s[np.argmax(np.abs(g))])))

    eps = _fit_decay_exponent(model)
    h2 = eps >= 3.0 + decay_margin
    if not h2:
        violations.append(("h2", eps))

    tol = 1e-12
    if distortion_field is not None:
        f = distortion_field.pack(s)[0]
        active = f != 0.0
        bad = active & (f * np.real(g1) < -tol)
    else:
        left = s <= -onset
        right = s >= onset
        bad = (left & (np.real(g1) > tol)) | (right & (np.real(g1) < -tol))
    h3 = not bool(np.any(bad))
    if not h3:
        violations.extend(("h3", float(x)) for x in s[bad][:5])

    return HypothesisReport(
        h1_ok=bool(h1),
        h2_ok=bool(h2),
        h3_surrogate_ok=h3,
        sup_abs_gamma=sup,
        fitted_decay_exponent=float(eps),
        violations=violations,
    )


def sector_min_imag(setup: GeometrySetup, a0: float, r0: float, n_radial: int = 40, n_angular: int = 16) -> float:
    """Optional diagnostic: min Im gamma on the upper side of the two sectors.

    Samples |Re z| in [r0, 40*r0] and arg offsets in (0, a0]; a negative
    return flags a violation of the complex-sector positivity assumption.
    """
    r = np.geomspace(r0, 40 * r0, n_radial)
    ang = np.linspace(a0 / n_angular, a0, n_angular)
    rr, aa = np.meshgrid(r, ang, indexing="ij")
    worst = math.inf
    for base in (0.0, math.pi):
        z = rr * np.exp(1j * (base + aa))
        worst = min(worst, float(np.min(np.imag(setup.model.eval(z)[0]))))
    return worst
