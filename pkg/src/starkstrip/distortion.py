"""Exterior complex distortion: cutoff profile, distortion field, coefficients.

The longitudinal coordinate is deformed as ``s -> s + i*beta*f(s)`` where f
is built from a smooth energy cutoff: it vanishes in the interaction region,
rises through a transition window, and saturates at the plateau values
``-1/(F*cos(eta))`` on the left and ``-1/(F*cos(eta - bend))`` on the right.
Beyond the transitions the deformation is a pure complex translation, which
shifts the asymptotic field interaction by exactly ``-i*beta`` and thereby
rotates the discretized continuum off the real axis while leaving resonances
in place.

Only purely imaginary deformation parameters are supported: the Jacobian
``1 + i*beta*f'`` then has modulus at least one and the construction never
degenerates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RegimeError
from .fields import (
    FieldConfig,
    LongitudinalTables,
    Regime,
    ReferenceInteraction,
    classify_regime,
    potential_from_curvature,
    reference_constants,
    vertical_continuation,
)
from .geometry import GeometrySetup

_TAU_EDGE = 1e-12


@dataclass(frozen=True)
class DistortionParams:
    """Reference energy window and distortion strength.

    ``E`` is the reference energy measured from the continuum threshold
    (negative for a bound state), ``deltaE`` the cutoff window width, and
    ``beta`` the imaginary distortion strength. ``beta = 0`` reproduces the
    undistorted operator exactly.
    """

    E: float
    deltaE: float
    beta: float = 0.0
    cutoff_sharpness: float = 1.0

    def __post_init__(self):
        if not self.E < 0.0:
            raise RegimeError(f"reference energy must be negative, got {self.E}")
        if not (0.0 < self.deltaE < 0.5 * min(1.0, abs(self.E))):
            raise RegimeError(
                f"window must satisfy 0 < deltaE < min(1,|E|)/2, got deltaE={self.deltaE}, E={self.E}"
            )
        if self.beta < 0.0:
            raise RegimeError(f"distortion strength must be >= 0, got {self.beta}")
        if self.cutoff_sharpness <= 0.0:
            raise RegimeError("cutoff sharpness must be positive")

    def with_beta(self, beta: float) -> "DistortionParams":
        return DistortionParams(self.E, self.deltaE, beta, self.cutoff_sharpness)


def _bump_pack(tau, p):
    """Smoothstep 1 -> 0 on tau in [0,1] and its first three tau-derivatives.

    phi = logistic(-(p/(1-tau) - p/tau)); the standard two-sided exponential
    partition of unity. Outside (0, 1) everything is constant; the edges are
    masked rather than evaluated to avoid inf*0.
    """
    tau = np.asarray(tau, dtype=float)
    phi = np.where(tau <= 0.0, 1.0, 0.0)
    d1 = np.zeros_like(tau)
    d2 = np.zeros_like(tau)
    d3 = np.zeros_like(tau)
    inside = (tau > _TAU_EDGE) & (tau < 1.0 - _TAU_EDGE)
    if np.any(inside):
        t = tau[inside]
        omt = 1.0 - t
        g = p / omt - p / t
        g1 = p / omt**2 + p / t**2
        g2 = 2 * p / omt**3 - 2 * p / t**3
        g3 = 6 * p / omt**4 + 6 * p / t**4
        ph = 1.0 / (1.0 + np.exp(np.clip(g, -700.0, 700.0)))
        P = ph * (1.0 - ph)
        f1 = -P * g1
        f2 = -(f1 * (1 - 2 * ph) * g1 + P * g2)
        Ppp = f2 * (1 - 2 * ph) - 2 * f1 * f1
        f3 = -(Ppp * g1 + 2 * f1 * (1 - 2 * ph) * g2 + P * g3)
        phi[inside] = ph
        d1[inside] = f1
        d2[inside] = f2
        d3[inside] = f3
    return phi, d1, d2, d3


def smooth_step(E: float, deltaE: float, t, sharpness: float = 1.0):
    """C-infinity cutoff: 1 below E, 0 above E + deltaE, monotone between."""
    tau = (np.asarray(t, dtype=float) - E) / deltaE
    return _bump_pack(tau, sharpness)[0]


def smooth_step_derivatives(E: float, deltaE: float, t, sharpness: float = 1.0):
    """Cutoff value and first three derivatives with respect to the energy argument."""
    tau = (np.asarray(t, dtype=float) - E) / deltaE
    phi, d1, d2, d3 = _bump_pack(tau, sharpness)
    return phi, d1 / deltaE, d2 / deltaE**2, d3 / deltaE**3


class DistortionField:
    """The longitudinal deformation field f with plateaus, and its derivatives.

    Valid only in the regime where the interaction falls to -infinity at
    both ends, so that both plateau values and the cutoff arguments have
    consistent signs.
    """

    def __init__(self, params: DistortionParams, field: FieldConfig, alpha0: float):
        regime = classify_regime(field.eta, alpha0)
        if regime is not Regime.RESONANT_BOTH_ENDS:
            raise RegimeError(
                f"distortion requires the resonant-both-ends regime, got {regime.value}"
            )
        self.params = params
        self.field = field
        self.alpha0 = alpha0
        self.c_minus = field.F * math.cos(field.eta)              # > 0
        self.c_plus = field.F * math.cos(field.eta - alpha0)      # < 0

    @property
    def beta(self) -> float:
        return self.params.beta

    @property
    def plateau_minus(self) -> float:
        return -1.0 / self.c_minus

    @property
    def plateau_plus(self) -> float:
        return -1.0 / self.c_plus

    @property
    def turning_points(self) -> tuple[float, float]:
        """Plateau onsets: f is exactly constant beyond these abscissas."""
        E = self.params.E
        return E / self.c_minus, E / self.c_plus

    @property
    def transition_widths(self) -> tuple[float, float]:
        dE = self.params.deltaE
        return dE / self.c_minus, dE / abs(self.c_plus)

    def pack(self, s):
        """(f, f', f'', f''') at ``s``, vectorized."""
        s = np.asarray(s, dtype=float)
        p = self.params
        f = np.zeros_like(s)
        f1 = np.zeros_like(s)
        f2 = np.zeros_like(s)
        f3 = np.zeros_like(s)
        left = s <= 0.0
        for mask, c in ((left, self.c_minus), (~left, self.c_plus)):
            if not np.any(mask):
                continue
            phi, d1, d2, d3 = smooth_step_derivatives(
                p.E, p.deltaE, c * s[mask], p.cutoff_sharpness
            )
            f[mask] = -phi / c
            f1[mask] = -d1
            f2[mask] = -c * d2
            f3[mask] = -c * c * d3
        return f, f1, f2, f3

    def cutoff_sum(self, s):
        """Phi(s): sum of the two one-sided cutoffs (supports are disjoint)."""
        s = np.asarray(s, dtype=float)
        p = self.params
        out = np.zeros_like(s)
        left = s <= 0.0
        for mask, c in ((left, self.c_minus), (~left, self.c_plus)):
            if np.any(mask):
                out[mask] = smooth_step(p.E, p.deltaE, c * s[mask], p.cutoff_sharpness)
        return out


def distortion_field(params: DistortionParams, field: FieldConfig, alpha0: float) -> DistortionField:
    """Construct the deformation field; rejects incompatible regimes."""
    return DistortionField(params, field, alpha0)


@dataclass
class DistortedCoefficients:
    """Every coefficient of the deformed operators on a longitudinal grid.

    1-d arrays live on the grid ``s``; 2-d arrays carry the transverse
    coordinate in the second axis. With ``beta = 0`` all complex entries are
    exactly real and reproduce the undistorted coefficient tables through
    the identical code path.
    """

    s: np.ndarray
    u: np.ndarray
    z: np.ndarray               # s + i*beta*f(s)
    f: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    Phi: np.ndarray
    f_sharp: np.ndarray         # Phi - 1
    mu: np.ndarray              # 1 + i*beta*f_sharp
    jacobian: np.ndarray        # 1 + i*beta*f'
    gamma: np.ndarray
    dgamma: np.ndarray
    ddgamma: np.ndarray
    metric: np.ndarray          # (1 + u*gamma_theta)^-2, 2-d
    flux: np.ndarray            # jacobian^-2 * metric, 2-d
    curvature_term: np.ndarray  # S_theta, 2-d
    potential: np.ndarray       # V0 at deformed argument, 2-d
    interaction: np.ndarray     # W at deformed argument, 2-d
    reference_interaction: np.ndarray  # piecewise-linear asymptote, 2-d
    reference: ReferenceInteraction

    @property
    def remainder(self) -> np.ndarray:
        return self.interaction - self.reference_interaction

    @classmethod
    def build(
        cls,
        setup: GeometrySetup,
        field: FieldConfig,
        params: DistortionParams,
        s_grid,
        u_grid,
        tables: LongitudinalTables | None = None,
        reference: ReferenceInteraction | None = None,
        alpha0: float | None = None,
    ) -> "DistortedCoefficients":
        s = np.asarray(s_grid, dtype=float)
        u = np.asarray(u_grid, dtype=float)
        if reference is None:
            reference = reference_constants(setup, field, alpha0)
        dfield = DistortionField(params, field, reference.alpha0)
        if tables is None:
            tables = LongitudinalTables.build(setup, field, s)
        beta = params.beta
        theta = 1j * beta

        f, f1, f2, f3 = dfield.pack(s)
        Phi = dfield.cutoff_sum(s)
        f_sharp = Phi - 1.0
        mu = 1.0 + theta * f_sharp
        jac = 1.0 + theta * f1
        z = s + theta * f

        gamma, dgamma, ddgamma = setup.model.eval(z)
        one_ug = 1.0 + np.outer(gamma, u)
        metric = one_ug ** (-2.0)
        jac2 = jac * jac
        flux = metric / jac2[:, None]

        # S_theta: exact expansion of the similarity-transformed kinetic term
        dmetric = -2.0 * np.outer(dgamma * jac, u) * one_ug ** (-3.0)
        jac3 = (jac2 * jac)[:, None]
        jac4 = (jac2 * jac2)[:, None]
        curvature_term = (
            -1.25 * metric * (theta * theta * f2 * f2)[:, None] / jac4
            + 0.5 * metric * (theta * f3)[:, None] / jac3
            + 0.5 * dmetric * (theta * f2)[:, None] / jac3
        )

        potential = potential_from_curvature(
            gamma[:, None], dgamma[:, None], ddgamma[:, None], u[None, :]
        )

        alpha_t, cosint_t = vertical_continuation(
            setup.model, field.eta, s, beta * f, tables.alpha, tables.cosint
        )
        interaction = field.F * (
            cosint_t[:, None] + np.outer(np.sin(field.eta - alpha_t), u)
        )
        ref_vals = reference.evaluate(z[:, None], u[None, :], branch=s[:, None])

        return cls(
            s=s, u=u, z=z, f=f, f1=f1, f2=f2, f3=f3, Phi=Phi, f_sharp=f_sharp,
            mu=mu, jacobian=jac, gamma=gamma, dgamma=dgamma, ddgamma=ddgamma,
            metric=metric, flux=flux, curvature_term=curvature_term,
            potential=potential, interaction=interaction,
            reference_interaction=np.asarray(ref_vals, dtype=complex),
            reference=reference,
        )


    @classmethod
    def build_undistorted(
        cls,
        setup: GeometrySetup,
        field: FieldConfig | None,
        s_grid,
        u_grid,
        tables: LongitudinalTables | None = None,
        reference: ReferenceInteraction | None = None,
        alpha0: float | None = None,
    ) -> "DistortedCoefficients":
        """Coefficient tables with no deformation (and optionally no field).

        Runs the same arithmetic as :meth:`build` at zero offset, so the
        resulting complex arrays have exactly vanishing imaginary parts and
        real parts identical to a zero-strength deformed build. Usable in
        every regime (no regime gate applies without a deformation).
        """
        s = np.asarray(s_grid, dtype=float)
        u = np.asarray(u_grid, dtype=float)
        zeros = np.zeros_like(s)
        ones_c = np.ones(len(s), dtype=complex)
        z = s.astype(complex)

        gamma, dgamma, ddgamma = setup.model.eval(z)
        one_ug = 1.0 + np.outer(gamma, u)
        metric = one_ug ** (-2.0)
        flux = metric / (ones_c * ones_c)[:, None]
        curvature_term = np.zeros((len(s), len(u)), dtype=complex)
        potential = potential_from_curvature(
            gamma[:, None], dgamma[:, None], ddgamma[:, None], u[None, :]
        )

        if field is None:
            interaction = np.zeros((len(s), len(u)), dtype=complex)
            ref_vals = np.zeros((len(s), len(u)), dtype=complex)
            reference = None
        else:
            if reference is None:
                reference = reference_constants(setup, field, alpha0)
            if tables is None:
                tables = LongitudinalTables.build(setup, field, s)
            alpha_t, cosint_t = vertical_continuation(
                setup.model, field.eta, s, zeros, tables.alpha, tables.cosint
            )
            interaction = field.F * (
                cosint_t[:, None] + np.outer(np.sin(field.eta - alpha_t), u)
            )
            ref_vals = np.asarray(
                reference.evaluate(z[:, None], u[None, :], branch=s[:, None]), dtype=complex
            )

        return cls(
            s=s, u=u, z=z, f=zeros, f1=zeros, f2=zeros, f3=zeros,
            Phi=zeros, f_sharp=zeros - 1.0, mu=ones_c, jacobian=ones_c,
            gamma=gamma, dgamma=dgamma, ddgamma=ddgamma,
            metric=metric, flux=flux, curvature_term=curvature_term,
            potential=potential, interaction=interaction,
            reference_interaction=ref_vals, reference=reference,
        )


def distorted_coefficients(setup, field, params, s_grid, u_grid, **kw) -> DistortedCoefficients:
    """Module-level alias for :meth:`DistortedCoefficients.build`."""
    return DistortedCoefficients.build(setup, field, params, s_grid, u_grid, **kw)


def nu_region_contains(params: DistortionParams, z, lambda0: float, n_samples: int = 129) -> bool:
    """Conservative membership test for the resolvent-bound region.

    The defining inequality involves the deformation weight, which varies
    along the guide; membership is required for every weight the cutoff can
    attain (intersection over f_sharp in [-1, 0]), so a True return is safe
    regardless of where the weight sits.
    """
    beta = params.beta
    E_minus = params.E - params.deltaE
    w = complex(E_minus + lambda0 - complex(z))
    fs = np.linspace(-1.0, 0.0, n_samples)
    mu2 = (1.0 + 1j * beta * fs) ** 2
    lhs = np.imag(mu2 * w)
    return bool(np.all(lhs < beta * params.deltaE / 4.0))
