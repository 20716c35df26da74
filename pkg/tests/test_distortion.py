"""Cutoff profile, deformation field, distorted coefficients, and the
resolvent-bound region test."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from starkstrip import (
    CurvatureModel,
    DistortedCoefficients,
    DistortionField,
    DistortionParams,
    FieldConfig,
    GeometrySetup,
    RegimeError,
    cached_total_bend,
    distortion_field,
    nu_region_contains,
    smooth_step,
    smooth_step_derivatives,
)

from conftest import fd_derivative

E, DE = -0.05, 0.012


class TestSmoothStep:
    def test_plateaus_are_exact(self):
        assert smooth_step(E, DE, E - 1e-9) == 1.0
        assert smooth_step(E, DE, -5.0) == 1.0
        assert smooth_step(E, DE, E + DE + 1e-9) == 0.0
        assert smooth_step(E, DE, 100.0) == 0.0

    def test_midpoint_in_open_interval(self):
        mid = smooth_step(E, DE, E + DE / 2)
        assert 0.0 < mid < 1.0

    def test_strictly_decreasing_across_window(self):
        t = np.linspace(E + 1e-9, E + DE - 1e-9, 400)
        phi = smooth_step(E, DE, t)
        assert np.all(np.diff(phi) <= 0.0)
        # strict decrease wherever the profile is representably interior
        interior = (phi > 1e-12) & (phi < 1.0 - 1e-12)
        assert np.all(np.diff(phi[interior]) < 0.0)
        assert interior.sum() > 100

    def test_range(self):
        t = np.linspace(E - DE, E + 2 * DE, 1000)
        phi = smooth_step(E, DE, t)
        assert np.all((phi >= 0.0) & (phi <= 1.0))

    def test_first_derivative_magnitude(self):
        # the symmetric bump tops out at twice the inverse window width
        t = np.linspace(E, E + DE, 2000)
        d1 = smooth_step_derivatives(E, DE, t)[1]
        assert np.max(np.abs(d1)) == pytest.approx(2.0 / DE, rel=1e-3)

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_derivatives_match_finite_differences(self, order):
        ts = E + DE * np.array([0.18, 0.4, 0.55, 0.73, 0.9])
        packs = smooth_step_derivatives(E, DE, ts)
        for i, t in enumerate(ts):
            fd = fd_derivative(
                lambda x: smooth_step_derivatives(E, DE, x)[order - 1], t, h=DE * 1e-4
            )
            assert float(packs[order][i]) == pytest.approx(float(fd), rel=5e-6, abs=1e-6 / DE**order)

    def test_derivative_scaling_with_window(self):
        # max |phi^(k)| grows like the k-th power of the inverse width
        for k in (1, 2, 3):
            sups = []
            for de in (0.01, 0.005):
                t = np.linspace(E, E + de, 4000)
                sups.append(np.max(np.abs(smooth_step_derivatives(E, de, t)[k])))
            ratio = sups[1] / sups[0]
            assert ratio == pytest.approx(2.0**k, rel=0.05)

    def test_edges_clean_no_nan(self):
        vals = smooth_step_derivatives(E, DE, np.array([E, E + DE, E - 10.0, E + 10.0]))
        for arr in vals:
            assert np.all(np.isfinite(arr))


@pytest.fixture(scope="module")
def dfield(default_setup_mod, alpha0_mod):
    params = DistortionParams(E=E, deltaE=DE, beta=0.05)
    return DistortionField(params, FieldConfig(0.02, 0.3), alpha0_mod)


@pytest.fixture(scope="module")
def default_setup_mod():
    return GeometrySetup(CurvatureModel.rational(-0.8, 2), d=1.0)


@pytest.fixture(scope="module")
def alpha0_mod(default_setup_mod):
    return cached_total_bend(default_setup_mod)


class TestDistortionField:
    def test_left_plateau_value(self, dfield):
        # -1/(F cos eta) at F=0.02, eta=0.3
        s = np.array([-10.0, -4.0, -2.63])
        f = dfield.pack(s)[0]
        assert np.allclose(f, -52.337, atol=5e-3)
        assert f[0] == f[1] == dfield.plateau_minus

    def test_right_plateau_value(self, dfield, alpha0_mod):
        expected = 1.0 / (0.02 * abs(math.cos(0.3 - alpha0_mod)))
        s = np.array([20.0, 50.0])
        f = dfield.pack(s)[0]
        assert f[0] == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(103.0, abs=0.3)

    def test_vanishes_at_origin_and_nearby(self, dfield):
        f, f1, f2, f3 = dfield.pack(np.array([-0.4, 0.0, 0.4]))
        assert np.all(f == 0.0) and np.all(f1 == 0.0)
        assert np.all(f2 == 0.0) and np.all(f3 == 0.0)

    def test_plateau_turning_points(self, dfield):
        tp_l, tp_r = dfield.turning_points
        assert tp_l == pytest.approx(E / (0.02 * math.cos(0.3)), rel=1e-12)
        s = np.array([tp_l - 1e-6, tp_r + 1e-6])
        f, f1, f2, f3 = dfield.pack(s)
        assert f[0] == dfield.plateau_minus and f[1] == dfield.plateau_plus
        assert np.all(f1 == 0.0) and np.all(f2 == 0.0) and np.all(f3 == 0.0)

    def test_derivative_sign(self, dfield):
        s = np.linspace(-8.0, 12.0, 2001)
        f1 = dfield.pack(s)[1]
        assert np.all(f1 >= 0.0)

    def test_chain_rule_against_finite_differences(self, dfield):
        for s in (-2.0, -1.8, 4.1, 7.0):
            f, f1, f2, f3 = (float(v[0]) for v in dfield.pack(np.array([s])))
            fd1 = fd_derivative(lambda x: dfield.pack(np.array([x]))[0][0], s, h=1e-5)
            fd2 = fd_derivative(lambda x: dfield.pack(np.array([x]))[1][0], s, h=1e-5)
            fd3 = fd_derivative(lambda x: dfield.pack(np.array([x]))[2][0], s, h=1e-5)
            assert f1 == pytest.approx(fd1, rel=1e-6, abs=1e-10)
            assert f2 == pytest.approx(fd2, rel=1e-5, abs=1e-8)
            assert f3 == pytest.approx(fd3, rel=1e-4, abs=1e-6)

    def test_regime_gate(self, alpha0_mod):
        params = DistortionParams(E=E, deltaE=DE, beta=0.05)
        with pytest.raises(RegimeError):
            DistortionField(params, FieldConfig(0.02, 2.0), -alpha0_mod)

    def test_alias(self, alpha0_mod):
        params = DistortionParams(E=E, deltaE=DE, beta=0.05)
        assert isinstance(distortion_field(params, FieldConfig(0.02, 0.3), alpha0_mod), DistortionField)


class TestDistortionParams:
    def test_validation(self):
        with pytest.raises(RegimeError):
            DistortionParams(E=0.05, deltaE=0.01)
        with pytest.raises(RegimeError):
            DistortionParams(E=-0.05, deltaE=0.03)  # window too wide
        with pytest.raises(RegimeError):
            DistortionParams(E=-0.05, deltaE=0.012, beta=-0.1)

    def test_with_beta(self):
        p = DistortionParams(E=-0.05, deltaE=0.012, beta=0.02)
        assert p.with_beta(0.07).beta == 0.07
        assert p.with_beta(0.07).E == p.E


class TestDistortedCoefficients:
    @pytest.fixture(scope="class")
    def coeffs(self, default_setup_mod):
        params = DistortionParams(E=E, deltaE=DE, beta=0.05)
        s = np.linspace(-9.0, 9.0, 361)
        u = np.linspace(0.1, 0.9, 9)
        return DistortedCoefficients.build(
            default_setup_mod, FieldConfig(0.02, 0.3), params, s, u
        )

    def test_zero_strength_reproduces_undistorted_bitwise(self, default_setup_mod):
        params = DistortionParams(E=E, deltaE=DE, beta=0.0)
        s = np.linspace(-9.0, 9.0, 181)
        u = np.linspace(0.1, 0.9, 5)
        field = FieldConfig(0.02, 0.3)
        a = DistortedCoefficients.build(default_setup_mod, field, params, s, u)
        b = DistortedCoefficients.build_undistorted(default_setup_mod, field, s, u)
        for name in ("gamma", "metric", "flux", "curvature_term", "potential",
                     "interaction", "reference_interaction"):
            x, y = np.asarray(getattr(a, name)), np.asarray(getattr(b, name))
            assert np.array_equal(x.real, y.real), name
            assert np.max(np.abs(x.imag)) == 0.0, name

    def test_plateau_curvature_term_vanishes_exactly(self, coeffs, dfield):
        tp_l, tp_r = dfield.turning_points
        on_plateau = (coeffs.s < tp_l - 0.1) | (coeffs.s > tp_r + 0.1)
        middle = np.abs(coeffs.s) < 0.5
        dead = on_plateau | middle
        assert np.all(coeffs.curvature_term[dead, :] == 0.0)

    def test_nontrapping_sign_of_deformed_curvature(self, coeffs, default_setup_mod):
        # the sign condition is a sector statement: it holds pointwise while
        # the deformed path stays inside the analyticity sector (strength
        # small against the reference energy); beyond that only the
        # first-order term keeps its sign
        params = DistortionParams(E=E, deltaE=DE, beta=0.01)
        small = DistortedCoefficients.build(
            default_setup_mod, FieldConfig(0.02, 0.3), params, coeffs.s, coeffs.u
        )
        active = small.f != 0.0
        assert np.min(small.gamma[active].imag) >= -1e-12
        # at full strength the first-order (surrogate) sign still holds
        g1 = default_setup_mod.model.eval(coeffs.s)[1]
        active = coeffs.f != 0.0
        assert np.min(coeffs.f[active] * g1[active].real) >= 0.0
        assert np.min(coeffs.gamma[active].imag) >= -1e-2

    def test_first_order_expansion_bound(self, coeffs, default_setup_mod):
        # gamma(s + i*beta*f) - gamma - i*beta*f*gamma' is second order in the offset
        model = default_setup_mod.model
        s = coeffs.s
        h = 0.05 * coeffs.f
        g0, g1, _ = model.eval(s)
        lhs = np.abs(coeffs.gamma - g0 - 1j * h * g1)
        for i in np.nonzero(h != 0.0)[0]:
            tau = np.linspace(0.0, h[i], 9)
            sup_g2 = np.max(np.abs(model.eval(s[i] + 1j * tau)[2]))
            assert lhs[i] <= 0.5 * h[i] ** 2 * sup_g2 * (1.0 + 1e-9) + 1e-15

    def test_jacobian_never_degenerates(self, coeffs):
        # purely imaginary strengths keep the modulus at or above one
        assert np.min(np.abs(coeffs.jacobian)) >= 1.0 - 1e-15

    def test_jacobian_literal_small_strength_chain(self, default_setup_mod):
        # the linear-bound chain min|1 + i*b*f'| >= 1 - b*sup|f'| > 0 holds
        # whenever its own premise does (small strengths)
        field = FieldConfig(0.02, 0.3)
        s = np.linspace(-9.0, 9.0, 2001)
        probe = DistortionField(DistortionParams(E=E, deltaE=DE, beta=0.0), field,
                                cached_total_bend(default_setup_mod))
        sup_f1 = np.max(np.abs(probe.pack(s)[1]))
        beta = 0.5 / sup_f1
        params = DistortionParams(E=E, deltaE=DE, beta=beta)
        u = np.array([0.5])
        co = DistortedCoefficients.build(default_setup_mod, field, params, s, u)
        bound = 1.0 - beta * sup_f1
        assert bound > 0.0
        assert np.min(np.abs(co.jacobian)) >= bound

    def test_plateau_translation_is_exact(self, coeffs, dfield):
        tp_l, tp_r = dfield.turning_points
        beyond = (coeffs.s < tp_l) | (coeffs.s > tp_r)
        assert np.all(coeffs.f1[beyond] == 0.0)
        z = coeffs.z[beyond]
        assert np.all(z.real == coeffs.s[beyond])

    def test_reference_shift_on_plateaus(self, coeffs, dfield):
        # both plateaus shift the reference interaction by exactly -i*beta
        tp_l, tp_r = dfield.turning_points
        for pick in (coeffs.s < tp_l - 1e-9, coeffs.s > tp_r + 1e-9):
            w = coeffs.reference_interaction[pick, :]
            assert np.allclose(w.imag, -0.05, atol=1e-12)

    def test_remainder_consistency(self, coeffs):
        assert np.array_equal(
            coeffs.remainder, coeffs.interaction - coeffs.reference_interaction
        )


class TestNuRegion:
    def test_zero_strength_reduces_to_upper_half_plane(self):
        params = DistortionParams(E=E, deltaE=DE, beta=0.0)
        lam0 = math.pi**2
        assert nu_region_contains(params, complex(5.0, 0.5), lam0)
        assert not nu_region_contains(params, complex(5.0, -0.5), lam0)
        assert not nu_region_contains(params, complex(5.0, 0.0), lam0)

    def test_real_anchor_point_contained(self):
        params = DistortionParams(E=E, deltaE=DE, beta=0.05)
        lam0 = math.pi**2
        z = params.E - params.deltaE + lam0
        assert nu_region_contains(params, complex(z, 0.0), lam0)

    def test_depth_exclusion(self):
        # at depth beta*deltaE the undeformed branch already fails
        params = DistortionParams(E=E, deltaE=DE, beta=0.05)
        lam0 = math.pi**2
        z = complex(params.E - params.deltaE + lam0, -params.beta * params.deltaE)
        mu2 = 1.0  # f_sharp = 0 branch
        lhs = (mu2 * (complex(params.E - params.deltaE + lam0) - z)).imag
        assert lhs >= params.beta * params.deltaE / 4.0
        assert not nu_region_contains(params, z, lam0)

    @given(
        re=st.floats(-1.0, 1.0),
        im=st.floats(0.2, 8.0),
        beta=st.floats(0.0, 0.2),
    )
    @settings(max_examples=60, deadline=None)
    def test_conservative_implies_every_branch(self, re, im, beta):
        params = DistortionParams(E=E, deltaE=DE, beta=beta)
        lam0 = math.pi**2
        z = complex(lam0 + params.E + re, im)
        if nu_region_contains(params, z, lam0):
            w = complex(params.E - params.deltaE + lam0) - z
            for fs in np.linspace(-1.0, 0.0, 7):
                mu2 = (1.0 + 1j * beta * fs) ** 2
                assert (mu2 * w).imag < beta * params.deltaE / 4.0 or beta == 0.0
