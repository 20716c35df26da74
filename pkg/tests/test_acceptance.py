"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete. Criteria 5 and 6 share the field-ladder data through
module fixtures, so the combined runtime stays inside the stated budgets.

Criterion 4 is implemented exactly as stated (theta sweep at F=0.02). For
the default scenario that field strength lies above the critical field of
the shallow trapped mode (binding ~0.038, F_c ~ 0.008), where no resonance
separates from the rotated continuum; the criterion is expected to fail and
the analysis lives in the project notes. A feasible-field companion runs the
identical machinery at a ladder field and must pass.
"""

import math
import time
import warnings

import numpy as np
import pytest

from starkstrip import (
    CurvatureModel,
    DistortionParams,
    FieldConfig,
    GeometrySetup,
    Grid,
    OperatorKind,
    assemble,
    birman_schwinger_norm,
    bound_states,
    cached_total_bend,
    complex_eigs_near,
    count_below,
    grid_for,
    resonance_pipeline,
    sector_probe,
    theta_plateau,
    transverse_modes,
)
from starkstrip.lab.config import DEFAULT_F_LADDER
from starkstrip.lab.fitting import SweepRecord, fit_width

ETA = 0.3
SWEEP_BETA = 0.05
_report_lines = []


def _criterion(number, passed, budget_s, elapsed, detail):
    status = "PASS" if passed else "FAIL"
    line = (
        f"criterion {number:>2}: {status}  ({elapsed:7.1f}s / budget {budget_s:.0f}s)  {detail}"
    )
    _report_lines.append(line)
    print("\n" + line, flush=True)
    return passed


def significant_digits(a, b):
    """Number of agreeing significant digits between two nonzero values."""
    rel = abs(a - b) / max(abs(a), abs(b))
    return math.inf if rel == 0.0 else -math.log10(rel)


def doubled(grid: Grid) -> Grid:
    return Grid(L=grid.L, Ns=2 * grid.Ns + 1, Nu=2 * grid.Nu + 1, d=grid.d)


@pytest.fixture(scope="module")
def setup():
    return GeometrySetup(CurvatureModel.rational(-0.8, 2), d=1.0)


@pytest.fixture(scope="module")
def alpha0(setup):
    return cached_total_bend(setup)


@pytest.fixture(scope="module")
def reference_level(setup):
    """E0 and the discrete edge on the base grid (criterion 2's grid)."""
    grid = Grid(L=20.0, Ns=801, Nu=25)
    op = assemble(OperatorKind.BARE, setup, grid=grid)
    lam0 = grid.lambda0_discrete()
    eigs, _ = bound_states(op, lam0, k=4)
    assert len(eigs.values) >= 1
    E0 = float(eigs.values[0])
    return {"grid": grid, "E0": E0, "lambda0": lam0, "binding": lam0 - E0}


@pytest.fixture(scope="module")
def params(reference_level):
    b = reference_level["binding"]
    return DistortionParams(E=-b, deltaE=b / 4.0, beta=SWEEP_BETA)


def _solve_row(setup, field, params, grid, target):
    t0 = time.perf_counter()
    op = assemble(OperatorKind.BARE, setup, grid=grid)
    eigs, _ = bound_states(op, grid.lambda0_discrete(), k=2)
    E0_row = float(eigs.values[0])
    result = resonance_pipeline(setup, field, params, grid, k=8, target=target, expected=1)
    z = result.resonance.Z if result.resonance else None
    return {
        "F": field.F,
        "grid": grid,
        "E0": E0_row,
        "Z": z,
        "residual": result.resonance.residual if result.resonance else math.nan,
        "wall": time.perf_counter() - t0,
    }


@pytest.fixture(scope="module")
def ladder(setup, params):
    """Resonance ladder on the default field ladder, warm-started targets."""
    rows = []
    target = None
    for F in sorted(DEFAULT_F_LADDER, reverse=True):
        field = FieldConfig(F, ETA)
        grid = grid_for(setup, field, params)
        row = _solve_row(setup, field, params, grid, target)
        assert row["Z"] is not None, f"ladder point F={F} produced no resonance"
        target = row["Z"]
        rows.append(row)
    return rows


@pytest.fixture(scope="module")
def doubled_ladder(setup, params, ladder):
    """The same ladder on doubled grids (both directions refined)."""
    rows = []
    for row in ladder:
        field = FieldConfig(row["F"], ETA)
        grid = doubled(row["grid"])
        rows.append(_solve_row(setup, field, params, grid, row["Z"]))
    return rows


class TestAcceptance:
    def test_criterion_01_transverse_modes(self):
        t0 = time.perf_counter()
        errs = {}
        for Nu in (100, 201):
            discrete, continuum = transverse_modes(1.0, Nu, k=1)
            errs[Nu] = abs(discrete[0] - continuum[0])
        rel = errs[100] / math.pi**2
        ratio = errs[100] / errs[201]
        elapsed = time.perf_counter() - t0
        ok = rel <= 2e-4 and 3.6 <= ratio <= 4.4 and elapsed < 1.0
        assert _criterion(
            1, ok, 1, elapsed,
            f"rel err {rel:.2e} (<=2e-4), doubling ratio {ratio:.2f} in [3.6, 4.4]",
        )

    def test_criterion_02_trapped_mode_exists(self, setup, reference_level):
        t0 = time.perf_counter()
        E0 = reference_level["E0"]
        below = E0 < math.pi**2

        fine = Grid(L=20.0, Ns=1603, Nu=51)
        op = assemble(OperatorKind.BARE, setup, grid=fine)
        eigs, _ = bound_states(op, fine.lambda0_discrete(), k=2)
        E0_fine = float(eigs.values[0])

        long = Grid(L=30.0, Ns=1201, Nu=25)
        op = assemble(OperatorKind.BARE, setup, grid=long)
        eigs, _ = bound_states(op, long.lambda0_discrete(), k=2)
        E0_long = float(eigs.values[0])

        d_fine = significant_digits(E0, E0_fine)
        d_long = significant_digits(E0, E0_long)
        elapsed = time.perf_counter() - t0
        ok = below and d_fine >= 3.0 and d_long >= 3.0 and elapsed < 30.0
        assert _criterion(
            2, ok, 30, elapsed,
            f"E0={E0:.6f} (<pi^2), doubling agrees to {d_fine:.2f} digits, "
            f"L->30 to {d_long:.2f} digits",
        )

    def test_criterion_03_identity_gate(self, setup, params):
        t0 = time.perf_counter()
        field = FieldConfig(DEFAULT_F_LADDER[0], ETA)
        grid = grid_for(setup, field, params)
        real_op = assemble(OperatorKind.FIELD, setup, field, grid=grid)
        zero_op = assemble(
            OperatorKind.DISTORTED_FIELD, setup, field, params.with_beta(0.0), grid=grid
        )
        beta_op = assemble(OperatorKind.DISTORTED_FIELD, setup, field, params, grid=grid)
        diff = (zero_op.matrix - real_op.matrix.astype(complex)).tocoo()
        gate = 0.0 if diff.nnz == 0 else float(np.abs(diff.data).max())
        asym = float(abs(beta_op.matrix - beta_op.matrix.T).max())
        elapsed = time.perf_counter() - t0
        ok = gate == 0.0 and asym == 0.0 and elapsed < 5.0
        assert _criterion(
            3, ok, 5, elapsed,
            f"zero-strength gate max|diff|={gate:.1e}, max|M-M^T|={asym:.1e} on n={grid.n}",
        )

    def test_criterion_04_theta_plateau_as_stated(self, setup, params, reference_level):
        # F=0.02 pinned by the criterion; for the default scenario this is
        # above the trapped mode's critical field and no resonance separates
        # from the rotated continuum (see notes); expected red
        t0 = time.perf_counter()
        field = FieldConfig(0.02, ETA)
        grid = grid_for(setup, field, params)
        tol = 1e-4 * reference_level["binding"]
        report = theta_plateau(
            setup, field, params, [0.03, 0.04, 0.05, 0.06, 0.07], grid, drift_tol=tol
        )
        elapsed = time.perf_counter() - t0
        ok = report.verdict == "stable" and elapsed < 600.0
        assert _criterion(
            4, ok, 600, elapsed,
            f"verdict '{report.verdict}', best drift "
            f"{report.best_drift if math.isfinite(report.best_drift) else float('inf'):.2e} "
            f"(tol {tol:.2e}) at F=0.02",
        )

    def test_criterion_04_companion_feasible_field(self, setup, params, reference_level):
        # identical machinery at a ladder field inside the narrow-resonance
        # window; this one must pass (documents that the F=0.02 failure is
        # parameter infeasibility, not a pipeline defect)
        t0 = time.perf_counter()
        field = FieldConfig(0.0019, ETA)
        grid = grid_for(setup, field, params)
        tol = 1e-4 * reference_level["binding"]
        report = theta_plateau(
            setup, field, params, [0.03, 0.04, 0.05, 0.06, 0.07], grid, drift_tol=tol
        )
        elapsed = time.perf_counter() - t0
        ok = report.verdict == "stable" and elapsed < 600.0
        assert _criterion(
            "4c", ok, 600, elapsed,
            f"verdict '{report.verdict}', best drift {report.best_drift:.2e} "
            f"(tol {tol:.2e}) at F=0.0019, plateau {report.plateau_betas}",
        )

    def test_criterion_05_convergence_to_reference(self, setup, params, ladder, doubled_ladder):
        t0 = time.perf_counter()
        re_err = [abs(r["Z"].real - r["E0"]) for r in ladder]
        im_mag = [abs(r["Z"].imag) for r in ladder]
        re_monotone = all(a > b for a, b in zip(re_err, re_err[1:]))
        im_monotone = all(a > b for a, b in zip(im_mag, im_mag[1:]))
        base_min = ladder[-1]
        dbl_min = doubled_ladder[-1]
        d_base = abs(base_min["Z"] - base_min["E0"])
        d_dbl = abs(dbl_min["Z"] - dbl_min["E0"])
        gate = d_base <= 10.0 * d_dbl
        elapsed = time.perf_counter() - t0 + sum(r["wall"] for r in ladder) + dbl_min["wall"]
        ok = re_monotone and im_monotone and gate and elapsed < 1800.0
        assert _criterion(
            5, ok, 1800, elapsed,
            f"|Re-E0| monotone={re_monotone}, |Im| monotone={im_monotone}, "
            f"grid gate {d_base:.3e} <= 10*{d_dbl:.3e}",
        )

    def test_criterion_06_exponential_width_law(self, ladder, doubled_ladder):
        t0 = time.perf_counter()

        def fit_rows(rows):
            recs = [
                SweepRecord(r["F"], SWEEP_BETA, r["Z"].real, r["Z"].imag, r["residual"],
                            r["grid"].L, r["grid"].Ns, r["grid"].Nu, r["wall"])
                for r in rows
            ]
            return fit_width(recs)

        fit = fit_rows(ladder)
        fit_dbl = fit_rows(doubled_ladder)
        c2_shift = abs(fit_dbl.c2 - fit.c2) / fit.c2
        walls = sum(r["wall"] for r in ladder) + sum(r["wall"] for r in doubled_ladder)
        elapsed = time.perf_counter() - t0 + walls
        ok = (
            fit.confirms_exponential_law
            and fit.r_squared >= 0.95
            and c2_shift <= 0.15
            and elapsed < 2400.0
        )
        assert _criterion(
            6, ok, 2400, elapsed,
            f"c2={fit.c2:.5f} (>0), R^2={fit.r_squared:.4f} (>=0.95), "
            f"doubled-grid c2 shift {100 * c2_shift:.1f}% (<=15%)",
        )

    def test_criterion_07_sector_probe(self, setup, params):
        t0 = time.perf_counter()
        field = FieldConfig(0.0019, ETA)
        grid = grid_for(setup, field, params)
        op = assemble(OperatorKind.DISTORTED_BARE, setup, field, params, grid=grid)
        lam0 = grid.lambda0_discrete()
        probe = sector_probe(op, lam0, window=(-1.0, 5.0), beta=params.beta, k=170)
        elapsed = time.perf_counter() - t0
        ok = probe.covered and probe.count > 0 and probe.max_imag <= 1e-8 and elapsed < 300.0
        assert _criterion(
            7, ok, 300, elapsed,
            f"{probe.count} eigenvalues in window, max Im {probe.max_imag:+.2e} (<=1e-8), "
            f"covered={probe.covered}",
        )

    def test_criterion_08_birman_schwinger_smallness(self, setup, params, reference_level):
        t0 = time.perf_counter()
        field = FieldConfig(0.0019, ETA)
        grid = grid_for(setup, field, params)
        z = complex(reference_level["E0"], 10.0)
        norm = birman_schwinger_norm(setup, field, params, z, grid)
        elapsed = time.perf_counter() - t0
        ok = norm < 1.0 and elapsed < 120.0
        assert _criterion(
            8, ok, 120, elapsed, f"power-iteration norm {norm:.4f} (<1) at Im z = 10"
        )

    def test_criterion_09_confining_vs_continuum_counting(self):
        t0 = time.perf_counter()
        spacing, Nu = 0.1, 15

        def counts_for(setup, field, L_values):
            out = []
            for L in L_values:
                grid = Grid(L=L, Ns=int(round(2 * L / spacing)) - 1, Nu=Nu)
                cap = grid.lambda0_discrete() + 2.0
                op = assemble(OperatorKind.FIELD, setup, field, grid=grid)
                out.append(count_below(op, cap))
            return out

        confining_setup = GeometrySetup(CurvatureModel.rational(0.8, 2), d=1.0)
        confining = counts_for(confining_setup, FieldConfig(0.2, 2.0), (40.0, 80.0))
        resonant_setup = GeometrySetup(CurvatureModel.rational(-0.8, 2), d=1.0)
        resonant = counts_for(resonant_setup, FieldConfig(0.2, ETA), (40.0, 80.0))
        elapsed = time.perf_counter() - t0
        ok = (
            confining[0] == confining[1]
            and confining[0] >= 1
            and resonant[1] > resonant[0]
            and elapsed < 600.0
        )
        assert _criterion(
            9, ok, 600, elapsed,
            f"confining counts {confining} (stable), resonant counts {resonant} (growing)",
        )

    def test_criterion_10_dense_sparse_oracle(self, setup, reference_level):
        t0 = time.perf_counter()
        field = FieldConfig(0.02, ETA)
        b = reference_level["binding"]
        p = DistortionParams(E=-b, deltaE=b / 4.0, beta=0.05)
        grid = Grid(L=12.0, Ns=99, Nu=25)  # n = 2475
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            op = assemble(OperatorKind.DISTORTED_FIELD, setup, field, p, grid=grid)
        target = complex(reference_level["E0"])
        dense = complex_eigs_near(op, target, k=6, method="dense")
        arnoldi = complex_eigs_near(op, target, k=6, method="shift-invert")
        worst = max(float(np.min(np.abs(dense.values - v))) for v in arnoldi.values)
        elapsed = time.perf_counter() - t0
        ok = worst <= 1e-8 and elapsed < 120.0
        assert _criterion(
            10, ok, 120, elapsed,
            f"max dense/shift-invert mismatch {worst:.2e} (<=1e-8) on n={grid.n}",
        )


def teardown_module(module):
    print("\n" + "=" * 78)
    print("acceptance summary")
    print("=" * 78)
    for line in _report_lines:
        print(line)
