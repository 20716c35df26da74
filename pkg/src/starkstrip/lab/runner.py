"""Command pipelines: run, persist CSV tables, manifests, and figures.

Every command writes into ``<out_root>/<command>/``: a fixed-schema CSV per
table, optional SVG figures, and a ``manifest.json`` carrying the resolved
configuration echo, library versions, content hashes of every output, and a
command-specific result summary. Identical configurations reproduce CSVs
bit for bit except the wall-time column, which is measurement, not physics.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .. import __version__
from ..discretize import Grid, OperatorKind, assemble, transverse_modes
from ..distortion import nu_region_contains
from ..errors import ConfigError, StarkstripError
from ..fields import FieldConfig, Regime, reference_constants
from ..geometry import check_hypotheses
from ..distortion import DistortionField
from ..spectra import (
    bound_states,
    count_below,
    resonance_pipeline,
    sector_probe,
    theta_plateau,
)
from .config import RunConfig, Scenario, resolve_scenario
from .fitting import CSV_COLUMNS, SweepRecord, WidthFit, fit_width
from .svg import xy_plot

ENV_OUTPUT_ROOT = "STARKSTRIP_OUT"
COMMANDS = ("check", "modes", "bound", "resonance", "sweep_theta", "sweep_field", "confining")


@dataclass
class RunResult:
    command: str
    outdir: Path
    manifest: dict
    files: list = dc_field(default_factory=list)


def _fmt_val(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path: Path, header, rows) -> int:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_val(v) for v in row) + "\n")
    return len(rows)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def output_root(cli_out=None, config: RunConfig | None = None) -> Path:
    if cli_out:
        return Path(cli_out)
    if config is not None and config.output.get("dir"):
        return Path(config.output["dir"])
    return Path(os.environ.get(ENV_OUTPUT_ROOT, "runs"))


class _Run:
    """Collects outputs for one command invocation and writes the manifest last."""

    def __init__(self, command: str, config: RunConfig, out_root) -> None:
        self.command = command
        self.config = config
        self.outdir = output_root(out_root, config) / command
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.outputs: dict = {}
        self.summary: dict = {}
        self.timings: dict = {}
        self.t0 = time.perf_counter()

    def csv(self, name: str, header, rows) -> Path:
        path = self.outdir / name
        n = write_csv(path, header, rows)
        self.outputs[name] = {"rows": n}
        return path

    def svg(self, name: str, *args, **kwargs) -> Path | None:
        if "svg" not in self.config.output.get("formats", []):
            return None
        path = self.outdir / name
        xy_plot(path, *args, **kwargs)
        self.outputs[name] = {"figure": True}
        return path

    def finish(self) -> RunResult:
        self.timings["total_s"] = time.perf_counter() - self.t0
        import scipy

        for name in self.outputs:
            self.outputs[name]["sha256"] = _sha256(self.outdir / name)
        manifest = {
            "command": self.command,
            "config": self.config.as_dict(),
            "versions": {
                "starkstrip": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "outputs": self.outputs,
            "summary": self.summary,
            "timings": self.timings,
        }
        path = self.outdir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return RunResult(self.command, self.outdir, manifest, sorted(self.outputs))


def run_command(command: str, config: RunConfig, out_root=None) -> RunResult:
    """Execute one lab command and persist its artifacts."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {COMMANDS}")
    run = _Run(command, config, out_root)
    handler = globals()[f"_cmd_{command}"]
    try:
        handler(run, config)
    except StarkstripError:
        # persist what exists, then re-raise for the caller's exit code
        run.summary.setdefault("status", "error")
        run.finish()
        raise
    run.summary.setdefault("status", "ok")
    return run.finish()


def _cmd_check(run: _Run, config: RunConfig) -> None:
    scen = resolve_scenario(config, need_distortion=False)
    report_field = None
    nu_samples = []
    if scen.regime is Regime.RESONANT_BOTH_ENDS:
        scen = resolve_scenario(config)
        report_field = DistortionField(scen.params, scen.field, scen.alpha0)
        lam0 = scen.lambda0_base or scen.setup.continuum_threshold
        E0 = scen.E0_base if scen.E0_base is not None else lam0 + scen.params.E
        for name, z in (
            ("reference_level", complex(E0)),
            ("upper_half_plane", complex(E0, 1.0)),
            ("deep_lower", complex(E0, -10.0 * max(scen.params.beta, 0.01))),
        ):
            nu_samples.append((name, nu_region_contains(scen.params, z, lam0)))
    report = check_hypotheses(scen.setup, report_field)
    ref = reference_constants(scen.setup, scen.field, scen.alpha0)
    rows = [
        ("h1_ok", report.h1_ok),
        ("h2_ok", report.h2_ok),
        ("h3_surrogate_ok", report.h3_surrogate_ok),
        ("sup_abs_gamma", report.sup_abs_gamma),
        ("fitted_decay_exponent", report.fitted_decay_exponent),
        ("regime", scen.regime.value),
        ("total_bend", scen.alpha0),
        ("A_minus", ref.A_minus),
        ("A_plus", ref.A_plus),
    ]
    rows += [(f"nu_contains_{name}", val) for name, val in nu_samples]
    if scen.params is not None:
        rows += [
            ("reference_energy", scen.params.E),
            ("window", scen.params.deltaE),
        ]
    run.csv("check.csv", ("name", "value"), rows)
    run.summary["hypotheses_ok"] = report.all_ok
    run.summary["regime"] = scen.regime.value
    run.summary["violations"] = [list(map(str, v)) for v in report.violations]


def _cmd_modes(run: _Run, config: RunConfig) -> None:
    scen = resolve_scenario(config, need_distortion=False)
    Nu = config.grid["Nu"]
    discrete, continuum = transverse_modes(scen.setup.d, Nu, k=min(Nu, 8))
    rows = [
        (k + 1, d, c, abs(d - c), abs(d - c) / c)
        for k, (d, c) in enumerate(zip(discrete, continuum))
    ]
    run.csv("modes.csv", ("k", "discrete", "continuum", "abs_error", "rel_error"), rows)
    run.summary["lowest_discrete"] = float(discrete[0])
    run.summary["lowest_continuum"] = float(continuum[0])


def _cmd_bound(run: _Run, config: RunConfig) -> None:
    scen = resolve_scenario(config, need_distortion=False)
    grid = scen.base_grid()
    t0 = time.perf_counter()
    op = assemble(OperatorKind.BARE, scen.setup, grid=grid)
    lam0 = grid.lambda0_discrete()
    eigs, groups = bound_states(op, lam0, k=config.solver["k"])
    run.timings["solve_s"] = time.perf_counter() - t0
    rows = [
        (i, v, r, v < scen.setup.continuum_threshold)
        for i, (v, r) in enumerate(zip(eigs.values, eigs.residuals))
    ]
    run.csv("bound.csv", ("index", "energy", "residual", "below_continuum"), rows)
    run.summary["count_below_edge"] = int(len(eigs.values))
    run.summary["multiplicities"] = [len(g) for g in groups]
    run.summary["discrete_edge"] = lam0
    if len(eigs.values):
        run.summary["E0"] = float(eigs.values[0])
        run.summary["binding"] = float(lam0 - eigs.values[0])


def _solve_record(scen: Scenario, field: FieldConfig, params, grid, config, target=None):
    t0 = time.perf_counter()
    result = resonance_pipeline(
        scen.setup, field, params, grid,
        k=config.solver["k"], method=config.solver["method"],
        residual_tol=config.solver["residual_tol"], expected=1,
    )
    wall = time.perf_counter() - t0
    est = result.resonance
    rec = None
    if est is not None:
        rec = SweepRecord(
            F=field.F, beta=params.beta, re_z=est.Z.real, im_z=est.Z.imag,
            residual=est.residual, L=grid.L, Ns=grid.Ns, Nu=grid.Nu, wall_time=wall,
        )
    return result, rec, wall


def _cmd_resonance(run: _Run, config: RunConfig) -> None:
    scen = resolve_scenario(config)
    grid = scen.grid_for_field(scen.field)
    result, rec, wall = _solve_record(scen, scen.field, scen.params, grid, config)
    rows = [rec.row()] if rec else []
    run.csv("resonance.csv", CSV_COLUMNS, rows)
    cand_rows = [
        (v.real, v.imag, r, "resonance" if any(abs(e.Z - v) == 0 for e in result.selection.selected) else "continuum")
        for v, r in zip(result.candidates.values, result.candidates.residuals)
    ]
    run.csv("candidates.csv", ("re", "im", "residual", "cluster"), cand_rows)
    run.svg(
        "spectrum.svg",
        [
            {"x": [v.real for v in result.candidates.values],
             "y": [v.imag for v in result.candidates.values],
             "label": "candidates", "kind": "scatter"},
        ],
        xlabel="Re Z", ylabel="Im Z", title=f"spectrum near the reference level (F={scen.field.F})",
    )
    run.summary["E0_reference"] = result.E0_reference
    run.summary["selected"] = None if rec is None else {"re": rec.re_z, "im": rec.im_z}
    run.summary["selection_warning"] = result.selection.warning
    run.timings["solve_s"] = wall


def _cmd_sweep_theta(run: _Run, config: RunConfig) -> None:
    scen = resolve_scenario(config)
    betas = config.distortion["beta_list"]
    grid = scen.grid_for_field(scen.field)
    rows = []
    t0 = time.perf_counter()
    report = theta_plateau(
        scen.setup, scen.field, scen.params, betas, grid,
        drift_tol=1e-4 * abs(scen.params.E), k=config.solver["k"],
        method=config.solver["method"],
    )
    wall = time.perf_counter() - t0
    for b, z in zip(report.betas, report.Z):
        if z is None:
            continue
        rows.append(SweepRecord(scen.field.F, b, z.real, z.imag, math.nan,
                                grid.L, grid.Ns, grid.Nu, math.nan).row())
    run.csv("theta_sweep.csv", CSV_COLUMNS, rows)
    run.svg(
        "theta_trajectory.svg",
        [{"x": [z.real for z in report.Z if z is not None],
          "y": [z.imag for z in report.Z if z is not None],
          "label": "Z(beta)", "kind": "scatter"}],
        xlabel="Re Z", ylabel="Im Z", title="resonance drift across deformation strengths",
    )
    run.summary["verdict"] = report.verdict
    run.summary["best_drift"] = None if not math.isfinite(report.best_drift) else report.best_drift
    run.summary["drift_tol"] = report.drift_tol
    run.summary["plateau_betas"] = report.plateau_betas
    run.timings["sweep_s"] = wall


def _cmd_sweep_field(run: _Run, config: RunConfig) -> None:
    scen = resolve_scenario(config)
    records = []
    target = None
    for F in sorted(config.field["F_list"], reverse=True):
        fld = FieldConfig(F, scen.field.eta)
        grid = scen.grid_for_field(fld)
        result, rec, wall = _solve_record(scen, fld, scen.params, grid, config, target)
        if rec is not None:
            records.append(rec)
            target = complex(rec.re_z, rec.im_z)
    run.csv("sweep.csv", CSV_COLUMNS, [r.row() for r in records])
    fit = None
    try:
        fit = fit_width(records)
        run.summary["width_fit"] = {
            "c1": fit.c1, "c2": fit.c2, "r_squared": fit.r_squared,
            "confirms_exponential_law": fit.confirms_exponential_law,
            "n_used": fit.n_used,
        }
    except StarkstripError as exc:
        run.summary["width_fit"] = {"error": str(exc)}
    run.svg(
        "trajectory.svg",
        [{"x": [r.re_z for r in records], "y": [r.im_z for r in records],
          "label": "Z(F)", "kind": "scatter"}],
        xlabel="Re Z", ylabel="Im Z", title="resonance trajectory along the field ladder",
    )
    series = [{"x": [1.0 / r.F for r in records], "y": [abs(r.im_z) for r in records],
               "label": "|Im Z|", "kind": "scatter"}]
    if fit is not None and fit.confirms_exponential_law:
        xs = np.linspace(min(1.0 / r.F for r in records), max(1.0 / r.F for r in records), 50)
        series.append({"x": list(xs), "y": list(fit.c1 * np.exp(-fit.c2 * xs)),
                       "label": "fit", "kind": "line"})
    run.svg("width_law.svg", series, xlabel="1/F", ylabel="|Im Z|", logy=True,
            title="width against inverse field")
    run.summary["n_records"] = len(records)


def _cmd_confining(run: _Run, config: RunConfig) -> None:
    scen = resolve_scenario(config, need_distortion=False)
    if scen.regime is not Regime.CONFINING:
        raise ConfigError(
            f"confining command needs the confining regime, got {scen.regime.value} "
            f"(|eta|={abs(scen.field.eta):.6g}, |eta-alpha0|={abs(scen.field.eta - scen.alpha0):.6g})"
        )
    gr = config.grid
    L_base = 40.0 if gr["L"] == "auto" else float(gr["L"])
    Nu = gr["Nu"]
    spacing = gr["spacing"]
    cap_offset = 2.0
    rows = []
    counts = []
    for L in (L_base, 2.0 * L_base):
        Ns = max(3, int(round(2.0 * L / spacing)) - 1)
        grid = Grid(L=L, Ns=Ns, Nu=Nu, d=scen.setup.d)
        cap = grid.lambda0_discrete() + cap_offset
        op = assemble(OperatorKind.FIELD, scen.setup, scen.field, grid=grid)
        t0 = time.perf_counter()
        n_below = count_below(op, cap)
        rows.append((L, Ns, Nu, cap, n_below, time.perf_counter() - t0))
        counts.append(n_below)
    run.csv("confining.csv", ("L", "Ns", "Nu", "cap", "count_below", "wall_time"), rows)
    run.summary["counts"] = counts
    run.summary["stable"] = counts[0] == counts[1]
    run.summary["cap_offset"] = cap_offset
