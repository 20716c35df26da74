"""Grids, truncation policy, and sparse assembly of all operator kinds.

Unknowns live at interior points of a rectangle ``(-L, L) x (0, d)`` with
homogeneous Dirichlet boundaries, ordered longitudinally-major so the matrix
bandwidth equals the transverse point count. The longitudinal kinetic term
is discretized in divergence form with the flux coefficient evaluated at
half points; real operators come out exactly symmetric and deformed ones
exactly complex symmetric, with no post-hoc symmetrization.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field as dc_field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .distortion import DistortedCoefficients, DistortionField, DistortionParams
from .errors import DiscretizationError, RegimeError
from .fields import FieldConfig, LongitudinalTables, reference_constants
from .geometry import GeometrySetup

DEFAULT_NS = 801
DEFAULT_NU = 25
DEFAULT_SPACING = 40.0 / (DEFAULT_NS + 1)  # the base pair L=20, Ns=801
MIN_TRANSITION_POINTS = 8


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on the truncated strip.

    ``Ns`` and ``Nu`` count interior points; spacings follow from the box
    size. The longitudinal-major index of the unknown at (i, j) is
    ``i * Nu + j``.
    """

    L: float
    Ns: int
    Nu: int
    d: float = 1.0

    def __post_init__(self):
        if self.L <= 0 or self.d <= 0:
            raise DiscretizationError("box dimensions must be positive")
        if self.Ns < 3 or self.Nu < 3:
            raise DiscretizationError("need at least 3 interior points per direction")

    @property
    def hs(self) -> float:
        return 2.0 * self.L / (self.Ns + 1)

    @property
    def hu(self) -> float:
        return self.d / (self.Nu + 1)

    @property
    def n(self) -> int:
        return self.Ns * self.Nu

    @property
    def s_nodes(self) -> np.ndarray:
        return -self.L + self.hs * np.arange(1, self.Ns + 1)

    @property
    def u_nodes(self) -> np.ndarray:
        return self.hu * np.arange(1, self.Nu + 1)

    @property
    def s_staggered(self) -> np.ndarray:
        """Nodes and half points interleaved: -L + k*hs/2 for k = 0..2(Ns+1)."""
        return -self.L + 0.5 * self.hs * np.arange(0, 2 * (self.Ns + 1) + 1)

    def lambda0_discrete(self, k: int = 1) -> float:
        """k-th eigenvalue of the discrete transverse operator (closed form)."""
        return (2.0 / self.hu**2) * (1.0 - math.cos(k * math.pi * self.hu / self.d))

    def check_distortion_fit(self, dfield: DistortionField) -> list[str]:
        """Resolution and placement checks for a deformed assembly.

        Returns human-readable violations (empty when admissible): both
        plateau onsets must lie strictly inside the box with a margin of one
        transition width, and the grid must put at least
        ``MIN_TRANSITION_POINTS`` points across each transition.
        """
        problems = []
        tp_l, tp_r = dfield.turning_points
        w_l, w_r = dfield.transition_widths
        if not (-self.L + w_l < tp_l < 0):
            problems.append(f"left plateau onset {tp_l:.3f} outside (-L, 0) with margin {w_l:.3f}")
        if not (0 < tp_r < self.L - w_r):
            problems.append(f"right plateau onset {tp_r:.3f} outside (0, L) with margin {w_r:.3f}")
        for name, w in (("left", w_l), ("right", w_r)):
            if w / self.hs < MIN_TRANSITION_POINTS:
                problems.append(
                    f"{name} transition width {w:.4f} resolved by {w / self.hs:.1f} < "
                    f"{MIN_TRANSITION_POINTS} points"
                )
        return problems


class OperatorKind(str, Enum):
    """Which operator to assemble; names describe the ingredients."""

    BARE = "bare"                                # kinetic + curvature potential
    FIELD = "field"                              # + true field interaction
    REFERENCE = "reference"                      # kinetic + piecewise-linear interaction
    DISTORTED_FIELD = "distorted_field"          # deformed: kinetic + V0 + W (+ S)
    DISTORTED_REFERENCE = "distorted_reference"  # deformed: kinetic + reference interaction (+ S)
    DISTORTED_BARE = "distorted_bare"            # deformed kinetic only (+ S)

    @property
    def is_distorted(self) -> bool:
        return self in (
            OperatorKind.DISTORTED_FIELD,
            OperatorKind.DISTORTED_REFERENCE,
            OperatorKind.DISTORTED_BARE,
        )

    @property
    def needs_field(self) -> bool:
        return self is not OperatorKind.BARE

    @property
    def has_curvature_potential(self) -> bool:
        return self in (OperatorKind.BARE, OperatorKind.FIELD, OperatorKind.DISTORTED_FIELD)

    @property
    def interaction_term(self) -> str:
        if self in (OperatorKind.FIELD, OperatorKind.DISTORTED_FIELD):
            return "true"
        if self in (OperatorKind.REFERENCE, OperatorKind.DISTORTED_REFERENCE):
            return "reference"
        return "none"


@dataclass
class OperatorMatrix:
    """Assembled sparse operator with structural flags and provenance."""

    matrix: sp.csr_matrix
    grid: Grid
    kind: OperatorKind
    is_hermitian: bool
    is_complex_symmetric: bool
    provenance: dict = dc_field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def export_coo(self, path) -> None:
        """Write the matrix in coordinate text format, 17 significant digits."""
        coo = self.matrix.tocoo()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# rows={coo.shape[0]} cols={coo.shape[1]} nnz={coo.nnz}\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                cv = complex(v)
                fh.write(f"{r} {c} {cv.real:.17g} {cv.imag:.17g}\n")


def provenance_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def auto_truncation(
    params: DistortionParams,
    field: FieldConfig,
    alpha0: float,
    margin: float | None = None,
) -> float:
    """Half length of the computational box for a deformed run.

    Each side must contain its plateau onset plus a margin; the default
    margin is 5 length units plus three transition widths of that side, and
    the box takes the larger of the two side requirements.
    """
    dfield = DistortionField(params, field, alpha0)
    tp_l, tp_r = dfield.turning_points
    w_l, w_r = dfield.transition_widths
    if margin is not None:
        return max(abs(tp_l) + margin, abs(tp_r) + margin)
    return max(abs(tp_l) + 5.0 + 3.0 * w_l, abs(tp_r) + 5.0 + 3.0 * w_r)


def transverse_modes(d: float, Nu: int, k: int | None = None):
    """Eigenvalues of the 1-d Dirichlet second-difference operator.

    Returns (discrete, continuum) arrays of the first ``k`` transverse
    modes; the discrete values come from an actual tridiagonal eigensolve,
    not the closed form, so tests can pit one against the other.
    """
    if Nu < 3:
        raise DiscretizationError("transverse mode table needs Nu >= 3")
    from scipy.linalg import eigh_tridiagonal

    hu = d / (Nu + 1)
    main = np.full(Nu, 2.0 / hu**2)
    off = np.full(Nu - 1, -1.0 / hu**2)
    vals = eigh_tridiagonal(main, off, eigvals_only=True)
    if k is not None:
        vals = vals[:k]
    ks = np.arange(1, len(vals) + 1)
    continuum = (ks * math.pi / d) ** 2
    return vals, continuum


def _coefficients(kind, setup, field, params, grid, alpha0=None):
    s_stag = grid.s_staggered
    u = grid.u_nodes
    if kind.is_distorted:
        if params is None:
            raise DiscretizationError(f"{kind.value} assembly needs distortion parameters")
        if field is None:
            raise DiscretizationError(f"{kind.value} assembly needs a field configuration")
        reference = reference_constants(setup, field, alpha0)
        dfield = DistortionField(params, field, reference.alpha0)
        problems = grid.check_distortion_fit(dfield)
        if problems:
            warnings.warn("; ".join(problems), RuntimeWarning, stacklevel=3)
        tables = LongitudinalTables.build(setup, field, s_stag)
        return DistortedCoefficients.build(
            setup, field, params, s_stag, u, tables=tables, reference=reference
        )
    if kind.needs_field and field is None:
        raise DiscretizationError(f"{kind.value} assembly needs a field configuration")
    return DistortedCoefficients.build_undistorted(
        setup, field if kind.needs_field else None, s_stag, u, alpha0=alpha0
    )


def assemble(
    kind: OperatorKind | str,
    setup: GeometrySetup,
    field: FieldConfig | None = None,
    params: DistortionParams | None = None,
    grid: Grid | None = None,
    alpha0: float | None = None,
) -> OperatorMatrix:
    """Assemble one operator kind on a grid as a sparse matrix.

    Five-point stencil: longitudinal divergence-form fluxes at half points,
    plain second difference transversally, and the scalar terms of the kind
    on the diagonal. Real kinds produce float64 symmetric matrices; deformed
    kinds complex128 complex-symmetric ones (equal transposed entries by
    construction).
    """
    return assemble_with_coefficients(kind, setup, field, params, grid, alpha0)[0]


def assemble_with_coefficients(
    kind: OperatorKind | str,
    setup: GeometrySetup,
    field: FieldConfig | None = None,
    params: DistortionParams | None = None,
    grid: Grid | None = None,
    alpha0: float | None = None,
):
    """Like :func:`assemble` but also returns the coefficient tables used."""
    kind = OperatorKind(kind)
    if grid is None:
        raise DiscretizationError("assemble requires an explicit grid")
    coeff = _coefficients(kind, setup, field, params, grid, alpha0)
    Ns, Nu = grid.Ns, grid.Nu
    hs2, hu2 = grid.hs**2, grid.hu**2

    node = np.arange(2, 2 * Ns + 1, 2)      # interior nodes in staggered index
    half = np.arange(1, 2 * Ns + 2, 2)      # Ns + 1 half points

    flux_half = coeff.flux[half, :]                       # (Ns+1, Nu)
    diag = (flux_half[:-1, :] + flux_half[1:, :]) / hs2 + 2.0 / hu2
    diag = diag + coeff.curvature_term[node, :]
    if kind.has_curvature_potential:
        diag = diag + coeff.potential[node, :]
    if kind.interaction_term == "true":
        diag = diag + coeff.interaction[node, :]
    elif kind.interaction_term == "reference":
        diag = diag + coeff.reference_interaction[node, :]

    if kind.is_distorted:
        _check_boundary_safety(coeff, node)

    # shared complex arithmetic for both branches: a zero-strength deformed
    # assembly must reproduce the real assembly entry for entry
    off_s = -flux_half[1:-1, :] / hs2
    dtype = complex if kind.is_distorted else float
    if not kind.is_distorted:
        _assert_real(diag, "diagonal")
        _assert_real(off_s, "flux")
        diag = diag.real
        off_s = off_s.real

    idx = np.arange(Ns * Nu).reshape(Ns, Nu)
    rows = [idx.ravel()]
    cols = [idx.ravel()]
    vals = [np.asarray(diag, dtype=dtype).ravel()]

    rows += [idx[:-1, :].ravel(), idx[1:, :].ravel()]
    cols += [idx[1:, :].ravel(), idx[:-1, :].ravel()]
    off_s_flat = np.asarray(off_s, dtype=dtype).ravel()
    vals += [off_s_flat, off_s_flat]

    off_u = np.full((Ns, Nu - 1), -1.0 / hu2, dtype=dtype)
    rows += [idx[:, :-1].ravel(), idx[:, 1:].ravel()]
    cols += [idx[:, 1:].ravel(), idx[:, :-1].ravel()]
    vals += [off_u.ravel(), off_u.ravel()]

    matrix = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(Ns * Nu, Ns * Nu),
        dtype=dtype,
    )
    prov = {
        "kind": kind.value,
        "grid": {"L": grid.L, "Ns": Ns, "Nu": Nu, "d": grid.d},
        "model": {
            "kind": setup.model.kind.value,
            "amplitude": setup.model.amplitude,
            "exponent": setup.model.exponent,
        },
        "field": None if field is None else {"F": field.F, "eta": field.eta},
        "distortion": None
        if params is None or not kind.is_distorted
        else {"E": params.E, "deltaE": params.deltaE, "beta": params.beta},
    }
    prov["hash"] = provenance_hash(prov)
    op = OperatorMatrix(
        matrix=matrix,
        grid=grid,
        kind=kind,
        is_hermitian=not kind.is_distorted,
        is_complex_symmetric=kind.is_distorted,
        provenance=prov,
    )
    return op, coeff


def grid_for(
    setup: GeometrySetup,
    field: FieldConfig,
    params: DistortionParams,
    *,
    Nu: int = DEFAULT_NU,
    spacing: float = DEFAULT_SPACING,
    margin: float | None = None,
    L: float | None = None,
    Ns: int | None = None,
    alpha0: float | None = None,
) -> Grid:
    """Default grid policy: auto box from the plateau geometry, fixed spacing.

    The longitudinal point count grows with the box (the spacing, not the
    count, is held near the base pair) unless ``Ns`` is forced.
    """
    if alpha0 is None:
        from .fields import cached_total_bend

        alpha0 = cached_total_bend(setup)
    if L is None:
        L = auto_truncation(params, field, alpha0, margin)
    if Ns is None:
        Ns = max(DEFAULT_NS, int(round(2.0 * L / spacing)) - 1)
    return Grid(L=float(L), Ns=int(Ns), Nu=int(Nu), d=setup.d)


def _assert_real(arr, what):
    worst = float(np.max(np.abs(np.imag(arr)))) if np.iscomplexobj(arr) else 0.0
    if worst != 0.0:
        raise DiscretizationError(f"real assembly produced complex {what} (max imag {worst})")


def _check_boundary_safety(coeff, node):
    """Transition zone must stay off the outermost cells; walls sit on plateaus."""
    edge = [node[0], node[1], node[-2], node[-1]]
    if np.any(coeff.f1[edge] != 0.0):
        raise DiscretizationError(
            "distortion transition touches the outermost longitudinal cells; enlarge the box"
        )
    if np.any(coeff.f[edge] == 0.0):
        raise DiscretizationError(
            "box walls are outside the translated zone; the truncation must sit on the plateaus"
        )
