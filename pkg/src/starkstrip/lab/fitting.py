"""Sweep records and the exponential width-law fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FitError

CSV_COLUMNS = ("F", "beta", "re_z", "im_z", "residual", "L", "Ns", "Nu", "wall_time")


@dataclass
class SweepRecord:
    """One resonance solve within a sweep; column order is the CSV schema."""

    F: float
    beta: float
    re_z: float
    im_z: float
    residual: float
    L: float
    Ns: int
    Nu: int
    wall_time: float

    def row(self) -> tuple:
        return (self.F, self.beta, self.re_z, self.im_z, self.residual,
                self.L, self.Ns, self.Nu, self.wall_time)


@dataclass
class WidthFit:
    """Least-squares fit of log-width against inverse field strength."""

    c1: float
    c2: float
    r_squared: float
    f_min: float
    f_max: float
    n_used: int

    @property
    def confirms_exponential_law(self) -> bool:
        return self.c2 > 0.0


def fit_width(records, min_points: int = 4) -> WidthFit:
    """Fit ``|Im Z| = c1 * exp(-c2 / F)`` over usable sweep records.

    Only records with a strictly negative imaginary part enter; fewer than
    ``min_points`` of them is an error. A non-positive fitted decay constant
    is returned as-is (callers inspect ``confirms_exponential_law``).
    """
    usable = [r for r in records if r.im_z < 0.0]
    if len(usable) < min_points:
        raise FitError(
            f"width fit needs at least {min_points} records with Im Z < 0, got {len(usable)}"
        )
    F = np.array([r.F for r in usable], dtype=float)
    y = np.log(np.abs(np.array([r.im_z for r in usable])))
    x = 1.0 / F
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else 1.0 - ss_res / ss_tot
    return WidthFit(
        c1=float(np.exp(intercept)),
        c2=float(-slope),
        r_squared=float(r2),
        f_min=float(F.min()),
        f_max=float(F.max()),
        n_used=len(usable),
    )
