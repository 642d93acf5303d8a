"""Log-log least-squares fits for power laws V ~ C * x^slope."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

MIN_POINTS = 4


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r2: float
    residuals: tuple
    x: tuple

    @property
    def n_points(self) -> int:
        return len(self.x)

    def as_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "n_points": self.n_points}


def fit_power_law(x, y, min_points: int = MIN_POINTS) -> ExponentFit:
    """Least squares of log y on log x; both must be positive."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("fit needs two 1-D arrays of equal length")
    if x.size < min_points:
        raise ValidationError(f"fit needs at least {min_points} points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValidationError("fit needs positive, finite data")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - (slope * lx + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res ** 2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    return ExponentFit(float(slope), float(icpt), r2, tuple(res.tolist()), tuple(x.tolist()))
