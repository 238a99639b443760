"""Log-log least-squares fits of residual decay."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from relweyl.errors import NumericError

ZERO_LEVEL = 1e-13


@dataclass(frozen=True)
class ConvergenceFit:
    points: tuple
    slope: Optional[float]
    intercept: Optional[float]
    r_squared: Optional[float]
    predicted: Optional[float] = None
    excluded: tuple = ()
    exact: bool = False

    @property
    def prefactor(self) -> Optional[float]:
        """``exp(intercept)``: the fitted ``c`` in ``|residual| ~ c h^slope``."""
        return None if self.intercept is None else math.exp(self.intercept)

    def as_dict(self) -> dict:
        return {"points": [list(p) for p in self.points], "slope": self.slope,
                "intercept": self.intercept, "r_squared": self.r_squared,
                "predicted": self.predicted, "excluded": list(self.excluded),
                "exact": self.exact}


def fit_rate(h: Sequence[float], residuals: Sequence[float],
             predicted: Optional[float] = None) -> ConvergenceFit:
    """OLS of ``log|residual|`` on ``log h``.

    Residuals below 1e-13 in magnitude count as exact zeros and are excluded;
    if every residual is zero the fit reports exact agreement without a slope.
    """
    h = np.asarray(h, dtype=float)
    res = np.asarray(residuals, dtype=float)
    if h.shape != res.shape:
        raise NumericError("h and residuals differ in length")
    zero = np.abs(res) < ZERO_LEVEL
    excluded = tuple(float(x) for x in h[zero])
    if zero.all() and h.size:
        return ConvergenceFit((), None, None, None, predicted, excluded, exact=True)
    x, y = np.log(h[~zero]), np.log(np.abs(res[~zero]))
    if x.size < 4:
        raise NumericError(f"fit needs at least 4 usable points, got {x.size}")
    if np.unique(x).size != x.size:
        raise NumericError("fit abscissae must be distinct")
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if not math.isfinite(slope):
        raise NumericError("fitted slope is not finite")
    pts = tuple((float(a), float(b)) for a, b in zip(x, y))
    return ConvergenceFit(pts, float(slope), float(intercept), r2, predicted, excluded)
