"""Out-of-sample evaluation of candidate solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..gap import gap_values


@dataclass(frozen=True)
class EvaluationSummary:
    """Summary statistics of realized gap values ``f_alpha(x, xi_j)``.

    ``sd`` uses the ``1/(N - 1)`` normalization and is 0 for ``N = 1``.
    """

    min: float
    max: float
    mean: float
    median: float
    sd: float
    count: int
    gaps: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def from_gaps(cls, gaps):
        g = np.asarray(gaps, dtype=np.float64).reshape(-1)
        if g.size == 0:
            raise ValueError("need at least one gap value")
        sd = float(np.std(g, ddof=1)) if g.size > 1 else 0.0
        return cls(
            min=float(g.min()),
            max=float(g.max()),
            mean=float(np.mean(g)),
            median=float(np.median(g)),
            sd=sd,
            count=int(g.size),
            gaps=g,
        )

    def stats(self):
        return {"min": self.min, "max": self.max, "mean": self.mean, "median": self.median, "sd": self.sd}


def evaluate(x, inst, alpha, realizations):
    """Realized gap values of ``x`` over the rows of ``realizations``.

    Raises ``ValueError`` when ``x`` is not in ``S``.
    """
    gaps = gap_values(inst, alpha, x, np.atleast_2d(realizations))
    # the gap is nonnegative on S; clip rounding noise of order 1e-16
    return EvaluationSummary.from_gaps(np.maximum(gaps, 0.0))


@dataclass(frozen=True)
class RcReport:
    """Rates of change ``(v_DRERM - v_ERM) / v_ERM``; nan where ``v_ERM = 0``."""

    rc_min: float
    rc_max: float
    rc_mean: float
    rc_median: float
    rc_sd: float

    def as_dict(self):
        return {
            "rc_min": self.rc_min,
            "rc_max": self.rc_max,
            "rc_mean": self.rc_mean,
            "rc_median": self.rc_median,
            "rc_sd": self.rc_sd,
        }


def _rate(new, ref):
    if ref == 0.0 or not math.isfinite(ref):
        return math.nan
    return (new - ref) / ref


def rc(drerm: EvaluationSummary, erm: EvaluationSummary) -> RcReport:
    """Rates of change of the DRERM statistics relative to the ERM ones."""
    return RcReport(
        rc_min=_rate(drerm.min, erm.min),
        rc_max=_rate(drerm.max, erm.max),
        rc_mean=_rate(drerm.mean, erm.mean),
        rc_median=_rate(drerm.median, erm.median),
        rc_sd=_rate(drerm.sd, erm.sd),
    )
