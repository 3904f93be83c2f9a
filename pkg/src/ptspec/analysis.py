"""Eigenvalue shifts against the unperturbed ladder and shrink-rate fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.ndimage import median_filter
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .continuation import ContinuationPath
from .errors import InsufficientData, MissingGamma

#: shifts below this are treated as zero (node or robust levels) and kept out of fits
ZERO_SHIFT = 1e-10
MIN_FIT_POINTS = 8
OUTLIER_WINDOW = 7
OUTLIER_MADS = 3.0
#: lower bound on the MAD (log units) so ripples of a few percent never count
MAD_FLOOR = 0.05
MIN_OUTLIER_RECORDS = 12
SLOPE_SPREAD = 0.05


class ShrinkModel(str, Enum):
    POWER_LAW = "power_law"
    HALF_INVERSE_BOUND = "half_inverse_bound"
    LOG_OVER_N32 = "log_over_n32"


@dataclass(frozen=True)
class ShiftRecord:
    n: int
    delta_mu_abs: float
    is_complex: bool
    outlier: bool = False
    mu: complex = complex("nan")

    def __post_init__(self):
        if not self.delta_mu_abs >= 0:
            raise ValueError("delta_mu_abs must be >= 0")


@dataclass(frozen=True)
class FitResult:
    model: ShrinkModel
    slope: float
    amplitude: float
    r_squared: float
    n_range: tuple[int, int]
    n_points: int = 0
    #: levels inside n_range left out because their shift is zero
    excluded: tuple[int, ...] = ()


def compute_shifts(paths: Iterable[ContinuationPath], at_gamma: float,
                   atol: float = 1e-12) -> list[ShiftRecord]:
    """|mu_n(gamma) - (2n + 1)| for every level, ordered by n.

    The main path of each level is used; when it has ended before
    ``at_gamma`` (a nonlinear fold) the level's complex branch is used
    instead.  Values are never interpolated.
    """
    by_label: dict[int, list[ContinuationPath]] = {}
    for path in paths:
        by_label.setdefault(path.n_label, []).append(path)
    order = {"main": 0, "+": 1, "-": 2}
    out = []
    for n, group in sorted(by_label.items()):
        group.sort(key=lambda p: order.get(p.branch, 3))
        pt = next((q for q in (p.at(at_gamma, atol) for p in group) if q is not None), None)
        if pt is None:
            raise MissingGamma(f"level {n} has no point at gamma={at_gamma!r}")
        out.append(ShiftRecord(n, float(abs(pt.mu - (2 * n + 1))),
                               abs(pt.mu.imag) > 1e-8, mu=complex(pt.mu)))
    return out


def _shape(model: ShrinkModel, n: np.ndarray) -> np.ndarray:
    if model is ShrinkModel.HALF_INVERSE_BOUND:
        return n ** -0.5
    if model is ShrinkModel.LOG_OVER_N32:
        return np.log(n) / n ** 1.5
    raise ValueError(f"{model} has no fixed shape")


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if np.allclose(y, fitted) else 0.0
    return float(np.clip(1.0 - np.sum((y - fitted) ** 2) / ss_tot, 0.0, 1.0))


class ShrinkRateFit(RegressorMixin, BaseEstimator):
    """Least-squares shrink-rate model in log-log coordinates.

    ``X`` holds level indices n (one column or a flat vector), ``y`` the
    shifts.  ``power_law`` fits log y = log A + s log n freely.  The two
    fixed-shape models fit only the amplitude; for ``half_inverse_bound``
    the amplitude is the smallest C with y <= C n^{-1/2} on the fitted
    range, so the curve is an upper envelope.
    """

    def __init__(self, model: str = "power_law", n_min: int = 1, n_max: int | None = None):
        self.model = model
        self.n_min = n_min
        self.n_max = n_max

    def _select(self, X, y):
        n = np.asarray(X, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        if n.shape != y.shape:
            raise ValueError("X and y have different lengths")
        lo = max(int(self.n_min), 1)
        hi = math.inf if self.n_max is None else self.n_max
        inside = (n >= lo) & (n <= hi)
        if ShrinkModel(self.model) is ShrinkModel.LOG_OVER_N32:
            inside &= n >= 2  # log(1) = 0 has no logarithm
        keep = inside & (y >= ZERO_SHIFT)
        return n[keep], y[keep], n[inside & ~keep]

    def fit(self, X, y):
        model = ShrinkModel(self.model)
        n, y, dropped = self._select(X, y)
        if n.size < MIN_FIT_POINTS:
            raise InsufficientData(
                f"{n.size} nonzero shifts in range, at least {MIN_FIT_POINTS} needed")
        ln, ly = np.log(n), np.log(y)
        if model is ShrinkModel.POWER_LAW:
            slope, log_amp = np.polyfit(ln, ly, 1)
            fitted = log_amp + slope * ln
        else:
            lf = np.log(_shape(model, n))
            if model is ShrinkModel.HALF_INVERSE_BOUND:
                log_amp = float(np.max(ly - lf))
            else:
                log_amp = float(np.mean(ly - lf))
            slope = -0.5 if model is ShrinkModel.HALF_INVERSE_BOUND else -1.5
            fitted = log_amp + lf
        self.slope_ = float(slope)
        self.amplitude_ = float(math.exp(log_amp))
        self.r_squared_ = _r_squared(ly, fitted)
        self.n_fit_ = n.astype(int)
        self.excluded_ = tuple(int(k) for k in dropped)
        return self

    def predict(self, X):
        check_is_fitted(self, "amplitude_")
        n = np.asarray(X, dtype=float).reshape(-1)
        model = ShrinkModel(self.model)
        if model is ShrinkModel.POWER_LAW:
            return self.amplitude_ * n ** self.slope_
        return self.amplitude_ * _shape(model, n)

    def result(self) -> FitResult:
        check_is_fitted(self, "amplitude_")
        return FitResult(ShrinkModel(self.model), self.slope_, self.amplitude_, self.r_squared_,
                         (int(self.n_fit_.min()), int(self.n_fit_.max())),
                         int(self.n_fit_.size), self.excluded_)


def fit_shrink_rate(shifts: Sequence[ShiftRecord], model: str | ShrinkModel = "power_law",
                    n_range: tuple[int, int] | None = None) -> FitResult:
    """Fit one shrink-rate model to ``shifts``; n = 0 and zero shifts are left out."""
    lo, hi = (1, None) if n_range is None else n_range
    X = np.array([r.n for r in shifts], dtype=float)
    y = np.array([r.delta_mu_abs for r in shifts], dtype=float)
    est = ShrinkRateFit(ShrinkModel(model).value, lo, hi).fit(X, y)
    return est.result()


def detect_outliers(shifts: Sequence[ShiftRecord]) -> list[ShiftRecord]:
    """Flag records far from a rolling median of the log-shift.

    The median runs over ``OUTLIER_WINDOW`` neighbours (edges padded with the
    end values, so a monotone sequence is its own median) and a record is an
    outlier when its distance exceeds ``OUTLIER_MADS`` median absolute
    deviations (at least ``MAD_FLOOR``).  Zero shifts take no part and are
    never flagged.
    """
    if len(shifts) < MIN_OUTLIER_RECORDS:
        raise InsufficientData(f"at least {MIN_OUTLIER_RECORDS} records needed")
    recs = sorted(shifts, key=lambda r: r.n)
    idx = [i for i, r in enumerate(recs) if r.delta_mu_abs >= ZERO_SHIFT]
    out = [replace(r, outlier=False) for r in recs]
    if len(idx) < OUTLIER_WINDOW:
        return out
    ly = np.log([recs[i].delta_mu_abs for i in idx])
    dev = np.abs(ly - median_filter(ly, size=OUTLIER_WINDOW, mode="nearest"))
    mad = max(float(np.median(dev)), MAD_FLOOR)
    flagged = dev > OUTLIER_MADS * mad
    for i, f in zip(idx, flagged):
        if f:
            out[i] = replace(out[i], outlier=True)
    return out


@dataclass(frozen=True)
class SlopeSummary:
    g: float
    fit: FitResult
    #: rms of the log-shift about the fitted line
    oscillation: float


@dataclass(frozen=True)
class OscillationReport:
    at_gamma: float
    b: float
    per_g: tuple[SlopeSummary, ...]
    #: largest pairwise slope difference among g > 0
    slope_spread: float

    @property
    def slopes_consistent(self) -> bool:
        return self.slope_spread <= SLOPE_SPREAD

    @property
    def mean_slope(self) -> float:
        return float(np.mean([s.fit.slope for s in self.per_g]))


def slope_oscillation_report(shifts: Mapping[float, Sequence[ShiftRecord]] | Sequence,
                             g_values: Sequence[float], at_gamma: float, b: float,
                             n_range: tuple[int, int] | None = (10, 89)) -> OscillationReport:
    """Free power-law fit per g plus the size of the oscillation about it.

    ``shifts`` maps each g to its records (or is a list aligned with ``g_values``).
    """
    if not isinstance(shifts, Mapping):
        shifts = dict(zip(g_values, shifts))
    per_g = []
    for g in g_values:
        recs = shifts[g]
        fit = fit_shrink_rate(recs, ShrinkModel.POWER_LAW, n_range)
        n = np.array([r.n for r in recs], dtype=float)
        y = np.array([r.delta_mu_abs for r in recs])
        lo, hi = fit.n_range
        sel = (n >= lo) & (n <= hi) & (y >= ZERO_SHIFT)
        res = np.log(y[sel]) - np.log(fit.amplitude * n[sel] ** fit.slope)
        per_g.append(SlopeSummary(float(g), fit, float(np.sqrt(np.mean(res ** 2)))))
    slopes = [s.fit.slope for s in per_g if s.g > 0]
    spread = float(max(slopes) - min(slopes)) if len(slopes) > 1 else 0.0
    return OscillationReport(float(at_gamma), float(b), tuple(per_g), spread)
