"""Sup-norm time series and power-law / linear fits on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class MaxSeries:
    times: np.ndarray
    sup_norm: np.ndarray
    argmax_x: np.ndarray
    label: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=float) for a in (self.times, self.sup_norm, self.argmax_x)]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
            raise ParameterError("times, sup_norm and argmax_x must be 1-D arrays of equal length")
        if np.any(arrays[1] < 0):
            raise ParameterError("sup_norm must be non-negative")
        for name, a in zip(("times", "sup_norm", "argmax_x"), arrays):
            object.__setattr__(self, name, a)

    def __len__(self):
        return self.times.size

    def window(self, t1: float, t2: float) -> "MaxSeries":
        m = (self.times >= t1 - 1e-12) & (self.times <= t2 + 1e-12)
        return MaxSeries(self.times[m], self.sup_norm[m], self.argmax_x[m], dict(self.label))

    def value_at(self, t: float) -> float:
        """Sup-norm at the sample nearest to ``t``."""
        return float(self.sup_norm[np.argmin(np.abs(self.times - t))])


@dataclass(frozen=True)
class GrowthFit:
    """Fit ``sup ~ prefactor * t**exponent`` (or a line, for ``kind='linear'``)."""

    window: tuple
    exponent: float
    prefactor: float
    residual: float
    kind: str = "power"

    def __post_init__(self):
        t1, t2 = self.window
        if not t2 > t1:
            raise ParameterError(f"degenerate window {self.window}")


def _select(series: MaxSeries, window):
    if window is None:
        t0, t1 = series.times[0], series.times[-1]
        window = (t0 + 0.25 * (t1 - t0), t1)
    t1, t2 = map(float, window)
    if not t2 > t1:
        raise ParameterError(f"degenerate window ({t1}, {t2})")
    sub = series.window(t1, t2)
    if len(sub) < 3:
        raise ParameterError(f"window ({t1}, {t2}) holds {len(sub)} samples, need at least 3")
    return (t1, t2), sub


def fit_growth(series: MaxSeries, window=None) -> GrowthFit:
    """Least squares of log(sup) against log(t); residual is the RMS log misfit.

    With ``window=None`` the last 75% of the series is used.
    """
    window, sub = _select(series, window)
    if window[0] <= 0:
        raise ParameterError("power-law window must start at t > 0")
    if np.any(sub.sup_norm <= 0):
        raise ParameterError("sup_norm must be positive on the fit window")
    lt, ls = np.log(sub.times), np.log(sub.sup_norm)
    (p, q), *_ = np.linalg.lstsq(np.column_stack([lt, np.ones_like(lt)]), ls, rcond=None)
    resid = float(np.sqrt(np.mean((ls - (p * lt + q)) ** 2)))
    return GrowthFit(window, float(p), float(np.exp(q)), resid)


def fit_slope(series: MaxSeries, window=None) -> GrowthFit:
    """Least-squares line sup = slope*t + intercept; ``exponent`` holds the slope."""
    window, sub = _select(series, window)
    A = np.column_stack([sub.times, np.ones_like(sub.times)])
    (slope, icpt), *_ = np.linalg.lstsq(A, sub.sup_norm, rcond=None)
    resid = float(np.sqrt(np.mean((sub.sup_norm - A @ (slope, icpt)) ** 2)))
    return GrowthFit(window, float(slope), float(icpt), resid, kind="linear")
