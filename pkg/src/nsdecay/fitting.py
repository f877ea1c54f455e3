"""Decay-exponent extraction: OLS slope of log(value) against log(1+t).

The (1+t) abscissa matches the power-law normal form of the rate statements
being tested.  Windows are chosen to skip the initial transient and to stop
at the box-validity horizon t_box = (L/(2 pi))^2 / min(mu, 1), past which the
lowest retained mode decays exponentially and any fitted slope steepens; a
window reaching beyond t_box is flagged, never silently truncated.

Comparisons support both tolerance semantics: two-sided for linear oracle
curves (exact rates) and one-sided upper bounds for nonlinear runs (the rate
statements bound decay from above, so faster-than-predicted decay passes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_POINTS = 5
TRANSIENT_FRACTION = 0.2


@dataclass(frozen=True)
class FitResult:
    exponent: float
    stderr: float
    window: tuple[float, float]
    n_points: int
    theoretical: float | None = None
    verdict: bool | None = None
    box_saturated: bool = False

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise ValueError(f"window must satisfy t_lo < t_hi, got {self.window}")
        if self.n_points < MIN_POINTS:
            raise ValueError(f"fit needs >= {MIN_POINTS} points, got {self.n_points}")
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


def box_horizon(box_length: float, mu: float) -> float:
    """Time past which the lowest nonzero mode dominates: (L/2pi)^2/min(mu,1)."""
    return (box_length / (2.0 * np.pi)) ** 2 / min(mu, 1.0)


def default_window(times, t_box: float | None = None) -> tuple[float, float]:
    """Drop the first 20 percent of samples; cap the window at t_box if given."""
    times = np.asarray(times, dtype=float)
    if len(times) < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} samples, got {len(times)}")
    lo = times[int(np.ceil(TRANSIENT_FRACTION * (len(times) - 1)))]
    hi = times[-1]
    if t_box is not None and t_box < hi:
        hi = t_box
    if not lo < hi:
        raise ValueError(f"degenerate window [{lo}, {hi}] (t_box={t_box})")
    return float(lo), float(hi)


def fit_exponent(times, values, window: tuple[float, float] | None = None,
                 t_box: float | None = None) -> FitResult:
    """OLS fit of log(values) on log(1+times) inside window."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise ValueError("times and values must be matching 1-d arrays")
    if window is None:
        window = default_window(times, t_box)
    lo, hi = window
    if not lo < hi:
        raise ValueError(f"window must satisfy t_lo < t_hi, got {window}")
    sel = (times >= lo) & (times <= hi)
    n = int(sel.sum())
    if n < MIN_POINTS:
        raise ValueError(f"window [{lo}, {hi}] holds {n} samples, need >= {MIN_POINTS}")
    v = values[sel]
    if np.any(v <= 0):
        raise ValueError("values must be positive inside the fit window")
    x = np.log1p(times[sel])
    y = np.log(v)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise ValueError("window spans a single abscissa; cannot fit a slope")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    resid = y - (ym + slope * (x - xm))
    if n > 2:
        stderr = float(np.sqrt(np.sum(resid ** 2) / (n - 2) / sxx))
    else:
        stderr = 0.0
    saturated = t_box is not None and hi > t_box
    return FitResult(exponent=slope, stderr=stderr, window=(float(lo), float(hi)),
                     n_points=n, box_saturated=saturated)


def compare_rates(fit: FitResult, theoretical: float, tol: float,
                  one_sided: bool = False) -> FitResult:
    """Attach a verdict: |exp - theo| <= tol, or exp <= theo + tol when one-sided."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if one_sided:
        verdict = fit.exponent <= theoretical + tol
    else:
        verdict = abs(fit.exponent - theoretical) <= tol
    return FitResult(exponent=fit.exponent, stderr=fit.stderr, window=fit.window,
                     n_points=fit.n_points, theoretical=theoretical,
                     verdict=bool(verdict), box_saturated=fit.box_saturated)


def first_stable_window(times, values, n_windows: int = 8,
                        stability_tol: float = 0.05) -> dict | None:
    """First of n_windows sliding half-decade windows where the slope stops moving.

    Returns {window, exponent} for the earliest window whose fitted slope
    differs from the next window's by less than stability_tol, or None.  This
    is a descriptive report of when the asymptotic regime is entered; it makes
    no claim about any theoretical transition time.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    times, values = times[keep], values[keep]
    if len(times) < 3 * MIN_POINTS:
        return None
    starts = np.linspace(0, len(times) - 2 * MIN_POINTS, n_windows).astype(int)
    fits = []
    for s0 in starts:
        s1 = min(len(times) - 1, s0 + max(2 * MIN_POINTS, len(times) // n_windows))
        if times[s0] >= times[s1]:
            continue
        try:
            fits.append(fit_exponent(times, values, (times[s0], times[s1])))
        except ValueError:
            continue
    for a, b in zip(fits, fits[1:]):
        if abs(a.exponent - b.exponent) < stability_tol:
            return {"window": list(a.window), "exponent": a.exponent}
    return None
