"""Lightcone fronts and growth-law fits."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .observables import CorrelatorMatrix, ObservableSeries

DEFAULT_THRESHOLD = 0.03
DEFAULT_DELTA_R_GRID = tuple(np.round(np.arange(0.02, 0.30 + 1e-9, 0.02), 10))


class FitError(ValueError):
    pass


class EmptyFrontError(FitError):
    """No distance reaches the threshold."""


@dataclass
class FrontPoints:
    times: np.ndarray  # first-arrival time per distance, µs
    distances: np.ndarray  # µm
    threshold: float
    violations: list[int] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["arrival_time_us,distance_um"]
        lines += [f"{t:.12g},{r:.12g}" for t, r in zip(self.times, self.distances)]
        return "\n".join(lines) + "\n"


def extract_front(corr: CorrelatorMatrix, threshold: float = DEFAULT_THRESHOLD, a: float = 1.0) -> FrontPoints:
    """First time |G_r(t)| reaches ``threshold`` for every distance r.

    Crossings are linearly interpolated between neighbouring samples.
    Distances that never reach the threshold are left out; a front that is
    not monotone in distance is reported through ``violations``.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    t = corr.times
    vals = np.abs(corr.values)
    times, dists = [], []
    for j, r in enumerate(corr.distances):
        col = vals[:, j]
        hit = np.flatnonzero(col >= threshold)
        if len(hit) == 0:
            continue
        k = hit[0]
        if k == 0:
            tc = t[0]
        else:
            y0, y1 = col[k - 1], col[k]
            tc = t[k - 1] + (threshold - y0) / (y1 - y0) * (t[k] - t[k - 1])
        times.append(tc)
        dists.append(r * a)
    if not times:
        raise EmptyFrontError(f"no distance reaches |G| >= {threshold}")
    times = np.array(times)
    violations = [int(i) for i in np.flatnonzero(np.diff(times) < 0) + 1]
    return FrontPoints(times, np.array(dists, dtype=float), threshold, violations)


@dataclass
class PowerLawFit:
    amplitude: float
    exponent: float
    r2: float
    cov: np.ndarray  # covariance of (log A, exponent)

    def __call__(self, t):
        return self.amplitude * np.asarray(t, dtype=float) ** self.exponent


@dataclass
class LogFit:
    slope: float
    intercept: float
    r2: float

    def __call__(self, t):
        return self.slope * np.log(np.asarray(t, dtype=float)) + self.intercept


def _linear_fit(x, y, w=None):
    x, y = np.asarray(x, float), np.asarray(y, float)
    X = np.stack([np.ones_like(x), x], axis=1)
    W = np.ones_like(x) if w is None else np.asarray(w, float)
    sw = np.sqrt(W)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = y - X @ coef
    ss_res = float(np.sum(W * resid**2))
    ss_tot = float(np.sum(W * (y - np.average(y, weights=W)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res < 1e-24 else 0.0)
    dof = max(len(x) - 2, 1)
    cov = np.linalg.pinv(X.T @ (X * W[:, None])) * ss_res / dof
    return coef, min(max(r2, 0.0), 1.0), cov


def _points(points_or_t, y=None):
    if isinstance(points_or_t, FrontPoints):
        return points_or_t.times, points_or_t.distances
    return np.asarray(points_or_t, float), np.asarray(y, float)


def fit_power_law(points_or_t, y=None, sigma=None) -> PowerLawFit:
    """Least-squares line through (log t, log y), i.e. y = A t^α.

    ``sigma`` (absolute errors on y) turns on inverse-variance weighting in
    log space.
    """
    t, yv = _points(points_or_t, y)
    if len(t) < 3:
        raise FitError("need at least three points")
    if np.any(t <= 0) or np.any(yv <= 0):
        raise FitError("power-law fit needs positive data")
    w = None if sigma is None else (yv / np.asarray(sigma, float)) ** 2
    coef, r2, cov = _linear_fit(np.log(t), np.log(yv), w)
    return PowerLawFit(float(np.exp(coef[0])), float(coef[1]), r2, cov)


def fit_line(points_or_t, y=None) -> tuple[float, float]:
    """(slope, intercept) of an ordinary least-squares line."""
    t, yv = _points(points_or_t, y)
    coef, _, _ = _linear_fit(t, yv)
    return float(coef[1]), float(coef[0])


def _window(series, window):
    if isinstance(series, ObservableSeries):
        t, y = series.times, series.mean
    else:
        t, y = (np.asarray(v, float) for v in series)
    lo, hi = (t[0], t[-1]) if window is None else window
    m = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    return t[m], y[m]


def fit_log_growth(series, window=None, weighted: bool = False) -> LogFit:
    """y = slope · ln t + intercept over ``window``.

    ``weighted`` uses inverse-variance weights from the series sem.
    """
    t, y = _window(series, window)
    if len(t) < 3 or np.any(t <= 0):
        raise FitError("need at least three positive times in the window")
    w = None
    if weighted:
        if not isinstance(series, ObservableSeries):
            raise FitError("weighted fit needs an ObservableSeries")
        _, sem = _window((series.times, series.sem), window)
        if np.any(sem <= 0):
            raise FitError("weighted fit needs a positive sem everywhere in the window")
        w = 1.0 / sem**2
    coef, r2, _ = _linear_fit(np.log(t), y, w)
    return LogFit(float(coef[1]), float(coef[0]), r2)


def _r2(y, yhat):
    ss_tot = np.sum((y - y.mean()) ** 2)
    return float(1.0 - np.sum((y - yhat) ** 2) / ss_tot) if ss_tot > 0 else 1.0


def model_select(series, window=None, tie_tol: float = 1e-12) -> dict:
    """Compare logarithmic and power-law growth on the same window.

    Both models are scored by r² of their predictions against the raw values,
    so the two numbers live in the same space.
    """
    t, y = _window(series, window)
    log_fit = fit_log_growth((t, y))
    pow_fit = fit_power_law(t, y)
    r2_log = _r2(y, log_fit(t))
    r2_pow = _r2(y, pow_fit(t))
    delta = r2_log - r2_pow
    if abs(delta) <= tie_tol:
        better, delta = "tie", 0.0
    else:
        better = "log" if delta > 0 else "power"
    return {"better": better, "delta_r2": float(delta), "r2_log": r2_log, "r2_power": r2_pow,
            "log_fit": log_fit, "power_fit": pow_fit}


def fit_summary(front: FrontPoints, power: PowerLawFit, speed: float) -> str:
    return json.dumps({
        "threshold": front.threshold,
        "n_points": int(len(front.times)),
        "monotone_violations": front.violations,
        "power_law": {"amplitude_um": power.amplitude, "exponent": power.exponent, "r2": power.r2},
        "linear_front_speed_um_per_us": speed,
    }, indent=2)


@dataclass
class DeltaRFit:
    best: float  # µm
    grid: np.ndarray
    misfit: np.ndarray  # mean-squared deviation per candidate

    def to_dict(self) -> dict:
        return {"best_delta_r_um": self.best,
                "grid_um": [float(g) for g in self.grid],
                "misfit": [float(m) for m in self.misfit]}


def fit_delta_r(reference: ObservableSeries, protocol, a: float, grid=DEFAULT_DELTA_R_GRID, *,
                n_sites: int = 12, n_realizations: int = 20, master_seed: int = 0,
                observable: str = "qfi_density", stride: int = 1, threads: int = 1,
                **spec_kw) -> DeltaRFit:
    """Grid search for the minimal-model δr that best reproduces ``reference``.

    Every candidate is scored by the mean-squared deviation between its
    ensemble mean and the reference, after interpolating onto the reference
    times. All candidates share ``master_seed``, so they see the same
    underlying standard-normal draws and the misfit curve is smooth in δr.
    """
    from .evolve.run import EnsembleSpec, run_quench

    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise FitError("empty δr grid")
    misfit = []
    for dr in grid:
        spec = EnsembleSpec(tag="minimal", n_sites=n_sites, a=a, delta_r=float(dr), **spec_kw)
        res = run_quench(protocol, spec, n_realizations, (observable,), master_seed, stride,
                         threads=threads)
        sim = res[observable]
        y = np.interp(reference.times, sim.times, sim.mean)
        misfit.append(float(np.mean((y - reference.mean) ** 2)))
    misfit = np.array(misfit)
    return DeltaRFit(float(grid[int(np.argmin(misfit))]), grid, misfit)


def front_speed(front: FrontPoints) -> float:
    """Slope (µm/µs) of a straight line through the front points."""
    if len(front.times) < 2:
        raise FitError("need at least two front points")
    return fit_line(front.times, front.distances)[0]
