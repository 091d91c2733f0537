"""Two-photon resonance calibration and bootstrap error bars.

A π-pulse of nominal Rabi frequency is applied to independent atoms while
the detuning is scanned; the excited fraction follows

    P_e(Δ) = Ω²/(Ω² + Δ²) · sin²(√(Ω² + Δ²) · t / 2),   t = π/Ω_nominal.

Fitting (Ω, shift) in P_e(Δ − shift) yields the calibrated Rabi frequency and
the systematic detuning shift; per-site fits give the spatial profile.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

log = logging.getLogger(__name__)

GRID_SPAN = 0.3
GRID_POINTS = 41


class CalibrationError(ValueError):
    pass


class DegenerateScanError(CalibrationError):
    """The scan carries no information about the resonance."""


class ConvergenceError(CalibrationError):
    pass


def excitation_probability(delta, omega: float, t_pulse: float | None = None):
    """Excited-state probability after a square pulse (π-pulse by default)."""
    if not omega > 0:
        raise CalibrationError("omega must be positive")
    t = np.pi / omega if t_pulse is None else t_pulse
    d = np.asarray(delta, dtype=float)
    w2 = omega**2 + d**2
    return omega**2 / w2 * np.sin(np.sqrt(w2) * t / 2) ** 2


@dataclass(eq=False)
class ResonanceScan:
    detunings: np.ndarray  # rad/µs
    excited_fractions: np.ndarray
    shots_per_point: int | np.ndarray = 200

    def __post_init__(self):
        self.detunings = np.asarray(self.detunings, dtype=float)
        self.excited_fractions = np.asarray(self.excited_fractions, dtype=float)
        if self.detunings.shape != self.excited_fractions.shape or self.detunings.ndim != 1:
            raise CalibrationError("detunings and fractions must be equal-length vectors")
        if np.any(self.excited_fractions < 0) or np.any(self.excited_fractions > 1):
            raise CalibrationError("excited fractions must lie in [0, 1]")
        shots = np.broadcast_to(np.asarray(self.shots_per_point, dtype=int), self.detunings.shape)
        if np.any(shots < 1):
            raise CalibrationError("shots per point must be positive")
        self.shots_per_point = shots.copy()

    def __len__(self):
        return len(self.detunings)

    @classmethod
    def synthetic(cls, detunings, omega: float, shift: float = 0.0, shots: int = 200,
                  seed: int | None = None, t_pulse: float | None = None) -> "ResonanceScan":
        """Scan from the model itself; binomial shot noise when ``seed`` is given."""
        p = excitation_probability(np.asarray(detunings, float) - shift, omega, t_pulse)
        if seed is not None:
            p = np.random.default_rng(seed).binomial(shots, p) / shots
        return cls(detunings, p, shots)

    def to_csv(self) -> str:
        lines = ["detuning_rad_per_us,excited_fraction,shots"]
        for d, f, n in zip(self.detunings, self.excited_fractions, self.shots_per_point):
            lines.append(f"{d:.12g},{f:.12g},{int(n)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "ResonanceScan":
        reader = csv.DictReader(io.StringIO(text))
        need = {"detuning_rad_per_us", "excited_fraction", "shots"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise CalibrationError(f"scan CSV needs columns {sorted(need)}")
        d, f, n = [], [], []
        for k, row in enumerate(reader, start=2):
            try:
                d.append(float(row["detuning_rad_per_us"]))
                f.append(float(row["excited_fraction"]))
                n.append(int(row["shots"]))
            except (TypeError, ValueError) as exc:
                raise CalibrationError(f"line {k}: {exc}") from None
        return cls(np.array(d), np.array(f), np.array(n))


@dataclass
class CalibrationFit:
    omega_cal: float
    detuning_shift: float
    residual: float
    sigma_omega: float = float("nan")
    sigma_shift: float = float("nan")
    n_iter: int = 0
    t_pulse: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "omega_cal_rad_per_us": self.omega_cal,
            "detuning_shift_rad_per_us": self.detuning_shift,
            "residual": self.residual,
            "sigma_omega_rad_per_us": self.sigma_omega,
            "sigma_shift_rad_per_us": self.sigma_shift,
            "t_pulse_us": self.t_pulse,
        }


def _residuals(params, scan, t, w):
    omega, shift = params
    return w * (excitation_probability(scan.detunings - shift, omega, t) - scan.excited_fractions)


def _weights(scan, weighted):
    if not weighted:
        return np.ones(len(scan))
    p = np.clip(scan.excited_fractions, 0.5 / scan.shots_per_point, 1 - 0.5 / scan.shots_per_point)
    return 1.0 / np.sqrt(p * (1 - p) / scan.shots_per_point)


def _refine(scan, start, t, w, max_iter, rtol):
    res = optimize.least_squares(_residuals, start, args=(scan, t, w), method="lm",
                                 xtol=rtol, ftol=1e-15, gtol=1e-15, max_nfev=max_iter * 3)
    if res.status <= 0 or not res.x[0] > 0:
        raise ConvergenceError(f"refinement did not converge: {res.message}")
    return res


def fit_resonance(scan: ResonanceScan, omega_guess: float, shift_guess: float = 0.0, *,
                  t_pulse: float | None = None, weighted: bool = False, max_iter: int = 200,
                  rtol: float = 1e-6, n_bootstrap: int = 0, seed: int = 0,
                  self_consistent_pulse: bool = False) -> CalibrationFit:
    """Least-squares fit of (Ω, shift).

    A coarse grid over ±30% of ``omega_guess`` (and the same half-width,
    in rad/µs, around ``shift_guess``) seeds a Levenberg–Marquardt refinement
    that stops once the relative step drops below ``rtol``. The pulse time is
    held at π/``omega_guess`` unless ``t_pulse`` is given. With
    ``self_consistent_pulse`` the nominal fit is refined once more with the
    pulse time tied to the fitted Ω, t = π/Ω. With ``n_bootstrap`` > 0 the
    1σ widths come from binomial resampling of every scan point.
    """
    if len(scan) < 5:
        raise CalibrationError("need at least five scan points")
    if not omega_guess > 0:
        raise CalibrationError("omega_guess must be positive")
    if np.ptp(scan.excited_fractions) < 1e-12:
        raise DegenerateScanError("flat scan: excited fraction does not vary")
    t = np.pi / omega_guess if t_pulse is None else t_pulse
    w = _weights(scan, weighted)
    half = GRID_SPAN * omega_guess
    omegas = np.linspace(omega_guess - half, omega_guess + half, GRID_POINTS)
    shifts = np.linspace(shift_guess - half, shift_guess + half, GRID_POINTS)
    best, start = np.inf, None
    for om in omegas:
        for s in shifts:
            c = float(np.sum(_residuals((om, s), scan, t, w) ** 2))
            if c < best:
                best, start = c, (om, s)
    res = _refine(scan, np.array(start), t, w, max_iter, rtol)
    if self_consistent_pulse and t_pulse is None:
        # the pulse time follows the fitted Ω inside the model
        res = _refine(scan, res.x, None, w, max_iter, rtol)
        t = np.pi / res.x[0]
    omega, shift = (float(v) for v in res.x)
    fit = CalibrationFit(omega, shift, float(np.sum(res.fun**2)), n_iter=int(res.nfev), t_pulse=float(t))
    if n_bootstrap:
        t_model = None if self_consistent_pulse and t_pulse is None else t
        fit.sigma_omega, fit.sigma_shift = _bootstrap_fit(scan, fit, t_model, weighted, max_iter, rtol,
                                                          n_bootstrap, seed)
    return fit


def _bootstrap_fit(scan, fit, t, weighted, max_iter, rtol, B, seed):
    if B < 100:
        raise CalibrationError("bootstrap needs B >= 100")
    rng = np.random.default_rng(seed)
    n = scan.shots_per_point
    out = []
    for _ in range(B):
        f = rng.binomial(n, scan.excited_fractions) / n
        rs = ResonanceScan(scan.detunings, f, n)
        if np.ptp(f) < 1e-12:
            continue
        try:
            r = _refine(rs, np.array([fit.omega_cal, fit.detuning_shift]), t, _weights(rs, weighted),
                        max_iter, rtol)
        except ConvergenceError:
            continue
        out.append(r.x)
    if len(out) < 2:
        raise ConvergenceError("bootstrap refits failed")
    out = np.array(out)
    return float(np.std(out[:, 0], ddof=1)), float(np.std(out[:, 1], ddof=1))


def bootstrap_sigma(samples, statistic=np.mean, B: int = 1000, seed: int = 0) -> float:
    """Standard deviation of ``statistic`` over ``B`` with-replacement resamples."""
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise CalibrationError("bootstrap needs at least two samples")
    if B < 100:
        raise CalibrationError("bootstrap needs B >= 100")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(x), size=(B, len(x)))
    vals = np.array([statistic(x[row]) for row in idx], dtype=float)
    return float(np.std(vals, ddof=1))


@dataclass
class SiteCalibration:
    """Per-site fits of the spatial detuning profile.

    ``offsets`` are local detuning offsets relative to the array mean:
    a site whose resonance appears at +s sees an extra detuning −s.
    """

    shifts: np.ndarray
    sigma_shifts: np.ndarray
    offsets: np.ndarray
    sigma_offsets: np.ndarray
    omegas: np.ndarray
    failed: list[int] = field(default_factory=list)
    errors: dict[int, str] = field(default_factory=dict)

    @property
    def global_shift(self) -> float:
        ok = np.isfinite(self.shifts)
        return float(self.shifts[ok].mean())

    def to_dict(self) -> dict:
        def col(v):
            return [None if not np.isfinite(x) else float(x) for x in v]
        return {"shifts_rad_per_us": col(self.shifts), "sigma_shifts_rad_per_us": col(self.sigma_shifts),
                "offsets_rad_per_us": col(self.offsets), "sigma_offsets_rad_per_us": col(self.sigma_offsets),
                "omega_cal_rad_per_us": col(self.omegas), "failed_sites": self.failed}


def site_detuning_bootstrap(scans, omega_guess: float, shift_guess: float = 0.0, *,
                            n_bootstrap: int = 200, seed: int = 0, **fit_kw) -> SiteCalibration:
    """Fit every site's scan independently and turn the shifts into offsets.

    A site whose fit fails is flagged in ``failed`` with NaN entries; the
    remaining sites are unaffected.
    """
    from .disorder import derive_seed

    L = len(scans)
    shifts, sig, omegas = np.full(L, np.nan), np.full(L, np.nan), np.full(L, np.nan)
    failed, errors = [], {}
    for i, scan in enumerate(scans):
        try:
            f = fit_resonance(scan, omega_guess, shift_guess, n_bootstrap=n_bootstrap,
                              seed=derive_seed(seed, i), **fit_kw)
        except CalibrationError as exc:
            failed.append(i)
            errors[i] = str(exc)
            log.warning("site %d calibration failed: %s", i, exc)
            continue
        shifts[i], sig[i], omegas[i] = f.detuning_shift, f.sigma_shift, f.omega_cal
    ok = np.isfinite(shifts)
    if not ok.any():
        raise CalibrationError("calibration failed on every site")
    n = ok.sum()
    offsets = np.where(ok, -(shifts - shifts[ok].mean()), np.nan)
    # the subtracted mean shares each site's own error
    var_mean = np.sum(sig[ok] ** 2) / n**2
    sig_off = np.where(ok, np.sqrt(np.maximum(sig**2 * (1 - 2 / n) + var_mean, 0.0)), np.nan)
    return SiteCalibration(shifts, sig, offsets, sig_off, omegas, failed, errors)
