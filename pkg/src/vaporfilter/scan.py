"""Full filter-spectrum simulations, tunability sweeps and metric extraction."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .atomic_data import AtomSpec, VelocityGrid, doppler_sigma
from .dichroism import (
    DichroicAbsorption,
    absorption_coefficients,
    calibrate_od_scale,
)
from .fitting import FitError, fit_gaussian_sum2, fit_lorentzian
from .polarization import filter_outputs
from .pumping import PopulationField, steady_state_populations

__all__ = [
    "FilterSpectrum",
    "TunabilityResult",
    "PipelineResult",
    "StageError",
    "CalibrationError",
    "simulate_spectrum",
    "run_pipeline",
    "measure_linewidth",
    "extinction_db",
    "tunability_scan",
    "calibrate_to_targets",
]

EXTINCTION_CAP_DB = 99.0


class StageError(RuntimeError):
    """Pipeline failure carrying the stage label where it occurred."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class FilterSpectrum:
    """Normalized outputs of the two ports versus probe detuning."""

    detunings: np.ndarray
    t_v: np.ndarray = field(repr=False)
    t_h: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name, arr in (("t_v", self.t_v), ("t_h", self.t_h)):
            if arr.shape != self.detunings.shape:
                raise ValueError(f"{name} does not match the detuning grid")
            if np.any(arr < 0) or np.any(arr > 1):
                raise ValueError(f"{name} out of [0, 1]")


@dataclass(frozen=True)
class TunabilityResult:
    pump_detunings: np.ndarray
    peak_centers: np.ndarray
    peak_transmissions: np.ndarray
    resolved: np.ndarray

    def __post_init__(self):
        n = len(self.pump_detunings)
        for name in ("peak_centers", "peak_transmissions", "resolved"):
            if len(getattr(self, name)) != n:
                raise ValueError("tunability arrays must have equal length")
        good = self.peak_transmissions[self.resolved]
        if np.any(good < 0) or np.any(good > 1):
            raise ValueError("peak transmissions out of [0, 1]")


@dataclass(frozen=True)
class PipelineResult:
    spectrum: FilterSpectrum
    absorption: DichroicAbsorption
    populations: PopulationField
    od_scale: float


# ---------------------------------------------------------------------------
# probe grids
# ---------------------------------------------------------------------------

def build_probe_grid(lo, hi, fine_halfwidth, fine_step, coarse_step, centers):
    """Piecewise grid: fine pitch around each line center, coarse elsewhere."""
    if hi <= lo:
        raise ValueError("probe grid bounds are inverted")
    parts = [np.arange(lo, hi + 0.5 * coarse_step, coarse_step)]
    for c in centers:
        parts.append(np.arange(c - fine_halfwidth, c + fine_halfwidth + 0.5 * fine_step,
                               fine_step))
    grid = np.unique(np.round(np.concatenate(parts), 9))
    return grid[(grid >= lo) & (grid <= hi)]


def _probe_grid_for(cfg):
    p = cfg.probe
    centers = [0.0, cfg.atom.excited_splitting]
    return build_probe_grid(p.min_mhz, p.max_mhz, p.fine_halfwidth_mhz,
                            p.fine_step_mhz, p.coarse_step_mhz, centers)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def run_pipeline(cfg, probe_grid=None) -> PipelineResult:
    """steady_state_populations -> absorption_coefficients -> filter_outputs."""
    atom = cfg.atom
    try:
        grid = VelocityGrid.build(atom, cfg.cell.temperature,
                                  cfg.velocity.span_sigmas, cfg.velocity.points)
    except Exception as exc:
        raise StageError("velocity-grid", str(exc)) from exc
    try:
        pops = steady_state_populations(grid, cfg.pump, cfg.relaxation, atom)
    except Exception as exc:
        raise StageError("pumping", str(exc)) from exc
    try:
        scale = calibrate_od_scale(cfg.cell, atom, grid, cfg.background)
        delta = _probe_grid_for(cfg) if probe_grid is None else np.asarray(probe_grid, float)
        absorption = absorption_coefficients(pops, cfg.pump, cfg.cell, atom,
                                             delta, scale, cfg.background)
    except StageError:
        raise
    except Exception as exc:
        raise StageError("dichroism", str(exc)) from exc
    try:
        t_h, t_v = filter_outputs(absorption.alpha_r, absorption.alpha_l,
                                  cfg.interferometer)
        spectrum = FilterSpectrum(detunings=absorption.detunings, t_v=t_v, t_h=t_h)
    except Exception as exc:
        raise StageError("polarization", str(exc)) from exc
    return PipelineResult(spectrum=spectrum, absorption=absorption,
                          populations=pops, od_scale=scale)


def simulate_spectrum(cfg, probe_grid=None) -> FilterSpectrum:
    return run_pipeline(cfg, probe_grid).spectrum


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def _floor_estimate(cfg) -> float:
    """Out-of-band leakage floor of the V port."""
    return cfg.interferometer.window_transmission * cfg.interferometer.polarizer_extinction


def find_peaks(spec: FilterSpectrum, threshold: float):
    """Indices of local maxima of t_v above threshold, sorted by detuning."""
    y = spec.t_v
    idx = [i for i in range(1, len(y) - 1)
           if y[i - 1] < y[i] >= y[i + 1] and y[i] > threshold]
    return idx


def _feature_window(detunings, values, i_peak, widths=1.5):
    """Window of +-widths nominal (half-max) widths around a peak."""
    n_tail = max(len(values) // 8, 2)
    base = float(np.median(np.sort(values)[:n_tail]))
    half = base + 0.5 * (values[i_peak] - base)
    lo = i_peak
    while lo > 0 and values[lo] > half:
        lo -= 1
    hi = i_peak
    while hi < len(values) - 1 and values[hi] > half:
        hi += 1
    nominal = detunings[hi] - detunings[lo]
    mask = np.abs(detunings - detunings[i_peak]) <= widths * nominal
    return mask


def measure_linewidth(spec: FilterSpectrum, which_peak: int = 0,
                      floor: float = 0.0) -> float:
    """FWHM (MHz) of one transmission peak from a Lorentzian fit over a
    +-1.5-nominal-width window.  Peaks are indexed in order of detuning."""
    peaks = find_peaks(spec, 10.0 * floor)
    if not peaks:
        raise FitError("no transmission peak above the floor")
    if which_peak >= len(peaks):
        raise FitError(f"peak index {which_peak} out of range ({len(peaks)} found)")
    i_peak = peaks[which_peak]
    mask = _feature_window(spec.detunings, spec.t_v, i_peak)
    result = fit_lorentzian(spec.detunings[mask], spec.t_v[mask])
    if not result.converged:
        raise FitError(
            f"linewidth fit did not converge after {result.iterations} iterations "
            f"(rms {result.residual_rms:.3e}, params {result.params})")
    return float(result.params[1])


def extinction_db(spec: FilterSpectrum, band) -> float:
    """10 log10(peak transmission / max t_v inside the out-of-band interval)."""
    lo, hi = band
    if hi <= lo:
        raise ValueError("empty out-of-band interval")
    mask = (spec.detunings >= lo) & (spec.detunings <= hi)
    if not np.any(mask):
        raise ValueError(f"band [{lo}, {hi}] MHz contains no grid points")
    peak = float(spec.t_v.max())
    out = float(spec.t_v[mask].max())
    if out <= 0.0:
        return EXTINCTION_CAP_DB
    return min(10.0 * np.log10(peak / out), EXTINCTION_CAP_DB)


# ---------------------------------------------------------------------------
# tunability
# ---------------------------------------------------------------------------

def _locate_feature(detunings, t_v, floor):
    """(center, height, resolved) of the strongest feature via Lorentzian fit."""
    i_peak = int(np.argmax(t_v))
    if t_v[i_peak] < 3.0 * floor:
        return float("nan"), float(t_v[i_peak]), False
    mask = _feature_window(detunings, t_v, i_peak)
    try:
        result = fit_lorentzian(detunings[mask], t_v[mask])
        if not result.converged:
            raise FitError("unconverged")
        center = float(result.params[0])
        height = float(result.params[2] + result.params[3])
    except FitError:
        return float(detunings[i_peak]), float(t_v[i_peak]), True
    return center, height, True


def tunability_scan(pump_detunings, cfg, threads: int | None = None) -> TunabilityResult:
    """Sweep the pump detuning and track the transmission peak in the
    F'=1 Doppler region.

    Entries are independent jobs assembled in input order; results are
    bit-identical independent of the worker count.
    """
    dps = np.asarray(pump_detunings, dtype=float)
    limit = 1.2 * 2.3548200450309493 * doppler_sigma(cfg.atom, cfg.cell.temperature)
    if np.any(np.abs(dps) > limit):
        raise ValueError(
            f"pump detunings beyond +-1.2 Doppler FWHM (+-{limit:.0f} MHz)")

    # search region: around the expected feature range, capped below the
    # second probe line so the F'=2 peak is never picked up
    half = min(float(np.abs(dps).max()) + 150.0, cfg.atom.excited_splitting - 60.0)
    region = np.arange(-half, half + 0.5 * cfg.probe.fine_step_mhz,
                       cfg.probe.fine_step_mhz)
    floor = _floor_estimate(cfg)

    def one(dp):
        local = replace(cfg, pump=replace(cfg.pump, detuning=float(dp)))
        spec = simulate_spectrum(local, probe_grid=region)
        return _locate_feature(spec.detunings, spec.t_v, floor)

    if threads is not None and threads != 1:
        workers = threads if threads > 0 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, dps))
    else:
        rows = [one(dp) for dp in dps]

    centers = np.array([r[0] for r in rows])
    heights = np.array([r[1] for r in rows])
    resolved = np.array([r[2] for r in rows], dtype=bool)
    return TunabilityResult(pump_detunings=dps, peak_centers=centers,
                            peak_transmissions=heights, resolved=resolved)


def tunability_metrics(result: TunabilityResult, excited_splitting: float,
                       slope_window: float = 250.0) -> dict:
    """Slope/intercept of center vs pump detuning and the two-Gaussian
    envelope fit of peak transmission."""
    ok = result.resolved
    d = result.pump_detunings[ok]
    c = result.peak_centers[ok]
    h = result.peak_transmissions[ok]
    metrics = {}
    m = np.abs(d) <= slope_window
    if m.sum() >= 2:
        coeffs = np.polynomial.polynomial.polyfit(d[m], c[m], 1)
        metrics["slope"] = float(coeffs[1])
        metrics["intercept_mhz"] = float(coeffs[0])
    if len(d) >= 14:
        fit = fit_gaussian_sum2(d, h, separation_hint=excited_splitting)
        c1, s1, a1, c2, s2, a2, off = fit.params
        metrics["gaussian_centers_mhz"] = [float(c1), float(c2)]
        metrics["gaussian_sigmas_mhz"] = [float(s1), float(s2)]
        metrics["gaussian_amplitudes"] = [float(a1), float(a2)]
        metrics["gaussian_offset"] = float(off)
        metrics["gaussian_separation_mhz"] = float(abs(c2 - c1))
        metrics["gaussian_fit_rms"] = float(fit.residual_rms)
        metrics["gaussian_fit_rms_relative"] = float(fit.residual_rms / h.max())
        metrics["gaussian_fit_flags"] = list(fit.flags)
    return metrics


# ---------------------------------------------------------------------------
# calibration against the measured reference point
# ---------------------------------------------------------------------------

def _calibration_grid(atom: AtomSpec) -> np.ndarray:
    # wide enough to measure Doppler-broad trajectories during root finding
    return np.arange(-900.0, 900.0 + 1.5, 3.0)


def calibrate_to_targets(cfg):
    """Fix the optical-depth scale exactly and root-find the pump saturation
    parameter so the fitted feature width matches the configured target.

    Returns (calibrated config, report dict).  The dichroic contrast cannot
    be pinned independently (the pump intensity behind the measured reference
    values is not known), so achieved contrast is reported next to the
    reference values instead of being fitted.
    """
    cal = cfg.calibration
    atom = cfg.atom
    grid = VelocityGrid.build(atom, cfg.cell.temperature,
                              cfg.velocity.span_sigmas, cfg.velocity.points)
    od_scale = calibrate_od_scale(cfg.cell, atom, grid, cfg.background)

    # exact-by-construction check of the OD anchor
    from .dichroism import _unscaled_alpha  # internal reuse, same code path
    thermal = PopulationField.thermal(grid, atom)
    q_r, _ = cfg.cell.probe_labels()
    od_unpumped = od_scale * _unscaled_alpha(np.array([0.0]), thermal, cfg.cell,
                                             atom, q_r, cfg.background)[0]

    probe = _calibration_grid(atom)

    def fwhm_for(s):
        local = replace(cfg, pump=replace(cfg.pump, saturation_parameter=float(s)))
        spec = simulate_spectrum(local, probe_grid=probe)
        i_peak = int(np.argmax(spec.t_v))
        mask = _feature_window(spec.detunings, spec.t_v, i_peak)
        fit = fit_lorentzian(spec.detunings[mask], spec.t_v[mask])
        return float(fit.params[1])

    target = cal.target_fwhm_mhz
    s_lo, s_hi = cal.s_bracket
    try:
        f_lo = fwhm_for(s_lo) - target
        f_hi = fwhm_for(s_hi) - target
        if f_lo * f_hi > 0:
            raise CalibrationError(
                f"width target {target} MHz not bracketed on s in [{s_lo}, {s_hi}]: "
                f"endpoint widths {f_lo + target:.2f} / {f_hi + target:.2f} MHz")
        s_star = brentq(lambda s: fwhm_for(s) - target, s_lo, s_hi,
                        xtol=1e-9, rtol=1e-9)
    except CalibrationError:
        raise
    except Exception as exc:
        raise CalibrationError(f"saturation-parameter root find failed: {exc}") from exc

    achieved_fwhm = fwhm_for(s_star)
    if abs(achieved_fwhm - target) > 1.0:
        raise CalibrationError(
            f"calibrated width {achieved_fwhm:.3f} MHz misses target {target} by > 1 MHz")

    calibrated = replace(cfg, pump=replace(cfg.pump, saturation_parameter=float(s_star)))
    metrics = spectrum_metrics(calibrated)
    report = {
        "od_unpumped": float(od_unpumped),
        "od_scale": float(od_scale),
        "saturation_parameter": float(s_star),
        "transit_rate_hz": cfg.relaxation.transit_rate,
        "bracket": [s_lo, s_hi],
        "achieved": {
            "fwhm_mhz": achieved_fwhm,
            "alpha_r_peak": metrics["alpha_r_peak"],
            "alpha_l_peak": metrics["alpha_l_peak"],
            "alpha_ratio": metrics["alpha_ratio"],
            "peak_transmission": metrics["peak_transmission"],
        },
        "reference": {
            "od": cfg.cell.target_od,
            "fwhm_mhz": target,
            "alpha_r": cal.reference_alpha_r,
            "alpha_l": cal.reference_alpha_l,
            "peak_transmission": cal.reference_peak_transmission,
        },
    }
    return calibrated, report


def spectrum_metrics(cfg, result: PipelineResult | None = None) -> dict:
    """Headline metrics of one spectrum run (used by the command layer)."""
    if result is None:
        result = run_pipeline(cfg)
    spec = result.spectrum
    floor = _floor_estimate(cfg)
    metrics = {
        "od_unpumped": cfg.cell.target_od,
        "peak_transmission": float(spec.t_v.max()),
        "peak_center_mhz": float(spec.detunings[int(np.argmax(spec.t_v))]),
        "flags": [],
    }
    i0 = int(np.argmin(np.abs(result.absorption.detunings)))
    metrics["alpha_r_peak"] = float(result.absorption.alpha_r[i0])
    metrics["alpha_l_peak"] = float(result.absorption.alpha_l[i0])
    metrics["alpha_ratio"] = (metrics["alpha_r_peak"] / metrics["alpha_l_peak"]
                              if metrics["alpha_l_peak"] > 0 else float("inf"))
    if metrics["peak_transmission"] < 3.0 * floor:
        metrics["flags"].append("no dichroic feature")
        metrics["fwhm_mhz"] = None
    else:
        try:
            metrics["fwhm_mhz"] = measure_linewidth(spec, which_peak=0, floor=floor)
        except FitError as exc:
            metrics["flags"].append(f"linewidth fit failed: {exc}")
            metrics["fwhm_mhz"] = None
    lo, hi = spec.detunings[0], spec.detunings[-1]
    bands = [(lo, -3000.0), (3000.0, hi)]
    ext = [extinction_db(spec, b) for b in bands if b[1] > b[0]
           and np.any((spec.detunings >= b[0]) & (spec.detunings <= b[1]))]
    metrics["extinction_db_beyond_3ghz"] = min(ext) if ext else None
    return metrics
