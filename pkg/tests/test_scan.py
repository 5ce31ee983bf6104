"""Spectrum orchestration, metric extraction and tunability."""

import numpy as np
import pytest
from dataclasses import replace

from vaporfilter import FilterSpectrum, extinction_db, measure_linewidth, simulate_spectrum
from vaporfilter.fitting import lorentzian_model
from vaporfilter.scan import (
    build_probe_grid,
    find_peaks,
    run_pipeline,
    spectrum_metrics,
    tunability_metrics,
    tunability_scan,
)


def test_probe_grid_is_piecewise_and_sorted():
    grid = build_probe_grid(-3600, 4400, 300, 2.0, 20.0, [0.0, 814.5])
    assert np.all(np.diff(grid) > 0)
    fine = grid[(grid >= -300) & (grid <= 300)]
    assert np.max(np.diff(fine)) <= 2.0 + 1e-9
    wings = grid[grid < -400]
    assert np.min(np.diff(wings)) >= 2.0
    assert grid[0] >= -3600 and grid[-1] <= 4400


def test_no_pump_means_dark_port(default_cfg):
    cfg = replace(default_cfg, pump=replace(default_cfg.pump, saturation_parameter=0.0))
    spec = simulate_spectrum(cfg, probe_grid=np.arange(-600.0, 1400.0, 10.0))
    ceiling = cfg.interferometer.window_transmission * cfg.interferometer.polarizer_extinction
    assert np.all(spec.t_v <= ceiling + 1e-15)


def test_default_spectrum_has_two_peaks(default_cfg, default_result):
    spec = default_result.spectrum
    floor = (default_cfg.interferometer.window_transmission
             * default_cfg.interferometer.polarizer_extinction)
    peaks = find_peaks(spec, 10.0 * floor)
    assert len(peaks) == 2
    centers = spec.detunings[peaks]
    assert abs(centers[0]) < 10.0
    assert abs(centers[1] - default_cfg.atom.excited_splitting) < 10.0


def test_default_peak_transmission_window(default_result):
    """The measured reference point is a 14.6% peak; the model is expected to
    land within [0.10, 0.20] of it.

    Known model gap: with the optical depth anchored at 1.1 and relaxation
    toward the 8-level thermal state, at most ~half of the population can be
    parked in the stretched state, capping the peak near 0.084.  Reaching the
    measured value would need a repump mechanism the model does not contain.
    See the decisions ledger.
    """
    peak = float(default_result.spectrum.t_v.max())
    assert 0.10 <= peak <= 0.20, (
        f"peak transmission {peak:.4f} outside [0.10, 0.20]: the rate-equation "
        "model caps the stretched-state population (documented model gap)")


def test_measure_linewidth_recovers_synthetic_lorentzian():
    xs = np.arange(-400.0, 400.0, 2.0)
    ys = lorentzian_model.eval(np.array([0.0, 80.0, 0.146, 1e-5]), xs)
    spec = FilterSpectrum(detunings=xs, t_v=ys, t_h=np.full_like(xs, 0.2))
    assert measure_linewidth(spec) == pytest.approx(80.0, abs=0.01)


def test_default_linewidth_near_target(default_cfg, default_result):
    floor = (default_cfg.interferometer.window_transmission
             * default_cfg.interferometer.polarizer_extinction)
    fwhm = measure_linewidth(default_result.spectrum, which_peak=0, floor=floor)
    assert fwhm == pytest.approx(80.0, abs=12.0)


def test_linewidth_grows_with_saturation(default_cfg):
    probe = np.arange(-1400.0, 1401.0, 4.0)
    widths = []
    for s in (50.0, 176.8, 400.0):
        cfg = replace(default_cfg, pump=replace(default_cfg.pump, saturation_parameter=s))
        spec = simulate_spectrum(cfg, probe_grid=probe)
        widths.append(measure_linewidth(spec, which_peak=0, floor=1e-5))
    assert widths[0] < widths[1] < widths[2]


def test_extinction_sentinel_for_zero_floor():
    xs = np.arange(-4000.0, 4001.0, 50.0)
    t_v = np.where(np.abs(xs) < 100, 0.1, 0.0)
    spec = FilterSpectrum(detunings=xs, t_v=t_v, t_h=np.full_like(xs, 0.9))
    assert extinction_db(spec, (3000.0, 4000.0)) == 99.0


def test_extinction_closed_form_floor():
    # leakage model: floor at T_w * eps against a 14.4% peak
    xs = np.arange(-4000.0, 4001.0, 50.0)
    t_v = np.full_like(xs, 0.95e-5)
    t_v[np.abs(xs) < 60] = 0.144
    spec = FilterSpectrum(detunings=xs, t_v=t_v, t_h=np.full_like(xs, 0.9))
    want = 10 * np.log10(0.144 / 0.95e-5)
    assert extinction_db(spec, (3000.0, 4000.0)) == pytest.approx(want, abs=1e-9)
    assert want == pytest.approx(41.8, abs=0.1)


def test_extinction_default_config(default_result):
    spec = default_result.spectrum
    lo = extinction_db(spec, (float(spec.detunings[0]), -3000.0))
    hi = extinction_db(spec, (3000.0, float(spec.detunings[-1])))
    assert min(lo, hi) >= 35.0


def test_extinction_rejects_empty_band(default_result):
    with pytest.raises(ValueError):
        extinction_db(default_result.spectrum, (100.0, 100.0))
    with pytest.raises(ValueError):
        extinction_db(default_result.spectrum, (99000.0, 99500.0))


def test_floor_matches_leakage_model(default_cfg, default_result):
    spec = default_result.spectrum
    ab = default_result.absorption
    eps = default_cfg.interferometer.polarizer_extinction
    t_w = default_cfg.interferometer.window_transmission
    far = np.abs(spec.detunings) > 3000.0
    a_p = 0.5 * (ab.alpha_r[far] + ab.alpha_l[far])
    a_m = 0.5 * (ab.alpha_r[far] - ab.alpha_l[far])
    ideal_v = t_w * np.exp(-a_p) * np.sinh(0.5 * a_m) ** 2
    ideal_h = t_w * np.exp(-a_p) * np.cosh(0.5 * a_m) ** 2
    predicted = ideal_v * (1 - eps) + ideal_h * eps
    np.testing.assert_allclose(spec.t_v[far], predicted, rtol=1e-8)


# ---------------------------------------------------------------------------
# tunability
# ---------------------------------------------------------------------------

def test_tunability_zero_detuning_center(default_cfg):
    result = tunability_scan([0.0], default_cfg)
    assert result.resolved[0]
    assert result.peak_centers[0] == pytest.approx(0.0, abs=2.0)


def test_tunability_center_tracks_pump(default_cfg):
    """Pump at +200 MHz: the peak is expected at -200 +- 5 MHz.

    Known model gap: the Doppler envelope tilts the pumped feature and pulls
    the fitted center about 5-6 MHz toward zero at this detuning, just past
    the 5 MHz bound.  The tracking slope itself stays within 5% of -1.  See
    the decisions ledger.
    """
    result = tunability_scan([200.0], default_cfg)
    assert result.peak_centers[0] == pytest.approx(-200.0, abs=5.0), (
        f"center {result.peak_centers[0]:.2f}; Doppler-envelope pull exceeds "
        "the 5 MHz bound at +200 MHz pump detuning (documented model gap)")


def test_tunability_transmission_envelope(default_cfg, tune_600):
    h = tune_600.peak_transmissions
    d = tune_600.pump_detunings
    i_max = int(np.argmax(h))
    assert abs(d[i_max]) <= 25.0
    # decreasing toward -400 on the red side and dropping at +400 as well
    for sign in (-1, 1):
        sel = [np.flatnonzero(d == sign * x)[0] for x in (0.0, 200.0, 400.0)]
        assert h[sel[0]] > h[sel[1]] > h[sel[2]]


def test_tunability_slope(default_cfg, tune_600):
    metrics = tunability_metrics(tune_600, default_cfg.atom.excited_splitting)
    assert metrics["slope"] == pytest.approx(-1.0, abs=0.05)
    assert metrics["intercept_mhz"] == pytest.approx(0.0, abs=3.0)


def test_tunability_thread_count_invariance(default_cfg):
    dps = np.arange(-100.0, 101.0, 50.0)
    serial = tunability_scan(dps, default_cfg, threads=1)
    threaded = tunability_scan(dps, default_cfg, threads=3)
    np.testing.assert_array_equal(serial.peak_centers, threaded.peak_centers)
    np.testing.assert_array_equal(serial.peak_transmissions,
                                  threaded.peak_transmissions)


def test_tunability_rejects_out_of_range_pump(default_cfg):
    with pytest.raises(ValueError):
        tunability_scan([900.0], default_cfg)


def test_stage_error_labels(default_cfg):
    from vaporfilter.scan import StageError
    with pytest.raises(StageError) as err:
        run_pipeline(default_cfg, probe_grid=[5.0, 4.0, 3.0])
    assert err.value.stage == "dichroism"
    assert "dichroism" in str(err.value)


def test_spectrum_metrics_no_feature_flag(default_cfg):
    cfg = replace(default_cfg, pump=replace(default_cfg.pump, saturation_parameter=0.0))
    metrics = spectrum_metrics(cfg)
    assert "no dichroic feature" in metrics["flags"]
    assert metrics["fwhm_mhz"] is None
