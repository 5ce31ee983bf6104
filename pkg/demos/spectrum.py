"""The filter spectrum: two narrow peaks on a dark background.

The pumped velocity class is dichroic, so the crossed port transmits near the
two probe resonances it can reach (the second one one excited-state splitting
above the first).  Far from resonance the port is dark down to the polarizer
leakage floor.  This demo runs the calibrated default configuration, prints
the headline metrics, and plots both ports with the Lorentzian fit of the
main peak.

Run:  python demos/spectrum.py
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from vaporfilter import load_config, measure_linewidth
from vaporfilter.fitting import fit_lorentzian, lorentzian_model
from vaporfilter.scan import run_pipeline, spectrum_metrics

cfg = load_config()
result = run_pipeline(cfg)
spec = result.spectrum

metrics = spectrum_metrics(cfg, result)
print(f"peak transmission : {metrics['peak_transmission']:.4f} at "
      f"{metrics['peak_center_mhz']:.1f} MHz")
print(f"linewidth (FWHM)  : {metrics['fwhm_mhz']:.2f} MHz")
print(f"dichroism at peak : alpha_R = {metrics['alpha_r_peak']:.3f}, "
      f"alpha_L = {metrics['alpha_l_peak']:.3f}")
print(f"extinction beyond 3 GHz: {metrics['extinction_db_beyond_3ghz']:.1f} dB")

# refit the central peak for the inset-style overlay
core = np.abs(spec.detunings) <= 150
fit = fit_lorentzian(spec.detunings[core], spec.t_v[core])
smooth = np.linspace(-150, 150, 601)

fig, (main, inset) = plt.subplots(1, 2, figsize=(9.0, 3.6),
                                  gridspec_kw={"width_ratios": [2.2, 1.0]})
main.semilogy(spec.detunings, spec.t_v, lw=0.9, label="V port")
main.semilogy(spec.detunings, spec.t_h, lw=0.9, color="C2", alpha=0.8,
              label="H port")
floor = cfg.interferometer.window_transmission * cfg.interferometer.polarizer_extinction
main.axhline(floor, color="gray", lw=0.8, ls=":", label="leakage floor")
main.set_xlabel("probe detuning (MHz)")
main.set_ylabel("transmission")
main.set_ylim(1e-6, 2)
main.legend(fontsize=8, loc="upper right")
main.set_title("Filter spectrum (calibrated default)")

inset.plot(spec.detunings[core], spec.t_v[core], ".", ms=3, label="simulated")
inset.plot(smooth, lorentzian_model.eval(fit.params, smooth), "-", color="C3",
           lw=1.0, label=f"Lorentzian fit\nFWHM {fit.params[1]:.1f} MHz")
inset.set_xlabel("probe detuning (MHz)")
inset.legend(fontsize=7)

fig.tight_layout()
fig.savefig("spectrum.png", dpi=150)
print("wrote spectrum.png")
