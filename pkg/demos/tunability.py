"""Tuning the filter across the Doppler profile.

The pump selects which velocity class gets polarized, and the counter-
propagating probe sees that class at the opposite detuning: the transmission
peak moves at slope -1 with the pump.  Its height follows the number of atoms
in the selected class, i.e. the Doppler profile, with a second, weaker lobe
where the pump starts addressing the upper excited hyperfine level.

Run:  python demos/tunability.py   (takes a few seconds)
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from vaporfilter import load_config, tunability_scan
from vaporfilter.fitting import gaussian_sum2_model
from vaporfilter.scan import tunability_metrics

cfg = load_config()
detunings = cfg.sweep.detunings()
result = tunability_scan(detunings, cfg)
metrics = tunability_metrics(result, cfg.atom.excited_splitting)

print(f"center-vs-pump slope : {metrics['slope']:.4f} "
      f"(intercept {metrics['intercept_mhz']:.2f} MHz)")
print(f"two-Gaussian envelope: centers {metrics['gaussian_centers_mhz'][0]:.0f} / "
      f"{metrics['gaussian_centers_mhz'][1]:.0f} MHz, "
      f"residual {100 * metrics['gaussian_fit_rms_relative']:.2f}% of max")

fit_params = np.array([
    metrics["gaussian_centers_mhz"][0], metrics["gaussian_sigmas_mhz"][0],
    metrics["gaussian_amplitudes"][0], metrics["gaussian_centers_mhz"][1],
    metrics["gaussian_sigmas_mhz"][1], metrics["gaussian_amplitudes"][1],
    metrics["gaussian_offset"],
])
smooth = np.linspace(detunings[0], detunings[-1], 600)

fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.2, 6.2), sharex=True)
ok = result.resolved
top.plot(result.pump_detunings[ok], result.peak_centers[ok], "o", ms=4)
top.plot(detunings, -detunings, "-", lw=0.8, color="gray", label="slope -1")
top.set_ylabel("peak center (MHz)")
top.legend(fontsize=8)
top.set_title("Filter tunability")

bottom.plot(result.pump_detunings[ok], result.peak_transmissions[ok], "o", ms=4,
            label="simulated")
bottom.plot(smooth, gaussian_sum2_model.eval(fit_params, smooth), "-", color="C3",
            lw=1.0, label="two-Gaussian fit")
bottom.set_xlabel("pump detuning (MHz)")
bottom.set_ylabel("peak transmission")
bottom.legend(fontsize=8)

fig.tight_layout()
fig.savefig("tunability.png", dpi=150)
print("wrote tunability.png")
