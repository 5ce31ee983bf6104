"""Velocity-selective optical pumping in action.

A sigma+ pump resonant with the F=2 -> F'=1 line empties the sublevels it can
reach, but m_F = +2 (and largely +1) cannot absorb sigma+ light on this line:
population pumped there is trapped.  Only atoms whose Doppler shift brings
them close to resonance are affected, so the polarization lives in a narrow
velocity class.  This demo plots the steady-state ground-state populations
versus velocity at the calibrated operating point.

Run:  python demos/pumping_populations.py
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from vaporfilter import VelocityGrid, load_config, steady_state_populations

cfg = load_config()
grid = VelocityGrid.build(cfg.atom, cfg.cell.temperature, n_points=1501)
pops = steady_state_populations(grid, cfg.pump, cfg.relaxation, cfg.atom)

kv = cfg.atom.wavenumber_mhz * grid.points
i0 = int(np.argmin(np.abs(grid.points)))
print(f"pump: detuning {cfg.pump.detuning} MHz, s = {cfg.pump.saturation_parameter:.3f}")
print("resonant-class populations:")
for (f, m) in pops.sublevels:
    print(f"  F={f}, m={m:+d}: {pops.column(f, m)[i0]:.4f}")

fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.5, 6.0), sharex=True)
for m in range(-2, 3):
    top.plot(kv, pops.column(2, m), label=f"$m_F={m:+d}$")
top.set_ylabel("population fraction (F=2)")
top.legend(ncol=3, fontsize=8)
top.set_title("Ground-sublevel populations vs velocity class")

f1_total = sum(pops.column(1, m) for m in (-1, 0, 1))
bottom.plot(kv, f1_total, color="C5", label="F=1 total")
bottom.axhline(3 / 8, color="gray", lw=0.8, ls=":", label="thermal share")
bottom.set_xlabel("Doppler shift $k v$ (MHz)")
bottom.set_ylabel("population fraction")
bottom.legend(fontsize=8)
bottom.set_xlim(-600, 600)

fig.tight_layout()
fig.savefig("pumping_populations.png", dpi=150)
print("wrote pumping_populations.png")
