"""Circular-polarization-resolved optical depths of the pumped vapor.

The probe counter-propagates with the pump: an atom at +v sees the probe
blue-shifted by k v, and the probe's circular labels map onto the pump's
quantization axis with a helicity flip (R -> sigma-, L -> sigma+ by default).
The pumped velocity class v0 = Delta_p / k is therefore probe-resonant at
delta = -Delta_p on the F'=1 line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .atomic_data import (
    AtomSpec,
    VelocityGrid,
    absorption_matrix,
    line_offset,
)
from .pumping import PopulationField, PumpConfig, _lorentz_unit

__all__ = [
    "CellConfig",
    "DichroicAbsorption",
    "calibrate_od_scale",
    "absorption_coefficients",
    "differential_phase",
]


@dataclass(frozen=True)
class CellConfig:
    """Vapor cell parameters.  target_od is the unpumped peak optical depth
    on the F=2 -> F'=1 transition; the window factor is consumed by the
    interferometer stage, not by the optical depths."""

    length: float = 0.15                 # m
    temperature: float = 338.15          # K
    target_od: float = 1.1
    window_transmission: float = 0.95
    include_background_isotope: bool = False
    probe_linewidth: float | None = None   # MHz; None = natural linewidth
    helicity_swap: bool = False

    def __post_init__(self):
        if self.target_od <= 0:
            raise ValueError("target_od must be positive")
        if not 0.0 < self.window_transmission <= 1.0:
            raise ValueError("window_transmission must be in (0, 1]")
        if self.length <= 0:
            raise ValueError("length must be positive")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    def probe_labels(self):
        """(q_R, q_L): sigma components seen on the pump axis by the probe's
        R and L circular labels (counter-propagation helicity flip)."""
        return (+1, -1) if self.helicity_swap else (-1, +1)


@dataclass(frozen=True)
class DichroicAbsorption:
    """alpha_R, alpha_L sampled on a probe-detuning grid (MHz)."""

    detunings: np.ndarray
    alpha_r: np.ndarray = field(repr=False)
    alpha_l: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.any(np.diff(self.detunings) <= 0):
            raise ValueError("detuning grid must be strictly increasing")
        if np.any(self.alpha_r < 0) or np.any(self.alpha_l < 0):
            raise ValueError("optical depths must be non-negative")
        if np.any(~np.isfinite(self.alpha_r)) or np.any(~np.isfinite(self.alpha_l)):
            raise ValueError("optical depths contain non-finite values")

    @property
    def alpha_plus(self) -> np.ndarray:
        return 0.5 * (self.alpha_r + self.alpha_l)

    @property
    def alpha_minus(self) -> np.ndarray:
        return 0.5 * (self.alpha_r - self.alpha_l)


def _sigma_weighted_populations(atom: AtomSpec, pop_fractions, sublevels, q, f_probed=2):
    """Per-excited-line velocity profiles h_Fe(v) = sum_m strength * p_m(v)."""
    absorb = absorption_matrix(atom)
    ground = atom.ground_sublevels()
    excited = atom.excited_sublevels()
    out = {}
    for fe in atom.excited_f_values():
        h = np.zeros(pop_fractions.shape[0])
        for m in range(-f_probed, f_probed + 1):
            me = m + q
            if abs(me) > fe:
                continue
            st = absorb[ground.index((f_probed, m)), excited.index((fe, me))]
            if st:
                h += st * pop_fractions[:, sublevels.index((f_probed, m))]
        out[fe] = h
    return out


def _doppler_lorentz_sum(detunings, grid: VelocityGrid, atom: AtomSpec,
                         profiles: dict, offsets: dict, probe_fwhm: float,
                         weight: float = 1.0) -> np.ndarray:
    """sum_Fe integral f(v) h_Fe(v) L(delta + k v - offset_Fe) dv."""
    kv = atom.wavenumber_mhz * grid.points
    f_w = grid.pdf(atom) * grid.weights * weight
    delta = np.asarray(detunings, dtype=float)
    total = np.zeros(len(delta))
    for fe, h in profiles.items():
        lor = _lorentz_unit(delta[:, None] + kv[None, :] - offsets[fe], probe_fwhm)
        total += lor @ (f_w * h)
    return total


def _unscaled_alpha(detunings, pop: PopulationField, cell: CellConfig,
                    atom: AtomSpec, q: int, background: AtomSpec | None) -> np.ndarray:
    probe_fwhm = cell.probe_linewidth or atom.natural_linewidth
    offsets = {fe: line_offset(atom, 2, fe) for fe in atom.excited_f_values()}
    profiles = _sigma_weighted_populations(atom, pop.fractions, pop.sublevels, q)
    alpha = _doppler_lorentz_sum(detunings, pop.grid, atom, profiles, offsets,
                                 probe_fwhm, weight=atom.abundance)
    if background is not None:
        # unpolarized thermal background isotope: same contribution to both
        # circular labels; all its D1 ground levels absorb in the window
        n_sub = len(background.ground_sublevels())
        for fg in background.ground_f_values():
            bg_profiles = {}
            bg_offsets = {}
            for fe in background.excited_f_values():
                absorb = absorption_matrix(background)
                ground = background.ground_sublevels()
                excited = background.excited_sublevels()
                h = 0.0
                for m in range(-fg, fg + 1):
                    me = m + q
                    if abs(me) > fe:
                        continue
                    h += absorb[ground.index((fg, m)), excited.index((fe, me))] / n_sub
                bg_profiles[fe] = np.full(len(pop.grid.points), h)
                bg_offsets[fe] = line_offset(background, fg, fe, reference=atom)
            alpha += _doppler_lorentz_sum(detunings, pop.grid, background,
                                          bg_profiles, bg_offsets, probe_fwhm,
                                          weight=background.abundance)
    return alpha


def calibrate_od_scale(cell: CellConfig, atom: AtomSpec, grid: VelocityGrid,
                       background: AtomSpec | None = None) -> float:
    """Linear scale C such that the unpumped optical depth at the
    F=2 -> F'=1 resonance equals cell.target_od (closed form)."""
    thermal = PopulationField.thermal(grid, atom)
    q_r, _ = cell.probe_labels()
    peak = _unscaled_alpha(np.array([0.0]), thermal, cell, atom, q_r, background)[0]
    if peak <= 0.0 or not np.isfinite(peak):
        raise ValueError("unpumped absorption vanished; configuration is invalid")
    return cell.target_od / peak


def absorption_coefficients(pop: PopulationField, pump: PumpConfig,
                            cell: CellConfig, atom: AtomSpec, probe_grid,
                            scale: float,
                            background: AtomSpec | None = None) -> DichroicAbsorption:
    """alpha_R(delta), alpha_L(delta) for a counter-propagating weak probe.

    alpha = C * sum_Fe sum_m strength(m, q; Fe) integral f(v) p_m(v)
    L(delta + k v - offset_Fe) dv, with a unit-peak Lorentzian of the probe
    homogeneous width.  The F=1 ground state is out of the scanned window and
    contributes nothing; an optional unpolarized background isotope adds
    identically to both labels.
    """
    if np.any(~np.isfinite(pop.fractions)):
        raise ValueError("populations contain non-finite values")
    delta = np.asarray(probe_grid, dtype=float)
    q_r, q_l = cell.probe_labels()
    alpha_r = scale * _unscaled_alpha(delta, pop, cell, atom, q_r, background)
    alpha_l = scale * _unscaled_alpha(delta, pop, cell, atom, q_l, background)
    return DichroicAbsorption(detunings=delta, alpha_r=alpha_r, alpha_l=alpha_l)


def differential_phase(d: DichroicAbsorption) -> np.ndarray:
    """Kramers-Kronig partner of alpha_minus/2 via a discrete Hilbert transform.

    Tail-shape study only; the headline outputs assume negligible circular
    birefringence.  Requires a uniform detuning grid wide enough that the
    wings have decayed.
    """
    from scipy.signal import hilbert

    steps = np.diff(d.detunings)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-9):
        raise ValueError("differential_phase requires a uniform detuning grid")
    half_dichroism = 0.5 * d.alpha_minus
    return np.imag(hilbert(half_dichroism))
