"""Steady-state ground-sublevel populations under a circularly polarized pump.

The pump counter-propagates with the probe and defines the +z quantization
axis.  Excited states are adiabatically eliminated: each velocity class obeys
a linear rate equation on the ground manifold, driven by power-broadened
excitation rates and closed by transit relaxation toward the unpolarized
thermal state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .atomic_data import AtomSpec, HyperfineLine, VelocityGrid, line_offset

__all__ = [
    "PumpConfig",
    "RelaxationConfig",
    "PopulationField",
    "excitation_rate",
    "steady_state_populations",
]


@dataclass(frozen=True)
class PumpConfig:
    """Pump beam parameters.

    detuning is measured from the zero-velocity resonance of target_line;
    saturation_parameter is I/I_sat at beam center; polarization is the
    driven sigma transition (+1 or -1) on the +z axis.
    """

    detuning: float = 0.0
    saturation_parameter: float = 2.0
    polarization: int = +1
    target_line: tuple = (2, 1)

    def __post_init__(self):
        if self.saturation_parameter < 0:
            raise ValueError("saturation_parameter must be >= 0")
        if self.polarization not in (+1, -1):
            raise ValueError("polarization must be +1 or -1")

    @property
    def power_broadened_width(self) -> float:
        """Gamma' = Gamma sqrt(1+s) in units of the natural linewidth."""
        return np.sqrt(1.0 + self.saturation_parameter)


@dataclass(frozen=True)
class RelaxationConfig:
    """Ground-state repolarization toward thermal equilibrium (transit rate, 1/s)."""

    transit_rate: float = 3.33e4

    def __post_init__(self):
        if self.transit_rate <= 0:
            raise ValueError("transit_rate must be positive")


@dataclass(frozen=True)
class PopulationField:
    """Ground-sublevel population fractions per velocity class."""

    grid: VelocityGrid
    sublevels: tuple                    # ((F, m_F), ...) column order
    fractions: np.ndarray = field(repr=False)   # shape (n_v, n_sublevels)

    def __post_init__(self):
        f = self.fractions
        if f.shape != (len(self.grid.points), len(self.sublevels)):
            raise ValueError("fractions shape does not match grid/sublevels")
        if np.any(f < -1e-12) or np.any(f > 1.0 + 1e-12):
            raise ValueError("population fractions out of [0, 1]")
        sums = f.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-10):
            raise ValueError("populations do not sum to 1 per velocity class")

    def column(self, f: int, m_f: int) -> np.ndarray:
        return self.fractions[:, self.sublevels.index((f, m_f))]

    @classmethod
    def thermal(cls, grid: VelocityGrid, atom: AtomSpec) -> "PopulationField":
        subs = tuple(atom.ground_sublevels())
        frac = np.full((len(grid.points), len(subs)), 1.0 / len(subs))
        return cls(grid=grid, sublevels=subs, fractions=frac)


def _lorentz_unit(x, fwhm):
    """Unit-peak Lorentzian of the given FWHM."""
    return 1.0 / (1.0 + (2.0 * np.asarray(x, float) / fwhm) ** 2)


def excitation_rate(v: float, pump: PumpConfig, line: HyperfineLine,
                    atom: AtomSpec) -> np.ndarray:
    """Per-sublevel excitation rates (1/s) for one velocity class and one line.

    rate(m_F) = (Gamma/2) * s * strength(m_F, q=sigma) * L(Delta_p - k v - offset)
    with L a unit-peak Lorentzian of FWHM Gamma sqrt(1+s).  An atom moving at
    +v with the pump along +z sees the pump red-shifted by k v.
    """
    s = pump.saturation_parameter
    gamma_prime = atom.natural_linewidth * pump.power_broadened_width
    det = pump.detuning - atom.wavenumber_mhz * v - line.detuning_offset
    lor = _lorentz_unit(det, gamma_prime)
    fg = line.f_ground
    rates = np.zeros(2 * fg + 1)
    for i, m in enumerate(range(-fg, fg + 1)):
        rates[i] = 0.5 * atom.gamma_rad * s * line.strength(m, pump.polarization) * lor
    return rates


@lru_cache(maxsize=8)
def _transfer_matrices(i2: int, sigma: int, f_pumped: int):
    """Constant transfer generators K_Fe with zero column sums.

    M(v) = sum_Fe x_Fe(v) K_Fe where x_Fe = (Gamma/2) s L(detuning from Fe).
    K_Fe[g', g] moves population g -> g' through absorption to F_e followed
    by spontaneous branching; the diagonal carries the total loss.
    """
    from .atomic_data import _strength_system

    ground, excited, absorb, branch = _strength_system(i2)
    n = len(ground)
    out = {}
    f_excited_values = sorted({f for f, _ in excited})
    for fe in f_excited_values:
        K = np.zeros((n, n))
        for gi, (fg, m) in enumerate(ground):
            if fg != f_pumped:
                continue
            me = m + sigma
            if abs(me) > fe:
                continue
            ei = excited.index((fe, me))
            st = absorb[gi, ei]
            if st == 0.0:
                continue
            K[:, gi] += st * branch[ei, :]
            K[gi, gi] -= st
        out[fe] = K
    return out


def steady_state_populations(grid: VelocityGrid, pump: PumpConfig,
                             relax: RelaxationConfig, atom: AtomSpec) -> PopulationField:
    """Solve the per-class steady state 0 = M(v) p + gamma_t (p_thermal - p).

    The pump addresses the F=2 ground level through both excited hyperfine
    levels, each entering as an excitation channel at its own detuning offset.
    The linear system (gamma_t I - M) p = gamma_t p_thermal is solved per
    velocity class with partial pivoting; M has zero column sums by
    construction, so populations remain normalized and non-negative.
    """
    subs = tuple(atom.ground_sublevels())
    n = len(subs)
    gamma_t = relax.transit_rate
    f_pumped = pump.target_line[0]
    kv = atom.wavenumber_mhz * grid.points
    gamma_prime = atom.natural_linewidth * pump.power_broadened_width
    amplitude = 0.5 * atom.gamma_rad * pump.saturation_parameter

    matrices = _transfer_matrices(atom.nuclear_spin_x2, pump.polarization, f_pumped)
    a = np.broadcast_to(gamma_t * np.eye(n), (len(kv), n, n)).copy()
    for fe, K in matrices.items():
        offset = line_offset(atom, f_pumped, fe, reference_line=pump.target_line)
        x = amplitude * _lorentz_unit(pump.detuning - kv - offset, gamma_prime)
        a -= x[:, None, None] * K[None, :, :]

    b = np.full((len(kv), n, 1), gamma_t / n)
    try:
        p = np.linalg.solve(a, b)[:, :, 0]
    except np.linalg.LinAlgError as exc:  # cannot occur for gamma_t > 0
        raise RuntimeError(
            f"singular steady-state system (gamma_t={gamma_t}, s="
            f"{pump.saturation_parameter}, detuning={pump.detuning})") from exc

    # no clipping: the steady state of a generator plus positive relaxation
    # is non-negative, and PopulationField enforces that invariant
    return PopulationField(grid=grid, sublevels=subs, fractions=p)
