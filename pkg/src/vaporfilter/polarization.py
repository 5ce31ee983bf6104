"""Jones-calculus model of the polarization interferometer.

A horizontal input polarizer prepares an equal superposition of the two
circular modes; the dichroic vapor attenuates them unequally; a polarizing
splitter with finite extinction separates the H and V outputs.  Cell window
losses are applied here as a single polarization-independent factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PolarizationState",
    "InterferometerConfig",
    "apply_dichroic_medium",
    "filter_outputs",
]

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class InterferometerConfig:
    polarizer_extinction: float = 1e-5
    window_transmission: float = 0.95
    balance_error: float = 0.0          # radians, residual analyzer mis-set

    def __post_init__(self):
        if not 0.0 <= self.polarizer_extinction < 1.0:
            raise ValueError("polarizer_extinction must be in [0, 1)")
        if not 0.0 < self.window_transmission <= 1.0:
            raise ValueError("window_transmission must be in (0, 1]")


@dataclass(frozen=True)
class PolarizationState:
    """Two complex field amplitudes in a declared basis ('HV' or 'RL')."""

    amplitudes: np.ndarray
    basis: str = "HV"
    intensity_in: float = 1.0

    def __post_init__(self):
        if self.basis not in ("HV", "RL"):
            raise ValueError("basis must be 'HV' or 'RL'")
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (2,):
            raise ValueError("amplitudes must be a length-2 vector")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def horizontal(cls, intensity_in: float = 1.0) -> "PolarizationState":
        return cls(np.array([1.0 + 0j, 0.0 + 0j]), "HV", intensity_in)

    def to_basis(self, basis: str) -> "PolarizationState":
        """Unitary change of basis; total intensity is preserved.

        Convention: a_R = (a_H - i a_V)/sqrt2, a_L = (a_H + i a_V)/sqrt2,
        so horizontal light is an equal superposition of R and L.
        """
        if basis == self.basis:
            return self
        h, v = (None, None)
        if self.basis == "HV":
            a_h, a_v = self.amplitudes
            amp = np.array([(a_h - 1j * a_v) / _SQRT2, (a_h + 1j * a_v) / _SQRT2])
        else:
            a_r, a_l = self.amplitudes
            amp = np.array([(a_r + a_l) / _SQRT2, 1j * (a_r - a_l) / _SQRT2])
        return PolarizationState(amp, basis, self.intensity_in)

    def intensities(self):
        """(I_first, I_second) in the state's own basis, as fractions of I_0."""
        p = np.abs(self.amplitudes) ** 2
        return self.intensity_in * p[0], self.intensity_in * p[1]


def apply_dichroic_medium(state: PolarizationState, alpha_r: float, alpha_l: float,
                          phase_r: float = 0.0, phase_l: float = 0.0) -> PolarizationState:
    """Attenuate the circular amplitudes by exp(-alpha/2), with optional phases.

    Phases default to zero (negligible differential dispersion); the optional
    Hilbert-transform study wires them in for tail-shape work.
    """
    if alpha_r < 0 or alpha_l < 0:
        raise ValueError("optical depths must be non-negative")
    rl = state.to_basis("RL")
    factors = np.array([
        np.exp(-0.5 * alpha_r + 1j * phase_r),
        np.exp(-0.5 * alpha_l + 1j * phase_l),
    ])
    return PolarizationState(rl.amplitudes * factors, "RL", rl.intensity_in)


def filter_outputs(alpha_r, alpha_l, cfg: InterferometerConfig | None = None,
                   phase_r=0.0, phase_l=0.0):
    """(I_H, I_V) as fractions of the input intensity.

    Ideal part: I_H = T_w e^(-a+) cosh^2(a-/2), I_V = T_w e^(-a+) sinh^2(a-/2)
    with a+- = (alpha_R +- alpha_L)/2.  Finite polarizer extinction mixes the
    two outputs incoherently; a residual balance error rotates the analysis
    basis before projection.  Accepts scalars or arrays.
    """
    if cfg is None:
        cfg = InterferometerConfig()
    alpha_r = np.asarray(alpha_r, dtype=float)
    alpha_l = np.asarray(alpha_l, dtype=float)
    if np.any(alpha_r < 0) or np.any(alpha_l < 0):
        raise ValueError("optical depths must be non-negative")

    # field amplitudes for an H input after the dichroic medium, HV basis
    e_r = np.exp(-0.5 * alpha_r + 1j * np.asarray(phase_r))
    e_l = np.exp(-0.5 * alpha_l + 1j * np.asarray(phase_l))
    a_h = 0.5 * (e_r + e_l)
    a_v = 0.5j * (e_r - e_l)
    if cfg.balance_error != 0.0:
        c, s = np.cos(cfg.balance_error), np.sin(cfg.balance_error)
        a_h, a_v = c * a_h + s * a_v, -s * a_h + c * a_v

    t_w = cfg.window_transmission
    i_h = t_w * np.abs(a_h) ** 2
    i_v = t_w * np.abs(a_v) ** 2

    eps = cfg.polarizer_extinction
    i_h_out = i_h * (1.0 - eps) + i_v * eps
    i_v_out = i_v * (1.0 - eps) + i_h * eps
    if i_h_out.ndim == 0:
        return float(i_h_out), float(i_v_out)
    return i_h_out, i_v_out
