"""Atomic reference data, angular-momentum coefficients and the Doppler velocity
distribution for the D1 line of rubidium.

All frequencies are in MHz, rates in 1/s, lengths in m, velocities in m/s and
temperatures in K.  Detunings are measured from the zero-velocity F=2 -> F'=1
resonance of the isotope under study unless noted otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from math import factorial, sqrt

import numpy as np
from scipy.constants import k as K_BOLTZMANN

# electronic angular momenta of the D1 line (twice their value), fixed:
# 5S1/2 -> 5P1/2
J_GROUND_X2 = 1
J_EXCITED_X2 = 1

__all__ = [
    "AtomSpec",
    "HyperfineLine",
    "VelocityGrid",
    "wigner3j",
    "wigner6j",
    "transition_strengths",
    "doppler_sigma",
    "maxwell_boltzmann_pdf",
    "hyperfine_offsets",
    "line_offset",
    "load_atoms",
    "default_atoms",
]


# ---------------------------------------------------------------------------
# Wigner symbols (Racah closed forms, exact rational internals)
# ---------------------------------------------------------------------------

def _as_x2(value, name):
    """Validate a half-integer and return twice its value as an int."""
    doubled = 2.0 * value
    rounded = round(doubled)
    if abs(doubled - rounded) > 1e-9:
        raise ValueError(f"{name}={value} is not a half-integer")
    return int(rounded)


def _is_triad(a, b, c):
    # arguments are twice the angular momenta
    return abs(a - b) <= c <= a + b and (a + b + c) % 2 == 0


def _delta2(a, b, c):
    """Squared triangle coefficient as an exact Fraction (2j arguments)."""
    return Fraction(
        factorial((a + b - c) // 2)
        * factorial((a - b + c) // 2)
        * factorial((-a + b + c) // 2),
        factorial((a + b + c) // 2 + 1),
    )


@lru_cache(maxsize=None)
def _wigner3j_x2(j1, j2, j3, m1, m2, m3):
    if m1 + m2 + m3 != 0:
        return 0.0
    if not _is_triad(j1, j2, j3):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    pref = _delta2(j1, j2, j3)
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        pref *= factorial((j + m) // 2) * factorial((j - m) // 2)
    kmin = max(0, (j2 - j3 - m1) // 2, (j1 - j3 + m2) // 2)
    kmax = min((j1 + j2 - j3) // 2, (j1 - m1) // 2, (j2 + m2) // 2)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            factorial(k)
            * factorial((j1 + j2 - j3) // 2 - k)
            * factorial((j1 - m1) // 2 - k)
            * factorial((j2 + m2) // 2 - k)
            * factorial((j3 - j2 + m1) // 2 + k)
            * factorial((j3 - j1 - m2) // 2 + k)
        )
        total += Fraction(-1 if k % 2 else 1, den)
    if total == 0:
        return 0.0
    sign = -1 if ((j1 - j2 - m3) // 2) % 2 else 1
    return sign * float(total) * sqrt(float(pref))


@lru_cache(maxsize=None)
def _wigner6j_x2(j1, j2, j3, l1, l2, l3):
    triads = ((j1, j2, j3), (j1, l2, l3), (l1, j2, l3), (l1, l2, j3))
    for a, b, c in triads:
        if not _is_triad(a, b, c):
            return 0.0
    pref = 1.0
    for a, b, c in triads:
        pref *= sqrt(float(_delta2(a, b, c)))
    kmin = max((j1 + j2 + j3) // 2, (j1 + l2 + l3) // 2,
               (l1 + j2 + l3) // 2, (l1 + l2 + j3) // 2)
    kmax = min((j1 + j2 + l1 + l2) // 2, (j2 + j3 + l2 + l3) // 2,
               (j3 + j1 + l3 + l1) // 2)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            factorial(k - (j1 + j2 + j3) // 2)
            * factorial(k - (j1 + l2 + l3) // 2)
            * factorial(k - (l1 + j2 + l3) // 2)
            * factorial(k - (l1 + l2 + j3) // 2)
            * factorial((j1 + j2 + l1 + l2) // 2 - k)
            * factorial((j2 + j3 + l2 + l3) // 2 - k)
            * factorial((j3 + j1 + l3 + l1) // 2 - k)
        )
        total += Fraction((-1 if k % 2 else 1) * factorial(k + 1), den)
    return float(total) * pref


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3-j symbol for half-integer arguments.

    Returns exactly 0 when a triangle rule or the m-selection rule fails.
    Raises ValueError for non-half-integer or parity-mismatched inputs.
    """
    jj = [_as_x2(v, n) for v, n in zip((j1, j2, j3), ("j1", "j2", "j3"))]
    mm = [_as_x2(v, n) for v, n in zip((m1, m2, m3), ("m1", "m2", "m3"))]
    for j, m, name in zip(jj, mm, ("1", "2", "3")):
        if j < 0:
            raise ValueError(f"j{name} must be non-negative")
        if (j - m) % 2:
            raise ValueError(f"j{name} and m{name} must be integer-spaced")
        if abs(m) > j:
            raise ValueError(f"|m{name}| exceeds j{name}")
    return _wigner3j_x2(*jj, *mm)


def wigner6j(j1, j2, j3, l1, l2, l3) -> float:
    """Wigner 6-j symbol for half-integer arguments.

    Triads violating triangle or parity rules give exactly 0.
    """
    args = [_as_x2(v, f"arg{i}") for i, v in enumerate((j1, j2, j3, l1, l2, l3))]
    if any(a < 0 for a in args):
        raise ValueError("angular momenta must be non-negative")
    return _wigner6j_x2(*args)


# ---------------------------------------------------------------------------
# Atom specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomSpec:
    """Physical reference data for one isotope on the D1 line."""

    mass: float                 # kg
    wavelength: float           # m
    natural_linewidth: float    # Gamma / 2 pi, MHz
    nuclear_spin: float         # half-integer
    ground_splitting: float     # MHz
    excited_splitting: float    # MHz
    isotope_label: str = ""
    abundance: float = 1.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.natural_linewidth <= 0:
            raise ValueError("natural_linewidth must be positive")
        spin_x2 = _as_x2(self.nuclear_spin, "nuclear_spin")
        if spin_x2 < 0:
            raise ValueError("nuclear_spin must be non-negative")

    @property
    def nuclear_spin_x2(self) -> int:
        return _as_x2(self.nuclear_spin, "nuclear_spin")

    @property
    def wavenumber_mhz(self) -> float:
        """k = 1/lambda expressed in MHz per (m/s), so k*v is a detuning in MHz."""
        return 1.0 / (self.wavelength * 1e6)

    @property
    def gamma_rad(self) -> float:
        """Natural linewidth as an angular rate, 1/s."""
        return 2.0 * np.pi * self.natural_linewidth * 1e6

    def ground_f_values(self):
        i2 = self.nuclear_spin_x2
        return sorted({abs(i2 - J_GROUND_X2) // 2, (i2 + J_GROUND_X2) // 2})

    def excited_f_values(self):
        i2 = self.nuclear_spin_x2
        return sorted({abs(i2 - J_EXCITED_X2) // 2, (i2 + J_EXCITED_X2) // 2})

    def ground_sublevels(self):
        return [(f, m) for f in self.ground_f_values() for m in range(-f, f + 1)]

    def excited_sublevels(self):
        return [(f, m) for f in self.excited_f_values() for m in range(-f, f + 1)]


@dataclass(frozen=True)
class HyperfineLine:
    """One optical transition F -> F' with per-(m_F, q) relative strengths.

    Strengths carry the global normalization: summed over q and all excited
    F' of the line system, each ground sublevel couples with total strength 1.
    """

    f_ground: int
    f_excited: int
    detuning_offset: float       # MHz, line center relative to the chosen zero
    strengths: dict              # {(m_F, q): strength}

    def strength(self, m_f: int, q: int) -> float:
        return self.strengths.get((m_f, q), 0.0)


def hyperfine_offsets(nuclear_spin, splitting) -> dict:
    """Hyperfine level offsets from the manifold center of gravity, for J=1/2.

    Two levels F = I -/+ 1/2; degeneracy-weighted offsets sum to zero.
    """
    i2 = _as_x2(nuclear_spin, "nuclear_spin")
    f_lo, f_hi = (abs(i2 - 1) // 2, (i2 + 1) // 2)
    g_lo, g_hi = 2 * f_lo + 1, 2 * f_hi + 1
    # upper level sits g_lo/(g_lo+g_hi) of the splitting above the cog
    up = splitting * g_lo / (g_lo + g_hi)
    return {f_lo: up - splitting, f_hi: up}


def line_offset(atom: AtomSpec, f_ground: int, f_excited: int,
                reference: AtomSpec | None = None,
                reference_line=None) -> float:
    """Detuning of the line F -> F' relative to the reference line.

    The reference line defaults to the pump line of the reference atom: upper
    ground level to lower excited level (F=2 -> F'=1 for I=3/2).  For a
    different isotope the fine-structure centers of gravity are taken to
    coincide (the ~80 MHz D1 isotope shift is neglected; small against the
    Doppler width and only relevant for the optional background absorber).
    """
    ref = reference if reference is not None else atom
    e_g = hyperfine_offsets(atom.nuclear_spin, atom.ground_splitting)
    e_e = hyperfine_offsets(atom.nuclear_spin, atom.excited_splitting)
    r_g = hyperfine_offsets(ref.nuclear_spin, ref.ground_splitting)
    r_e = hyperfine_offsets(ref.nuclear_spin, ref.excited_splitting)
    if f_ground not in e_g or f_excited not in e_e:
        raise ValueError(f"no D1 line {f_ground}->{f_excited} for {atom.isotope_label or 'atom'}")
    fg_ref, fe_ref = reference_line if reference_line is not None \
        else (max(r_g), min(r_e))
    if fg_ref not in r_g or fe_ref not in r_e:
        raise ValueError(f"reference line {fg_ref}->{fe_ref} does not exist")
    return (e_e[f_excited] - e_g[f_ground]) - (r_e[fe_ref] - r_g[fg_ref])


# ---------------------------------------------------------------------------
# Transition strengths
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _strength_system(i2: int):
    """Normalized absorption strengths and decay branching for nuclear spin I.

    Returns (ground, excited, absorb, branch) where absorb[g, e] is the
    normalized strength of ground sublevel g coupling to excited sublevel e
    (zero unless |m_e - m_g| <= 1) and branch[e, g] are decay branching
    ratios, each row summing to 1.
    """
    f_ground = sorted({abs(i2 - J_GROUND_X2) // 2, (i2 + J_GROUND_X2) // 2})
    f_excited = sorted({abs(i2 - J_EXCITED_X2) // 2, (i2 + J_EXCITED_X2) // 2})
    ground = [(f, m) for f in f_ground for m in range(-f, f + 1)]
    excited = [(f, m) for f in f_excited for m in range(-f, f + 1)]
    absorb = np.zeros((len(ground), len(excited)))
    for gi, (fg, m) in enumerate(ground):
        for ei, (fe, me) in enumerate(excited):
            q = me - m
            if abs(q) > 1:
                continue
            tj = _wigner3j_x2(2 * fe, 2, 2 * fg, 2 * me, -2 * q, -2 * m)
            sj = _wigner6j_x2(J_EXCITED_X2, J_GROUND_X2, 2, 2 * fg, 2 * fe, i2)
            absorb[gi, ei] = (2 * fe + 1) * (2 * fg + 1) * tj * tj * sj * sj
    # per-ground-sublevel norm; equals 1/(2J+1) analytically for every sublevel
    absorb *= (J_GROUND_X2 + 1)
    totals = absorb.sum(axis=1)
    if not np.allclose(totals, 1.0, atol=1e-12):
        raise AssertionError("strength sum rule violated")
    branch = absorb.T.copy()
    branch /= branch.sum(axis=1, keepdims=True)
    return ground, excited, absorb, branch


def transition_strengths(atom: AtomSpec, f_ground: int, f_excited: int) -> HyperfineLine:
    """Relative strengths of the F -> F' block of the D1 line.

    Normalization spans the whole line system: summing strengths over q and
    over all excited F' reachable from a single ground sublevel gives 1.
    """
    if f_ground not in atom.ground_f_values():
        raise ValueError(f"F={f_ground} is not a ground level for I={atom.nuclear_spin}")
    if f_excited not in atom.excited_f_values():
        raise ValueError(f"F'={f_excited} is not an excited level for I={atom.nuclear_spin}")
    ground, excited, absorb, _ = _strength_system(atom.nuclear_spin_x2)
    table = {}
    for m in range(-f_ground, f_ground + 1):
        gi = ground.index((f_ground, m))
        for q in (-1, 0, 1):
            me = m + q
            if abs(me) > f_excited:
                table[(m, q)] = 0.0
            else:
                table[(m, q)] = absorb[gi, excited.index((f_excited, me))]
    return HyperfineLine(
        f_ground=f_ground,
        f_excited=f_excited,
        detuning_offset=line_offset(atom, f_ground, f_excited),
        strengths=table,
    )


def decay_branching(atom: AtomSpec) -> np.ndarray:
    """branch[e, g]: decay branching ratios, rows sum to 1.

    Row/column order follows atom.excited_sublevels() / atom.ground_sublevels().
    """
    _, _, _, branch = _strength_system(atom.nuclear_spin_x2)
    return branch.copy()


def absorption_matrix(atom: AtomSpec) -> np.ndarray:
    """absorb[g, e]: normalized absorption strengths (see transition_strengths)."""
    _, _, absorb, _ = _strength_system(atom.nuclear_spin_x2)
    return absorb.copy()


# ---------------------------------------------------------------------------
# Doppler distribution
# ---------------------------------------------------------------------------

def doppler_sigma(atom: AtomSpec, temperature: float) -> float:
    """1-sigma Doppler width in MHz: sqrt(kB T / m) / lambda."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    return sqrt(K_BOLTZMANN * temperature / atom.mass) / atom.wavelength / 1e6


def maxwell_boltzmann_pdf(v, atom: AtomSpec, temperature: float):
    """1-D Maxwell-Boltzmann velocity density, normalized to unit integral."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    sigma = sqrt(K_BOLTZMANN * temperature / atom.mass)
    v = np.asarray(v, dtype=float)
    return np.exp(-0.5 * (v / sigma) ** 2) / (sigma * sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class VelocityGrid:
    """Symmetric velocity grid with trapezoid quadrature weights."""

    points: np.ndarray
    weights: np.ndarray
    temperature: float
    sigma_v: float

    def __post_init__(self):
        p = self.points
        if p.ndim != 1 or len(p) < 3:
            raise ValueError("velocity grid needs at least 3 points")
        if np.any(np.diff(p) <= 0):
            raise ValueError("velocity grid points must be strictly increasing")
        if abs(p[0] + p[-1]) > 1e-9 * max(1.0, abs(p[-1])):
            raise ValueError("velocity grid must be symmetric about 0")
        if p[-1] < 4.0 * self.sigma_v:
            raise ValueError("velocity grid must span at least +-4 sigma_v")

    @classmethod
    def build(cls, atom: AtomSpec, temperature: float,
              span_sigmas: float = 4.5, n_points: int = 2001) -> "VelocityGrid":
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        sigma = sqrt(K_BOLTZMANN * temperature / atom.mass)
        v = np.linspace(-span_sigmas * sigma, span_sigmas * sigma, n_points)
        w = np.full(n_points, v[1] - v[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return cls(points=v, weights=w, temperature=temperature, sigma_v=sigma)

    def pdf(self, atom: AtomSpec) -> np.ndarray:
        """Maxwell-Boltzmann density evaluated on the grid (atom's own mass)."""
        return maxwell_boltzmann_pdf(self.points, atom, self.temperature)


# ---------------------------------------------------------------------------
# Reference-data file
# ---------------------------------------------------------------------------

_ATOM_FIELDS = {
    "label": str,
    "mass_kg": (int, float),
    "wavelength_m": (int, float),
    "gamma_mhz": (int, float),
    "nuclear_spin_x2": int,
    "ground_splitting_mhz": (int, float),
    "excited_splitting_mhz": (int, float),
    "abundance": (int, float),
}


def _atom_from_record(rec: dict, index: int) -> AtomSpec:
    for field, types in _ATOM_FIELDS.items():
        if field not in rec:
            raise ValueError(f"atoms.json record {index}: missing field '{field}'")
        if not isinstance(rec[field], types):
            raise ValueError(
                f"atoms.json record {index}: field '{field}' has wrong type "
                f"{type(rec[field]).__name__}")
    unknown = set(rec) - set(_ATOM_FIELDS)
    if unknown:
        raise ValueError(f"atoms.json record {index}: unknown field(s) {sorted(unknown)}")
    return AtomSpec(
        mass=rec["mass_kg"],
        wavelength=rec["wavelength_m"],
        natural_linewidth=rec["gamma_mhz"],
        nuclear_spin=rec["nuclear_spin_x2"] / 2.0,
        ground_splitting=rec["ground_splitting_mhz"],
        excited_splitting=rec["excited_splitting_mhz"],
        isotope_label=rec["label"],
        abundance=rec["abundance"],
    )


def load_atoms(path=None) -> dict:
    """Load the isotope table, validating the schema field by field."""
    if path is None:
        text = resources.files("vaporfilter").joinpath("data/atoms.json").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"atoms.json is not valid JSON: {exc}") from exc
    if "atoms" not in doc or not isinstance(doc["atoms"], list):
        raise ValueError("atoms.json: missing top-level 'atoms' list")
    atoms = {}
    for i, rec in enumerate(doc["atoms"]):
        atom = _atom_from_record(rec, i)
        atoms[atom.isotope_label] = atom
    return atoms


@lru_cache(maxsize=1)
def default_atoms() -> dict:
    return load_atoms()
