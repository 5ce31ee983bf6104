"""Run-configuration ingestion and validation.

One versioned JSON document configures a run.  Unknown keys anywhere in the
document are hard errors (they are usually typos in physics parameters), and
every value passes its type invariants before any computation starts.

Units: frequencies and widths in MHz, rates in 1/s, lengths in m,
temperatures in K.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .atomic_data import AtomSpec, default_atoms, load_atoms
from .dichroism import CellConfig
from .polarization import InterferometerConfig
from .pumping import PumpConfig, RelaxationConfig

__all__ = ["RunConfig", "ConfigError", "load_config", "default_config_dict",
           "config_from_dict", "emit_config"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Configuration file failed validation; message names the offending field."""


@dataclass(frozen=True)
class ProbeGridSpec:
    min_mhz: float = -3600.0
    max_mhz: float = 4400.0
    fine_halfwidth_mhz: float = 300.0
    fine_step_mhz: float = 2.0
    coarse_step_mhz: float = 20.0

    def __post_init__(self):
        if self.max_mhz <= self.min_mhz:
            raise ValueError("probe grid bounds are inverted")
        if self.fine_step_mhz <= 0 or self.coarse_step_mhz <= 0:
            raise ValueError("grid steps must be positive")


@dataclass(frozen=True)
class VelocityGridSpec:
    span_sigmas: float = 4.5
    points: int = 2001

    def __post_init__(self):
        if self.span_sigmas < 4.0:
            raise ValueError("velocity grid must span at least 4 sigma")
        if self.points < 3:
            raise ValueError("velocity grid needs at least 3 points")


@dataclass(frozen=True)
class SweepSpec:
    start_mhz: float = -600.0
    stop_mhz: float = 600.0
    step_mhz: float = 25.0

    def __post_init__(self):
        if self.step_mhz <= 0:
            raise ValueError("sweep step must be positive")
        if self.stop_mhz < self.start_mhz:
            raise ValueError("sweep bounds are inverted")

    def detunings(self):
        import numpy as np
        n = int(round((self.stop_mhz - self.start_mhz) / self.step_mhz)) + 1
        return self.start_mhz + self.step_mhz * np.arange(n)


@dataclass(frozen=True)
class CalibrationSpec:
    target_fwhm_mhz: float = 80.0
    s_bracket: tuple = (1.0, 1e4)
    reference_alpha_r: float = 5.0
    reference_alpha_l: float = 0.3
    reference_peak_transmission: float = 0.146

    def __post_init__(self):
        if self.target_fwhm_mhz <= 0:
            raise ValueError("target width must be positive")
        lo, hi = self.s_bracket
        if not 0 < lo < hi:
            raise ValueError("saturation bracket must satisfy 0 < lo < hi")


@dataclass(frozen=True)
class RunConfig:
    atom: AtomSpec
    background: AtomSpec | None
    cell: CellConfig
    pump: PumpConfig
    relaxation: RelaxationConfig
    interferometer: InterferometerConfig
    probe: ProbeGridSpec
    velocity: VelocityGridSpec
    sweep: SweepSpec
    calibration: CalibrationSpec
    raw: dict = field(repr=False, compare=False, default_factory=dict)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _take(section: dict, path: str, known: dict):
    """Check a config section against its known keys (with defaults)."""
    unknown = set(section) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in '{path}'")
    out = dict(known)
    out.update(section)
    return out


def _number(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}' must be a number, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"'{path}' must be >= {minimum}")
    return float(value)


def default_config_dict() -> dict:
    text = resources.files("vaporfilter").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def config_from_dict(doc: dict, atoms: dict | None = None) -> RunConfig:
    """Build a validated RunConfig from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")
    top_known = {
        "schema": SCHEMA_VERSION, "atom": "Rb87", "atoms_file": None,
        "cell": {}, "pump": {}, "relaxation": {}, "interferometer": {},
        "probe": {}, "velocity_grid": {}, "sweep": {}, "calibration": {},
    }
    top = _take(doc, "<root>", top_known)
    if top["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"'schema' must be {SCHEMA_VERSION}, got {top['schema']!r}")

    if atoms is None:
        if top["atoms_file"] is not None:
            try:
                atoms = load_atoms(top["atoms_file"])
            except FileNotFoundError as exc:
                raise ConfigError(f"'atoms_file': cannot open {top['atoms_file']!r}") from exc
            except ValueError as exc:
                raise ConfigError(f"'atoms_file': {exc}") from exc
        else:
            atoms = default_atoms()
    if top["atom"] not in atoms:
        raise ConfigError(f"'atom': unknown isotope {top['atom']!r}; "
                          f"available: {sorted(atoms)}")
    atom = atoms[top["atom"]]

    cell_d = _take(top["cell"], "cell", {
        "length_m": 0.15, "temperature_k": 338.15, "target_od": 1.1,
        "window_transmission": 0.95, "include_background_isotope": False,
        "background_isotope": "Rb85", "probe_linewidth_mhz": None,
        "helicity_swap": False,
    })
    background = None
    if cell_d["include_background_isotope"]:
        label = cell_d["background_isotope"]
        if label not in atoms:
            raise ConfigError(f"'cell.background_isotope': unknown isotope {label!r}")
        background = atoms[label]
    try:
        cell = CellConfig(
            length=_number(cell_d["length_m"], "cell.length_m", 0.0),
            temperature=_number(cell_d["temperature_k"], "cell.temperature_k", 0.0),
            target_od=_number(cell_d["target_od"], "cell.target_od"),
            window_transmission=_number(cell_d["window_transmission"],
                                        "cell.window_transmission"),
            include_background_isotope=bool(cell_d["include_background_isotope"]),
            probe_linewidth=(None if cell_d["probe_linewidth_mhz"] is None
                             else _number(cell_d["probe_linewidth_mhz"],
                                          "cell.probe_linewidth_mhz", 0.0)),
            helicity_swap=bool(cell_d["helicity_swap"]),
        )
    except ValueError as exc:
        raise ConfigError(f"cell: {exc}") from exc

    pump_d = _take(top["pump"], "pump", {
        "detuning_mhz": 0.0, "saturation_parameter": 2.0, "polarization": 1,
        "target_line": [2, 1],
    })
    try:
        pump = PumpConfig(
            detuning=_number(pump_d["detuning_mhz"], "pump.detuning_mhz"),
            saturation_parameter=_number(pump_d["saturation_parameter"],
                                         "pump.saturation_parameter", 0.0),
            polarization=int(pump_d["polarization"]),
            target_line=tuple(pump_d["target_line"]),
        )
    except ValueError as exc:
        raise ConfigError(f"pump: {exc}") from exc

    relax_d = _take(top["relaxation"], "relaxation", {"transit_rate_hz": 3.33e4})
    try:
        relaxation = RelaxationConfig(
            transit_rate=_number(relax_d["transit_rate_hz"],
                                 "relaxation.transit_rate_hz"))
    except ValueError as exc:
        raise ConfigError(f"relaxation: {exc}") from exc

    intf_d = _take(top["interferometer"], "interferometer", {
        "polarizer_extinction": 1e-5, "balance_error_rad": 0.0,
    })
    try:
        interferometer = InterferometerConfig(
            polarizer_extinction=_number(intf_d["polarizer_extinction"],
                                         "interferometer.polarizer_extinction"),
            window_transmission=cell.window_transmission,
            balance_error=_number(intf_d["balance_error_rad"],
                                  "interferometer.balance_error_rad"),
        )
    except ValueError as exc:
        raise ConfigError(f"interferometer: {exc}") from exc

    probe_d = _take(top["probe"], "probe", {
        "min_mhz": -3600.0, "max_mhz": 4400.0, "fine_halfwidth_mhz": 300.0,
        "fine_step_mhz": 2.0, "coarse_step_mhz": 20.0,
    })
    try:
        probe = ProbeGridSpec(
            min_mhz=_number(probe_d["min_mhz"], "probe.min_mhz"),
            max_mhz=_number(probe_d["max_mhz"], "probe.max_mhz"),
            fine_halfwidth_mhz=_number(probe_d["fine_halfwidth_mhz"],
                                       "probe.fine_halfwidth_mhz", 0.0),
            fine_step_mhz=_number(probe_d["fine_step_mhz"], "probe.fine_step_mhz"),
            coarse_step_mhz=_number(probe_d["coarse_step_mhz"], "probe.coarse_step_mhz"),
        )
    except ValueError as exc:
        raise ConfigError(f"probe: {exc}") from exc

    vel_d = _take(top["velocity_grid"], "velocity_grid",
                  {"span_sigmas": 4.5, "points": 2001})
    try:
        velocity = VelocityGridSpec(
            span_sigmas=_number(vel_d["span_sigmas"], "velocity_grid.span_sigmas"),
            points=int(vel_d["points"]))
    except ValueError as exc:
        raise ConfigError(f"velocity_grid: {exc}") from exc

    sweep_d = _take(top["sweep"], "sweep", {
        "start_mhz": -600.0, "stop_mhz": 600.0, "step_mhz": 25.0,
    })
    try:
        sweep = SweepSpec(
            start_mhz=_number(sweep_d["start_mhz"], "sweep.start_mhz"),
            stop_mhz=_number(sweep_d["stop_mhz"], "sweep.stop_mhz"),
            step_mhz=_number(sweep_d["step_mhz"], "sweep.step_mhz"))
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from exc

    cal_d = _take(top["calibration"], "calibration", {
        "target_fwhm_mhz": 80.0, "s_bracket": [1.0, 1e4],
        "reference_alpha_r": 5.0, "reference_alpha_l": 0.3,
        "reference_peak_transmission": 0.146,
    })
    try:
        calibration = CalibrationSpec(
            target_fwhm_mhz=_number(cal_d["target_fwhm_mhz"],
                                    "calibration.target_fwhm_mhz"),
            s_bracket=tuple(_number(v, "calibration.s_bracket")
                            for v in cal_d["s_bracket"]),
            reference_alpha_r=_number(cal_d["reference_alpha_r"],
                                      "calibration.reference_alpha_r"),
            reference_alpha_l=_number(cal_d["reference_alpha_l"],
                                      "calibration.reference_alpha_l"),
            reference_peak_transmission=_number(
                cal_d["reference_peak_transmission"],
                "calibration.reference_peak_transmission"),
        )
    except ValueError as exc:
        raise ConfigError(f"calibration: {exc}") from exc

    return RunConfig(atom=atom, background=background, cell=cell, pump=pump,
                     relaxation=relaxation, interferometer=interferometer,
                     probe=probe, velocity=velocity, sweep=sweep,
                     calibration=calibration, raw=doc)


def load_config(path=None) -> RunConfig:
    """Load and validate a run configuration (packaged default when path is None)."""
    if path is None:
        doc = default_config_dict()
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"configuration file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def emit_config(cfg: RunConfig, saturation_parameter: float | None = None) -> dict:
    """Round-trippable JSON document for a (possibly recalibrated) config."""
    doc = json.loads(json.dumps(cfg.raw)) if cfg.raw else {"schema": SCHEMA_VERSION}
    doc.setdefault("schema", SCHEMA_VERSION)
    if saturation_parameter is not None:
        doc.setdefault("pump", {})
        doc["pump"]["saturation_parameter"] = float(saturation_parameter)
    return doc
