"""Command-line interface: spectrum, tune, calibrate, selftest.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 calibration
failure.  All emitted CSV files use full-precision, locale-independent
number formatting with LF line endings; report.json keys are sorted so
identical runs produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, emit_config, load_config
from .scan import (
    CalibrationError,
    StageError,
    calibrate_to_targets,
    run_pipeline,
    spectrum_metrics,
    tunability_metrics,
    tunability_scan,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CALIBRATION = 4


def _fmt(x) -> str:
    """Full-precision, locale-independent float formatting."""
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_report(path: Path, report: dict):
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8", newline="\n")


def _load(args):
    cfg = load_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return cfg, out_dir


def cmd_spectrum(args) -> int:
    cfg, out = _load(args)
    result = run_pipeline(cfg)
    spec = result.spectrum
    _write_csv(out / "spectrum.csv", ["detuning_mhz", "t_v", "t_h"],
               zip(spec.detunings, spec.t_v, spec.t_h))
    if args.dump_alpha:
        ab = result.absorption
        _write_csv(out / "alpha.csv", ["detuning_mhz", "alpha_r", "alpha_l"],
                   zip(ab.detunings, ab.alpha_r, ab.alpha_l))
    report = {"schema": 1, "command": "spectrum"}
    report.update(spectrum_metrics(cfg, result))
    _write_report(out / "report.json", report)
    return EXIT_OK


def cmd_tune(args) -> int:
    cfg, out = _load(args)
    detunings = cfg.sweep.detunings()
    result = tunability_scan(detunings, cfg, threads=args.threads)
    _write_csv(out / "tunability.csv",
               ["pump_detuning_mhz", "peak_center_mhz", "peak_transmission"],
               zip(result.pump_detunings, result.peak_centers,
                   result.peak_transmissions))
    report = {"schema": 1, "command": "tune",
              "unresolved_entries": [int(i) for i in
                                     (~result.resolved).nonzero()[0]]}
    report.update(tunability_metrics(result, cfg.atom.excited_splitting))
    _write_report(out / "report.json", report)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg, out = _load(args)
    calibrated, report = calibrate_to_targets(cfg)
    doc = emit_config(cfg, saturation_parameter=report["saturation_parameter"])
    (out / "calibrated_config.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n",
        encoding="utf-8", newline="\n")
    full = {"schema": 1, "command": "calibrate"}
    full.update(report)
    _write_report(out / "report.json", full)
    # side-by-side comparison table
    rows = [
        ("od_unpumped", report["od_unpumped"], report["reference"]["od"]),
        ("fwhm_mhz", report["achieved"]["fwhm_mhz"], report["reference"]["fwhm_mhz"]),
        ("alpha_r", report["achieved"]["alpha_r_peak"], report["reference"]["alpha_r"]),
        ("alpha_l", report["achieved"]["alpha_l_peak"], report["reference"]["alpha_l"]),
        ("peak_transmission", report["achieved"]["peak_transmission"],
         report["reference"]["peak_transmission"]),
    ]
    lines = ["metric,achieved,reference"]
    lines += [f"{name},{_fmt(a)},{_fmt(b)}" for name, a, b in rows]
    (out / "calibration_table.csv").write_text("\n".join(lines) + "\n",
                                               encoding="utf-8", newline="\n")
    for name, a, b in rows:
        print(f"{name:20s} achieved={a:<22.6f} reference={b}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from . import selftest

    cfg, _ = _load(args)
    failures = selftest.run(cfg, verbose=True)
    return EXIT_OK if failures == 0 else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vaporfilter",
        description="Simulator of a narrow-band atomic-vapor filter based on "
                    "pump-induced circular dichroism.")
    parser.add_argument("--config", default=None,
                        help="run configuration JSON (default: packaged config)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--dump-alpha", action="store_true",
                        help="also write the circular optical depths as CSV")
    parser.add_argument("--threads", type=int, default=0,
                        help="worker threads for sweeps; 0 = auto "
                             "(results are independent of this setting)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", help="simulate the filter spectrum").set_defaults(fn=cmd_spectrum)
    sub.add_parser("tune", help="sweep the pump detuning").set_defaults(fn=cmd_tune)
    sub.add_parser("calibrate",
                   help="calibrate the OD scale and pump saturation").set_defaults(fn=cmd_calibrate)
    sub.add_parser("selftest", help="run the built-in invariant checks").set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except StageError as exc:
        print(f"numerical failure {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
