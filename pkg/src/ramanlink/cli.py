"""Command-line front end: ingest a link file, run the pipeline, emit
machine-readable reports.

Exit codes: 0 success, 1 validation/input error, 2 solver non-convergence,
3 model singularity (near-zero effective dispersion).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import __version__
from .errors import ConfigError, ConvergenceError, RamanlinkError, SingularityError
from .link_model import Options, parse_link_config, validate_link
from .nli import CorrectionModel
from .pipeline import LinkReport, run_pipeline
from .units import w_to_dbm


def _fmt(x) -> str:
    """Render one numeric cell: fixed 6 decimals in a readable range,
    scientific with 6 significant digits otherwise."""
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0 or 1e-4 <= abs(x) < 1e10:
        return f"{x:.6f}"
    return f"{x:.6e}"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v
                              for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _profiles_rows(report: LinkReport) -> list[list]:
    rows = []
    for prof in report.profiles:
        by_channel = sorted(prof.profiles, key=lambda p: (p.channel, p.direction))
        for p in by_channel:
            f_thz = report.vlink.channels[p.channel - 1].frequency / 1e12
            rows.append([prof.span_index, p.channel, f_thz, p.direction,
                         p.alpha0 * 1e3, p.alpha1 * 1e3, p.sigma * 1e3, p.mse])
    return rows


def _nli_rows(report: LinkReport) -> list[list]:
    rows = []
    for spans in report.breakdowns:
        for b in spans:
            f_thz = report.vlink.channels[b.channel - 1].frequency / 1e12
            rows.append([b.span_index, b.channel, f_thz,
                         w_to_dbm(b.p_nli_total), w_to_dbm(b.p_nli_dir1),
                         w_to_dbm(b.p_nli_dir2), b.end_share, b.q1, b.q2])
    return rows


def _gsnr_rows(report: LinkReport) -> list[list]:
    return [[g.channel, g.frequency / 1e12, g.osnr_ase_db, g.snr_nli_db,
             g.gsnr_db] for g in report.gsnr]


_PROFILES_HEADER = ["span", "channel", "f_THz", "direction", "alpha0_per_km",
                    "alpha1_per_km", "sigma_per_km", "mse"]
_NLI_HEADER = ["span", "channel", "f_THz", "p_nli_dbm", "p_nli_i1_dbm",
               "p_nli_i2_dbm", "end_share", "q1", "q2"]
_GSNR_HEADER = ["channel", "f_THz", "osnr_db", "snr_nli_db", "gsnr_db"]
_SWEEP_HEADER = ["offset_db", "channel", "f_THz", "osnr_db", "snr_nli_db",
                 "gsnr_db", "end_share"]


def _structured_doc(report: LinkReport) -> dict:
    return {
        "offset_db": report.offset_db,
        "profiles": [dict(zip(_PROFILES_HEADER, row))
                     for row in _profiles_rows(report)],
        "nli": [dict(zip(_NLI_HEADER, row)) for row in _nli_rows(report)],
        "gsnr": [dict(zip(_GSNR_HEADER, row)) for row in _gsnr_rows(report)],
        "warnings": list(report.warnings),
    }


def _emit(report: LinkReport, out: Path, fmt: str, which: set[str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "structured":
        doc = _structured_doc(report)
        doc = {k: v for k, v in doc.items()
               if k in which or k in ("offset_db", "warnings")}
        (out / "report.json").write_text(
            json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")
        return
    if "profiles" in which:
        _write_csv(out / "profiles.csv", _PROFILES_HEADER, _profiles_rows(report))
    if "nli" in which:
        _write_csv(out / "nli.csv", _NLI_HEADER, _nli_rows(report))
    if "gsnr" in which:
        _write_csv(out / "gsnr.csv", _GSNR_HEADER, _gsnr_rows(report))


def _write_manifest(out: Path, command: str, input_text: str,
                    options: Options, warnings: list[str]) -> None:
    manifest = {
        "command": command,
        "input_sha256": hashlib.sha256(input_text.encode("utf-8")).hexdigest(),
        "options": asdict(options),
        "version": __version__,
        "warnings": warnings,
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _apply_overrides(options: Options, args) -> Options:
    if args.grid_step_m is not None:
        options = replace(options, grid_step_m=args.grid_step_m)
    if args.q_cap is not None:
        options = replace(options, q_cap=args.q_cap)
    return options


def _load_inputs(args):
    path = Path(args.input)
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}")
    text = path.read_text(encoding="utf-8")
    vlink = validate_link(parse_link_config(text))
    options = _apply_overrides(vlink.options, args)
    correction = CorrectionModel.identity()
    if args.rho_table:
        rho_path = Path(args.rho_table)
        if not rho_path.is_file():
            raise ConfigError(f"rho table file not found: {rho_path}")
        correction = CorrectionModel.from_table_text(
            rho_path.read_text(encoding="utf-8"))
    return text, vlink, options, correction


def _parse_offsets(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError("--offset-db must be 'start:stop:step'")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"--offset-db: {exc}") from exc
    if step <= 0 or not all(map(math.isfinite, (a, b, step))):
        raise ConfigError("--offset-db requires finite bounds and step > 0")
    offsets = []
    x = a
    while x <= b + 1e-9:
        offsets.append(round(x, 9))
        x += step
    return offsets


def _run_single(args, which: set[str]) -> int:
    text, vlink, options, correction = _load_inputs(args)
    report = run_pipeline(vlink, options, correction)
    out = Path(args.out)
    _emit(report, out, args.format, which)
    _write_manifest(out, args.command, text, options, list(report.warnings))
    return 0


def _run_sweep(args) -> int:
    text, vlink, options, correction = _load_inputs(args)
    if not args.offset_db:
        raise ConfigError("sweep requires --offset-db start:stop:step")
    offsets = _parse_offsets(args.offset_db)

    rows: list[list] = []
    warnings: list[str] = []
    last_error: RamanlinkError | None = None
    successes = 0
    for delta in offsets:
        try:
            report = run_pipeline(vlink, options, correction, offset_db=delta)
        except RamanlinkError as exc:
            print(f"offset {delta:+g} dB: {exc}", file=sys.stderr)
            last_error = exc
            continue
        successes += 1
        warnings.extend(f"offset {delta:+g} dB: {w}" for w in report.warnings)
        for j, g in enumerate(report.gsnr):
            rows.append([delta, g.channel, g.frequency / 1e12, g.osnr_ase_db,
                         g.snr_nli_db, g.gsnr_db, report.end_share_link(j)])
    if successes == 0 and last_error is not None:
        raise last_error

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "structured":
        doc = {"sweep": [dict(zip(_SWEEP_HEADER, row)) for row in rows],
               "warnings": warnings}
        (out / "sweep.json").write_text(
            json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    else:
        _write_csv(out / "sweep.csv", _SWEEP_HEADER, rows)
    _write_manifest(out, "sweep", text, options, warnings)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ramanlink",
        description="Multiband Raman-aware link QoT engine")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("solve", "full pipeline: profiles, NLI and GSNR reports"),
            ("fit-profiles", "solve spans and fit loss profiles only"),
            ("nli", "pipeline through per-span NLI"),
            ("gsnr", "pipeline through per-channel GSNR"),
            ("sweep", "rerun the pipeline over a launch-power offset range")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True, help="link description file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--grid-step-m", type=float, default=None)
        p.add_argument("--q-cap", type=int, default=None)
        p.add_argument("--rho-table", default=None,
                       help="correction-coefficient table file")
        p.add_argument("--format", choices=["csv", "structured"], default="csv")
        if name == "sweep":
            p.add_argument("--offset-db", default=None, metavar="A:B:STEP",
                           help="launch-power offsets in dB, inclusive range")
    return parser


_COMMAND_OUTPUTS = {
    "solve": {"profiles", "nli", "gsnr"},
    "fit-profiles": {"profiles"},
    "nli": {"nli"},
    "gsnr": {"gsnr"},
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            return _run_sweep(args)
        return _run_single(args, _COMMAND_OUTPUTS[args.command])
    except SingularityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, RamanlinkError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
