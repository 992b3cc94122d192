"""Command-line front end.

Commands ``transport``, ``entanglement``, ``eigencorrelator`` and ``verify``
read a strict JSON config, run the ensemble and write CSV/JSON tables plus a
``manifest.json`` into ``--out``.

Exit codes
----------
0  success
1  configuration error (unreadable file, bad JSON, unknown or invalid field)
2  numerical failure (degenerate spectra everywhere, corrupted state, ...)
3  verdict failure (a bound or oracle check did not hold)
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import SCHEMA_VERSION, EnsembleConfig, EnsembleResult, default_threads, run_ensemble
from .errors import ConfigurationError, EnsembleFailure, NumericError, StructuralError
from .entanglement import LOG2

log = logging.getLogger("xylab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERDICT = 0, 1, 2, 3
COMMANDS = ("transport", "entanglement", "eigencorrelator", "verify")


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str
    seed: int
    started: str
    finished: str = ""
    outputs: list = field(default_factory=list)
    exit_code: int | None = None

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _g(x) -> str:
    return f"{float(x):.17g}"


def load_config(path, command: str, seed: int | None = None) -> EnsembleConfig:
    """Parse ``path`` for ``command``; every problem surfaces as ``ConfigurationError``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    kind = "oracle_verify" if command == "verify" else command
    if isinstance(doc, dict) and isinstance(doc.get("experiment"), dict):
        given = doc["experiment"].setdefault("kind", kind)
        if given != kind:
            raise ConfigurationError(f"experiment.kind is {given!r} but the command is {command!r}")
    cfg = EnsembleConfig.from_dict(doc)
    if seed is not None:
        try:
            cfg = cfg.with_seed(seed)
        except ConfigurationError as exc:
            raise ConfigurationError(f"--seed: {exc}") from exc
    return cfg


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _emit_transport(result: EnsembleResult, out: Path) -> list:
    cfg = result.config
    times = cfg.grid.times
    paths = []
    series = out / "transport_series.csv"
    with open(series, "w") as fh:
        fh.write("target_id,t,N_S,realization_id\n")
        for rec in result.accepted:
            for i, row in enumerate(rec["series"]):
                for t, v in zip(times, row):
                    fh.write(f"{i},{_g(t)},{_g(v)},{rec['realization']}\n")
    paths.append(series)
    dens = out / "density_snapshots.csv"
    mean_density = result.aggregate["mean_density"]
    with open(dens, "w") as fh:
        fh.write("t,site,density_mean\n")
        for t, row in zip(times, mean_density):
            for j, v in enumerate(row, start=1):
                fh.write(f"{_g(t)},{j},{_g(v)}\n")
    paths.append(dens)
    prof = out / "eigencorrelator.csv"
    result.profile().to_csv(prof)
    paths.append(prof)
    return paths


def _emit_entanglement(result: EnsembleResult, out: Path) -> list:
    times = result.config.grid.times
    path = out / "entropy_series.csv"
    with open(path, "w") as fh:
        fh.write("n,realization_id,t,entropy_nats,entropy_qubits\n")
        for rec in result.accepted:
            for t, s in zip(times, rec["curve"]):
                fh.write(f"{rec['n']},{rec['realization']},{_g(t)},{_g(s)},{_g(s / LOG2)}\n")
    return [path]


def _emit_eigencorrelator(result: EnsembleResult, out: Path) -> list:
    prof = out / "eigencorrelator.csv"
    result.profile().to_csv(prof)
    fit = out / "fit.json"
    _write_json(fit, {"schema_version": SCHEMA_VERSION, **result.summary()["verdicts"]["eigencorrelator"]})
    return [prof, fit]


def _verdict_ok(result: EnsembleResult) -> bool:
    return all(v.get("passed", True) for v in result.verdicts.values())


def execute(command: str, cfg: EnsembleConfig, out: Path, threads: int) -> tuple[int, list]:
    """Run one command and write its outputs; returns ``(exit_code, paths)``."""
    out.mkdir(parents=True, exist_ok=True)
    result = run_ensemble(cfg, threads=threads)
    paths = []
    if command == "verify":
        report = out / "verify_report.json"
        _write_json(report, {"schema_version": SCHEMA_VERSION, "seed": cfg.seed,
                             "passed": result.verdicts["oracle"]["passed"], "checks": result.records})
        paths.append(report)
        for rec in result.records:
            mark = "ok  " if rec["passed"] else "FAIL"
            log.info("%s %-40s residual %.3e tol %.1e", mark, rec["name"], rec["residual"], rec["tolerance"])
    else:
        emit = {"transport": _emit_transport, "entanglement": _emit_entanglement,
                "eigencorrelator": _emit_eigencorrelator}[command]
        paths.extend(emit(result, out))
        records = out / "records.csv"
        result.write_records_csv(records)
        paths.append(records)
    summary = out / "summary.json"
    summary.write_text(result.summary_json() + "\n")
    paths.append(summary)
    return (EXIT_OK if _verdict_ok(result) else EXIT_VERDICT), paths


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xylab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"xylab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, required=name != "verify", help="JSON experiment config")
        p.add_argument("--out", type=Path, default=Path("xylab-out"), help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes (default: $XYLAB_THREADS or all cores)")
        p.add_argument("--seed", type=int, default=None, help="master seed, overrides the config")
        p.add_argument("-q", "--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.config is None:
            cfg = EnsembleConfig.from_dict({"experiment": {"kind": "oracle_verify", "realizations": 3}})
            if args.seed is not None:
                cfg = cfg.with_seed(args.seed)
        else:
            cfg = load_config(args.config, args.command, args.seed)
        threads = default_threads() if args.threads is None else args.threads
        if threads < 1:
            raise ConfigurationError(f"--threads must be at least 1, got {threads}")
    except ConfigurationError as exc:
        print(f"xylab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    manifest = RunManifest(args.command, cfg.to_dict(), __version__, cfg.seed, _now())
    try:
        code, paths = execute(args.command, cfg, args.out, threads)
    except ConfigurationError as exc:
        print(f"xylab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, EnsembleFailure, StructuralError, np.linalg.LinAlgError) as exc:
        print(f"xylab: numerical failure: {exc}", file=sys.stderr)
        code, paths = EXIT_NUMERIC, []
    manifest.finished = _now()
    manifest.outputs = [str(p) for p in paths]
    manifest.exit_code = code
    if args.out.is_dir():
        manifest.write(args.out)
    if code == EXIT_VERDICT:
        print("xylab: verdict failure, see summary.json", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
