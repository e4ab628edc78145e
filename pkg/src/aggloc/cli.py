"""Command-line interface.

Subcommands: synth, ingest, run, sweep, cdf.  Exit codes: 0 on success,
2 on configuration errors, 3 on data errors.  Set AGGLOC_LOG to control
verbosity (DEBUG/INFO/WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import experiment, pipeline, triplets
from .config import load_config
from .errors import ConfigError, DataError, StageError
from .model import TimeFrame

log = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_DATA = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="flat key=value config file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggloc",
        description="Quantify privacy leakage from aggregate location time-series",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, description in (
        ("synth", "generate a synthetic corpus as ground-truth triplets"),
        ("ingest", "pre-process raw traces into ground-truth triplets"),
        ("run", "run one configured experiment"),
    ):
        _add_common(sub.add_parser(name, help=description))

    sweep = sub.add_parser("sweep", help="run the config once per axis value")
    _add_common(sweep)
    sweep.add_argument("--axis", required=True, help="config key to vary, e.g. defense.epsilon")
    sweep.add_argument("--values", required=True, help="comma-separated axis values")

    cdf = sub.add_parser("cdf", help="emit empirical error CDFs from a report")
    cdf.add_argument("report", help="path to a report.json")
    cdf.add_argument("--out", required=True, help="output directory")
    return parser


def _config(args) -> "experiment.RunConfig":
    cfg = load_config(args.config)
    if args.seed is not None:
        raw = dict(cfg.raw)
        raw["seed"] = str(args.seed)
        from .config import validate_config

        cfg = validate_config(raw)
    return cfg


def _write_ground_truth(users, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    triplets.write_triplets(
        outdir / "ground_truth.csv", {u.user_id: u.cells for u in users}, binary=True
    )
    meta = {
        "users": len(users),
        "roi_count": int(users[0].roi_count),
        "total_epochs": int(users[0].total_epochs),
    }
    (outdir / "corpus_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _cmd_synth(args) -> None:
    cfg = _config(args)
    if cfg["dataset.source"] != "synth":
        raise ConfigError("synth command needs dataset.source = synth")
    users, _ = experiment._load_users(cfg)
    _write_ground_truth(users, Path(args.out))
    print(f"wrote {len(users)} users to {args.out}/ground_truth.csv")


def _cmd_ingest(args) -> None:
    cfg = _config(args)
    if cfg["dataset.source"] != "ingest":
        raise ConfigError("ingest command needs dataset.source = ingest")
    users, _ = experiment._load_users(cfg)
    _write_ground_truth(users, Path(args.out))
    print(f"wrote {len(users)} users to {args.out}/ground_truth.csv")


def _cmd_run(args) -> None:
    cfg = _config(args)
    report = experiment.run(cfg)
    paths = experiment.write_report(report, args.out)
    summary = report.summary
    print(
        f"prior mean {summary['prior_mean']:.4f} -> posterior mean "
        f"{summary['posterior_mean']:.4f} (PL {summary['pl_mean']:.4f})"
    )
    for path in paths:
        print(f"wrote {path}")


def _cmd_sweep(args) -> None:
    cfg = _config(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    results = experiment.sweep(cfg, args.axis, values)
    paths = experiment.write_sweep(results, args.axis, args.out)
    print(f"wrote {len(paths)} file(s) under {args.out}")


def _cmd_cdf(args) -> None:
    try:
        report_dict = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read report {args.report}: {exc}") from exc
    for path in experiment.emit_cdf(report_dict, args.out):
        print(f"wrote {path}")


_COMMANDS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "cdf": _cmd_cdf,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("AGGLOC_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, StageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
