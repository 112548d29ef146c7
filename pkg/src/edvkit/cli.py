"""Command-line entry point: ``edvkit measure|analyze|split|variance|eval-las``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .conllu_io import AlignmentError, ConlluError, Treebank, discover_treebanks, evaluate_las, parse_file
from .displacement import DEFAULT_SUPPORT
from .pipeline import (MEASURE_COLUMNS, DataError, aggregate_coverage, analyze_table, binned_partials,
                       join_las, mean_sd, measure_all, read_table, rows_to_csv, write_report_tables)
from .splitter import MODES, generate_split, pool_treebank, variance_experiment, write_split
from .statistics import NumericError
from .treebank_stats import DEFAULT_BINS, binned_edv, binned_las

logger = logging.getLogger("edvkit")

UD_ROOT_ENV = "EDVKIT_UD_ROOT"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class AnalysisConfig:
    ud_root: Path | None = None
    output_dir: Path = Path("edvkit-out")
    displacement_support: tuple = DEFAULT_SUPPORT
    bins: tuple = DEFAULT_BINS
    seed: int = 0
    format: str = "csv"
    las_table: Path | None = None
    label_granularity: str = "universal"
    fit_families: dict = field(default_factory=lambda: {"train_tokens": "log_linear", "l_test": "linear"})

    def __post_init__(self):
        lo, hi = self.displacement_support
        if lo >= hi:
            raise UsageError("support minimum must be below its maximum")
        if self.bins[0] > self.bins[1] or self.bins[0] < 1:
            raise UsageError("invalid length bins")
        if self.format not in ("csv", "json"):
            raise UsageError(f"unknown format {self.format!r}")


def _sci(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.3e}"
    return str(v)


def _ud_root(args) -> Path:
    root = args.ud_root or os.environ.get(UD_ROOT_ENV)
    if not root:
        raise UsageError(f"--ud-root not given and ${UD_ROOT_ENV} unset")
    return Path(root)


def _names(path) -> list[str] | None:
    if not path:
        return None
    return [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()
            if ln.strip() and not ln.startswith("#")]


def _config(args) -> AnalysisConfig:
    kw = {"output_dir": Path(args.output_dir)}
    if getattr(args, "support", None):
        kw["displacement_support"] = tuple(args.support)
    if getattr(args, "bins", None):
        kw["bins"] = tuple(args.bins)
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    if getattr(args, "format", None):
        kw["format"] = args.format
    return AnalysisConfig(**kw)


def _write_rows(rows, path: Path, fmt: str, columns=None) -> Path:
    path = path.with_suffix("." + fmt)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path.write_text(rows_to_csv(rows, columns))
    else:
        path.write_text(_dump(rows))
    return path


def _finite(o):
    """Replace NaN/inf with None so reports are strict JSON."""
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    return o


def _dump(obj) -> str:
    return json.dumps(_finite(obj), indent=2, sort_keys=True, default=_json_default, allow_nan=False) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _treebank(args) -> Treebank:
    if getattr(args, "train", None):
        splits = {"train": parse_file(args.train, "lenient")}
        if getattr(args, "dev", None):
            splits["dev"] = parse_file(args.dev, "lenient")
        if getattr(args, "test", None):
            splits["test"] = parse_file(args.test, "lenient")
        return Treebank(args.name or Path(args.train).stem.split("-ud-")[0], splits)
    if not args.treebank:
        raise UsageError("give --treebank NAME (with --ud-root) or --train/--test files")
    found = discover_treebanks(_ud_root(args), names=[args.treebank])
    if not found:
        raise DataError(f"treebank {args.treebank!r} not found under {_ud_root(args)}")
    return found[0]


def cmd_measure(args) -> int:
    cfg = _config(args)
    treebanks = discover_treebanks(_ud_root(args), names=_names(args.treebank_list), require=("train", "test"))
    if not treebanks:
        raise DataError("no treebanks with train and test splits found")
    rows = measure_all(treebanks, cfg.displacement_support, lowercase=args.lowercase, jobs=args.jobs)
    path = _write_rows(rows, cfg.output_dir / "measurements", cfg.format, MEASURE_COLUMNS)
    edv_mean, edv_sd = mean_sd([r["edv"] for r in rows]) if len(rows) > 1 else (rows[0]["edv"], 0.0)
    summary = {
        "treebanks": len(rows), "edv_mean": edv_mean, "edv_sd": edv_sd,
        "coverage": aggregate_coverage(rows),
    }
    (cfg.output_dir / "measurements-summary.json").write_text(_dump(summary))
    if args.binned:
        tidy = []
        for tb in treebanks:
            series = binned_edv(tb.get("train"), tb.get("test"), cfg.bins, cfg.displacement_support)
            tidy += [{"treebank": tb.name, "length": ln, "metric": "edv", "value": series.values[ln],
                      "count": series.counts[ln]} for ln in series.bin_lengths if ln in series.values]
        _write_rows(tidy, cfg.output_dir / "binned-edv", "csv")
    print(f"{len(rows)} treebanks -> {path}")
    print(f"mean EDV {_sci(edv_mean)} (sd {_sci(edv_sd)}); support coverage {summary['coverage']:.4%}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _config(args)
    if not args.las_table:
        raise UsageError("--las-table is required")
    if args.measurements:
        rows = read_table(args.measurements)
    else:
        treebanks = discover_treebanks(_ud_root(args), names=_names(args.treebank_list), require=("train", "test"))
        rows = measure_all(treebanks, cfg.displacement_support, jobs=args.jobs)
    joined, missing = join_las(rows, read_table(args.las_table), args.las_column)
    if missing:
        logger.warning("unmatched treebanks (%d): %s", len(missing), ", ".join(missing))
    report = analyze_table(joined)
    report["unmatched"] = missing
    if args.binned_table:
        report["binned_partials"] = binned_partials(read_table(args.binned_table))
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "analysis.json").write_text(_dump(report))
    write_report_tables(report, cfg.output_dir)
    for row in report["las_correlations"]:
        print(f"{row['variable']:>16}  rho={_sci(row['rho'])}  p={_sci(row['p_value'])}")
    return EXIT_OK


def cmd_split(args) -> int:
    cfg = _config(args)
    tb = _treebank(args)
    pool = pool_treebank(tb)
    modes = MODES if args.mode == "both" else (f"{args.mode}_edv",)
    for mode in modes:
        result = generate_split(pool, mode, cfg.seed, cfg.displacement_support)
        paths = write_split(result, cfg.output_dir, tb.name.replace(" ", "_"))
        print(f"{mode}: EDV {_sci(result.achieved_edv)}  counts {result.sentence_counts}  -> {paths['manifest']}")
    return EXIT_OK


def cmd_variance(args) -> int:
    cfg = _config(args)
    tb = _treebank(args)
    rows = variance_experiment(tb.get("train"), tb.get("test"), args.sizes, args.repeats, cfg.seed,
                               cfg.displacement_support)
    tidy = [{"treebank": tb.name, "size": r["size"], "repeat": i, "edv": v}
            for r in rows for i, v in enumerate(r["values"])]
    _write_rows(tidy, cfg.output_dir / f"{tb.name.replace(' ', '_')}-variance-samples", "csv")
    summary = [{k: r[k] for k in ("size", "mean_edv", "std_edv")} for r in rows]
    path = _write_rows(summary, cfg.output_dir / f"{tb.name.replace(' ', '_')}-variance", cfg.format)
    for r in summary:
        print(f"{r['size']:>7}  {_sci(r['mean_edv'])} ({_sci(r['std_edv'])})")
    print(f"-> {path}")
    return EXIT_OK


def cmd_eval_las(args) -> int:
    gold, pred = parse_file(args.gold, "lenient"), parse_file(args.predicted, "lenient")
    las = evaluate_las(gold, pred, args.granularity)
    print(f"LAS {100 * las:.2f}")
    if args.binned:
        series = binned_las(gold, pred, tuple(args.bins or DEFAULT_BINS), args.granularity)
        for ln in series.bin_lengths:
            if ln in series.values:
                print(f"{ln:>4}  {100 * series.values[ln]:.2f}  (n={series.counts[ln]})")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="edvkit", description="Edge-displacement divergence tools for UD treebanks.",
                     epilog="exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, ud=True):
        if ud:
            p.add_argument("--ud-root", help=f"UD release directory (default ${UD_ROOT_ENV})")
        p.add_argument("-o", "--output-dir", default="edvkit-out")
        p.add_argument("--support", type=int, nargs=2, metavar=("MIN", "MAX"))
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--jobs", type=int, default=1)

    def single_treebank(p):
        p.add_argument("--treebank", help="treebank name, e.g. 'Czech-PDT'")
        p.add_argument("--train")
        p.add_argument("--dev")
        p.add_argument("--test")
        p.add_argument("--name", help="name used for output files with --train")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("measure", help="per-treebank EDV, SLV, size, complexity and crossing metrics")
    common(p)
    p.add_argument("--treebank-list", help="file with one treebank name per line")
    p.add_argument("--lowercase", action="store_true", help="lowercase forms for complexity metrics")
    p.add_argument("--binned", action="store_true", help="also write sentence-length-binned EDV")
    p.add_argument("--bins", type=int, nargs=2, metavar=("MIN", "MAX"))
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("analyze", help="statistical analysis of measurements against LAS")
    common(p)
    p.add_argument("--measurements", help="CSV written by 'measure' (else measured from --ud-root)")
    p.add_argument("--treebank-list")
    p.add_argument("--las-table", help="CSV with columns treebank,las")
    p.add_argument("--las-column", default="las")
    p.add_argument("--binned-table", help="CSV with treebank,length,edv,las,train_tokens")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("split", help="write min- and/or max-EDV 60/20/20 splits")
    common(p)
    single_treebank(p)
    p.add_argument("--mode", choices=("min", "max", "both"), default="both")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("variance", help="EDV spread over random training subsets")
    common(p)
    single_treebank(p)
    p.add_argument("--sizes", type=int, nargs="+", default=[2000, 4000, 6000, 8000])
    p.add_argument("--repeats", type=int, default=20)
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("eval-las", help="LAS of a predicted file against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--predicted", required=True)
    p.add_argument("--granularity", choices=("universal", "full"), default="universal")
    p.add_argument("--binned", action="store_true")
    p.add_argument("--bins", type=int, nargs=2, metavar=("MIN", "MAX"))
    p.set_defaults(func=cmd_eval_las)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"edvkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ConlluError, AlignmentError, KeyError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"edvkit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"edvkit: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
