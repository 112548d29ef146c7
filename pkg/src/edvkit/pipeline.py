"""Per-treebank measurement and the table-level statistical analysis."""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import morphology
from .conllu_io import Treebank
from .displacement import DEFAULT_SUPPORT, displacement_counts, length_distribution
from .divergence import edv, slv
from .statistics import (background_removal, ols_regression, partial_spearman,
                         shapiro_wilk, spearman)
from .treebank_stats import treebank_crossings

logger = logging.getLogger(__name__)

MEASURE_COLUMNS = (
    "treebank", "edv", "slv", "train_tokens", "train_sentences", "test_tokens", "test_sentences",
    "l_train", "l_test", "edges_in_range", "edges_total", "coverage",
    "h_word_norm", "ttr", "f_l_norm", "f_il_norm", "hpe_norm", "mc", "crossings",
)

NORMALITY_VARIABLES = ("las", "train_tokens", "edv", "l_test", "slv", "test_tokens")
LAS_VARIABLES = ("train_tokens", "train_sentences", "l_train", "test_tokens",
                 "test_sentences", "l_test", "slv", "edv")
PAIR_VARIABLES = (
    ("train_tokens", "edv"), ("l_test", "edv"), ("l_train", "edv"), ("test_tokens", "edv"),
    ("slv", "edv"), ("test_tokens", "train_tokens"), ("l_test", "train_tokens"),
)
PARTIAL_COVARIATES = ((), ("train_tokens",), ("train_tokens", "l_test"))
REGRESSION_SETS = (
    ("log_train_tokens",), ("log_train_tokens", "l_test"),
    ("log_train_tokens", "edv"), ("log_train_tokens", "l_test", "edv"),
)
BACKGROUND_STAGES = (("train_tokens", "log_linear"), ("l_test", "linear"))


class DataError(ValueError):
    """Input data cannot be analysed (missing treebanks, failed joins, too few rows)."""


def measure_treebank(treebank: Treebank, support: tuple[int, int] = DEFAULT_SUPPORT,
                     lowercase: bool = False) -> dict:
    """One measurement row for a treebank with train and test splits."""
    train, test = treebank.get("train"), treebank.get("test")
    in_range = total = 0
    for split in treebank.available_splits:
        counts = displacement_counts(treebank.get(split))
        total += sum(counts.values())
        in_range += sum(c for d, c in counts.items() if support[0] <= d <= support[1])
    row = {
        "treebank": treebank.name,
        "edv": edv(treebank, support),
        "slv": slv(treebank),
        "train_tokens": sum(len(s) for s in train),
        "train_sentences": len(train),
        "test_tokens": sum(len(s) for s in test),
        "test_sentences": len(test),
        "l_train": length_distribution(train).mean(),
        "l_test": length_distribution(test).mean(),
        "edges_in_range": in_range,
        "edges_total": total,
        "coverage": in_range / total if total else math.nan,
        "crossings": treebank_crossings(train),
    }
    try:
        row.update(morphology.complexity_scores(train, lowercase=lowercase).as_dict())
    except ValueError as exc:
        logger.warning("%s: complexity undefined (%s)", treebank.name, exc)
        row.update({k: math.nan for k in ("h_word_norm", "ttr", "f_l_norm", "f_il_norm", "hpe_norm", "mc")})
    return row


def _measure_job(args):
    tb, support, lowercase = args
    return measure_treebank(tb, support, lowercase)


def measure_all(treebanks: Sequence[Treebank], support: tuple[int, int] = DEFAULT_SUPPORT,
                lowercase: bool = False, jobs: int = 1) -> list[dict]:
    usable = [tb for tb in treebanks if tb.has("train") and tb.has("test")]
    skipped = sorted(set(tb.name for tb in treebanks) - set(tb.name for tb in usable))
    if skipped:
        logger.info("skipping treebanks without train+test: %s", ", ".join(skipped))
    work = [(tb, support, lowercase) for tb in usable]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_measure_job, work))
    else:
        rows = [_measure_job(w) for w in work]
    return sorted(rows, key=lambda r: r["treebank"])


def aggregate_coverage(rows: Iterable[Mapping]) -> float:
    rows = list(rows)
    return sum(r["edges_in_range"] for r in rows) / sum(r["edges_total"] for r in rows)


# CSV helpers

def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(x) for x in v)
    return str(v)


def rows_to_csv(rows: Sequence[Mapping], columns: Sequence[str] | None = None) -> str:
    columns = list(columns or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def _parse_cell(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_table(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: _parse_cell(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def join_las(rows: Sequence[Mapping], las_rows: Sequence[Mapping],
             las_column: str = "las") -> tuple[list[dict], list[str]]:
    """Inner join on ``treebank``; returns joined rows and unmatched names."""
    las = {}
    for r in las_rows:
        if las_column not in r:
            raise DataError(f"LAS table lacks a {las_column!r} column")
        las[str(r["treebank"])] = float(r[las_column])
    joined, missing = [], []
    names = set()
    for r in rows:
        name = str(r["treebank"])
        names.add(name)
        if name in las:
            joined.append({**r, "las": las[name]})
        else:
            missing.append(name)
    missing += sorted(set(las) - names)
    return joined, sorted(missing)


# Analysis

def _col(rows, key) -> np.ndarray:
    return np.array([float(r[key]) for r in rows])


def correlation_row(rows, variable, target, covariates=(), **labels) -> dict:
    res = partial_spearman(_col(rows, variable), _col(rows, target),
                           [_col(rows, c) for c in covariates], names=list(covariates))
    return {**labels, "variable": variable, "target": target, **res.as_dict()}


def analyze_table(rows: Sequence[Mapping], min_rows: int = 10) -> dict:
    """Normality, correlation, partial, background, regression and complexity tables."""
    rows = [dict(r) for r in rows]
    if len(rows) < min_rows:
        raise DataError(f"analysis needs at least {min_rows} treebanks, got {len(rows)}")
    for r in rows:
        r["log_train_tokens"] = math.log(float(r["train_tokens"]))
    have = set(rows[0])
    report = {"n": len(rows)}

    report["normality"] = []
    for v in NORMALITY_VARIABLES:
        if v in have:
            res = shapiro_wilk(_col(rows, v))
            report["normality"].append({"variable": v, "w": res.w, "p_value": res.p_value,
                                        "normal": res.normal_at_005})

    report["las_correlations"] = [correlation_row(rows, v, "las") for v in LAS_VARIABLES if v in have]
    report["pair_correlations"] = [correlation_row(rows, a, b) for a, b in PAIR_VARIABLES
                                   if a in have and b in have]
    report["partial_correlations"] = [correlation_row(rows, "edv", "las", covs)
                                      for covs in PARTIAL_COVARIATES]
    report["background_removal"] = background_report(rows)
    report["regression"] = []
    for preds in REGRESSION_SETS:
        res = ols_regression(_col(rows, "las"), {p: _col(rows, p) for p in preds})
        report["regression"].append({
            "variables": ",".join(preds), "adj_r_squared": res.adj_r_squared, "r_squared": res.r_squared,
            "relative_importance": [res.relative_importance[p] for p in preds],
            "p_values": [res.coefficients[p][1] for p in preds],
            "coefficients": [res.coefficients[p][0] for p in preds], "intercept": res.intercept,
        })
    if "mc" in have and not any(math.isnan(float(r["mc"])) for r in rows):
        report["complexity"] = complexity_report(rows)
    report["training_measures"] = [correlation_row(rows, v, "edv") for v in ("crossings", "ttr") if v in have]
    return report


def background_report(rows, stages=BACKGROUND_STAGES, probe: str = "edv", target: str = "las") -> list[dict]:
    """Probe-vs-target correlation before and after each background stage."""
    normalized, fits = background_removal(_col(rows, target), [(_col(rows, c), fam) for c, fam in stages])
    out = [{"stage": "none", "family": "", **_probe_corr(_col(rows, probe), _col(rows, target))}]
    for (cov, fam), fit in zip(stages, fits):
        out.append({"stage": cov, "family": fam, "slope": fit["slope"], "intercept": fit["intercept"],
                     **_probe_corr(_col(rows, probe), fit["normalized"])})
    return out


def _probe_corr(probe, target) -> dict:
    if np.ptp(target) == 0:
        return {"rho": math.nan, "p_value": math.nan}
    res = spearman(probe, target)
    return {"rho": res.rho, "p_value": res.p_value}


def complexity_report(rows) -> list[dict]:
    names = {r["treebank"]: float(r["mc"]) for r in rows}
    complex_, not_complex = morphology.complexity_split(names)
    subsets = (("complex", [r for r in rows if r["treebank"] in complex_]),
               ("not", [r for r in rows if r["treebank"] in not_complex]),
               ("full", rows))
    out = []
    for covs in ((), ("train_tokens",)):
        for label, sub in subsets:
            if len(sub) <= len(covs) + 3 or len(sub) < 4:
                out.append({"set": label, "n": len(sub), "covariates": ",".join(covs) or "None",
                            "rho": math.nan})
                continue
            out.append(correlation_row(sub, "edv", "las", covs, set=label))
    return out


def binned_partials(binned_rows: Sequence[Mapping], covariate: str = "train_tokens") -> list[dict]:
    """Per sentence length, partial rho of EDV vs LAS across treebanks.

    ``binned_rows`` holds one record per (treebank, length) with ``edv``,
    ``las`` and the covariate.
    """
    by_len = {}
    for r in binned_rows:
        by_len.setdefault(int(r["length"]), []).append(r)
    out = []
    for length in sorted(by_len):
        sub = by_len[length]
        try:
            out.append(correlation_row(sub, "edv", "las", (covariate,), length=length))
        except (ValueError, np.linalg.LinAlgError) as exc:
            logger.info("length %d skipped: %s", length, exc)
    return out


def mean_sd(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=1))


def write_report_tables(report: Mapping, out_dir) -> list[Path]:
    """One CSV per list-valued section of an analysis report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for key, value in report.items():
        if isinstance(value, list) and value and isinstance(value[0], Mapping):
            cols = []
            for r in value:
                cols += [c for c in r if c not in cols]
            path = out / f"{key}.csv"
            path.write_text(rows_to_csv(value, cols))
            written.append(path)
    return written
