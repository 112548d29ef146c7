"""Structural treebank metrics and sentence-length-binned series."""
from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

from .conllu_io import Sentence, evaluate_las
from .displacement import DEFAULT_SUPPORT
from .divergence import edv_between

DEFAULT_BINS = (3, 30)


@dataclass
class BinSeries:
    metric: str
    bin_lengths: list
    values: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    missing: list = field(default_factory=list)

    def to_csv(self, treebank: str = "") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["treebank", "length", "metric", "value", "count"])
        for length in self.bin_lengths:
            if length in self.values:
                w.writerow([treebank, length, self.metric, repr(self.values[length]), self.counts[length]])
        return buf.getvalue()


def _edges(sentence: Sentence) -> list[tuple[int, int]]:
    return [(min(t.id, t.head), max(t.id, t.head)) for t in sentence.tokens if t.head != 0]


def count_crossings(sentence: Sentence) -> int:
    edges = sorted(_edges(sentence))
    c = 0
    for i, (a, b) in enumerate(edges):
        for x, y in edges[i + 1:]:
            if x >= b:
                break
            if a < x < b < y:
                c += 1
    return c


def potential_crossings(sentence: Sentence, convention: str = "disjoint") -> int:
    """|Q|: vertex-disjoint edge pairs (default) or all edge pairs."""
    edges = _edges(sentence)
    total = comb(len(edges), 2)
    if convention == "all":
        return total
    if convention != "disjoint":
        raise ValueError(f"unknown |Q| convention {convention!r}")
    degree = Counter()
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    return total - sum(comb(d, 2) for d in degree.values())


def crossings_normalized(sentence: Sentence, convention: str = "disjoint") -> float:
    q = potential_crossings(sentence, convention)
    return count_crossings(sentence) / q if q else 0.0


def treebank_crossings(sentences: Sequence[Sentence], convention: str = "disjoint") -> float:
    """Pooled C/|Q| over all sentences with |Q| > 0."""
    c_total = q_total = 0
    for s in sentences:
        q = potential_crossings(s, convention)
        if q:
            c_total += count_crossings(s)
            q_total += q
    return c_total / q_total if q_total else 0.0


def by_length(sentences: Sequence[Sentence]) -> dict[int, list]:
    groups = defaultdict(list)
    for s in sentences:
        groups[len(s)].append(s)
    return groups


def binned_edv(train: Sequence[Sentence], test: Sequence[Sentence], bins: tuple[int, int] = DEFAULT_BINS,
               support: tuple[int, int] = DEFAULT_SUPPORT) -> BinSeries:
    """EDV between the length-l train and test subsamples, for each l in ``bins``."""
    lengths = list(range(bins[0], bins[1] + 1))
    tr, te = by_length(train), by_length(test)
    series = BinSeries("edv", lengths)
    for length in lengths:
        if not tr.get(length) or not te.get(length):
            series.missing.append(length)
            continue
        series.values[length] = edv_between(tr[length], te[length], support)
        series.counts[length] = len(te[length])
    return series


def binned_las(gold: Sequence[Sentence], predicted: Sequence[Sentence], bins: tuple[int, int] = DEFAULT_BINS,
               label_granularity: str = "universal") -> BinSeries:
    if len(gold) != len(predicted):
        # delegate the error message
        evaluate_las(gold, predicted, label_granularity)
    lengths = list(range(bins[0], bins[1] + 1))
    pairs = defaultdict(lambda: ([], []))
    for g, p in zip(gold, predicted):
        pairs[len(g)][0].append(g)
        pairs[len(g)][1].append(p)
    series = BinSeries("las", lengths)
    for length in lengths:
        if length not in pairs:
            series.missing.append(length)
            continue
        g, p = pairs[length]
        series.values[length] = evaluate_las(g, p, label_granularity)
        series.counts[length] = len(g)
    return series
