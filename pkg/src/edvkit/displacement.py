"""Edge displacement, mean edge displacement, and their distributions."""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .conllu_io import Sentence

DEFAULT_SUPPORT = (-30, 30)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability mass over the integer grid ``support_min..support_max``.

    ``counts`` keeps the raw tallies; ``coverage`` is the share of all
    observations that fell inside the support (1.0 unless values were
    excluded).
    """

    support_min: int
    support_max: int
    mass: np.ndarray
    total_count: int
    counts: np.ndarray | None = None
    coverage: float = 1.0

    def __post_init__(self):
        if self.support_min > self.support_max:
            raise ValueError("support_min > support_max")
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.shape != (self.support_max - self.support_min + 1,):
            raise ValueError("mass length does not match support")
        if np.any(mass < 0):
            raise ValueError("negative mass")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def from_counts(cls, counts: Counter | dict, support: tuple[int, int] | None = None,
                    observed: int | None = None) -> "DiscreteDistribution":
        """Normalize integer tallies; values outside ``support`` are dropped."""
        if support is None:
            if not counts:
                raise ValueError("cannot infer support from empty counts")
            support = (min(counts), max(counts))
        lo, hi = support
        arr = np.zeros(hi - lo + 1, dtype=np.int64)
        for value, c in counts.items():
            if lo <= value <= hi:
                arr[value - lo] += c
        total = int(arr.sum())
        if total == 0:
            raise ValueError(f"no observations inside support [{lo}, {hi}]")
        seen = sum(counts.values()) if observed is None else observed
        return cls(lo, hi, arr / total, total, counts=arr, coverage=total / seen)

    @classmethod
    def point_mass(cls, value: int) -> "DiscreteDistribution":
        return cls(value, value, np.ones(1), 1, counts=np.ones(1, dtype=np.int64))

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.support_min, self.support_max + 1)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.mass)

    def mean(self) -> float:
        return float(self.support @ self.mass)

    def on_support(self, lo: int, hi: int) -> "DiscreteDistribution":
        """Zero-pad onto a wider support ``[lo, hi]``."""
        if lo > self.support_min or hi < self.support_max:
            raise ValueError("target support must contain the current support")
        mass = np.zeros(hi - lo + 1)
        off = self.support_min - lo
        mass[off:off + len(self.mass)] = self.mass
        counts = None
        if self.counts is not None:
            counts = np.zeros(hi - lo + 1, dtype=np.int64)
            counts[off:off + len(self.counts)] = self.counts
        return DiscreteDistribution(lo, hi, mass, self.total_count, counts, self.coverage)

    def to_records(self) -> list[dict]:
        counts = self.counts if self.counts is not None else np.full(len(self.mass), -1)
        return [
            {"value": int(v), "probability": float(p), "count": int(c)}
            for v, p, c in zip(self.support, self.mass, counts)
        ]

    def to_csv(self, value_name: str = "displacement") -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([value_name, "probability", "count"])
        for rec in self.to_records():
            writer.writerow([rec["value"], repr(rec["probability"]), rec["count"]])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "support_min": self.support_min,
            "support_max": self.support_max,
            "total_count": self.total_count,
            "coverage": self.coverage,
            "mass": [float(m) for m in self.mass],
            "counts": None if self.counts is None else [int(c) for c in self.counts],
        })

    @classmethod
    def from_json(cls, text: str) -> "DiscreteDistribution":
        d = json.loads(text)
        counts = None if d["counts"] is None else np.asarray(d["counts"], dtype=np.int64)
        return cls(d["support_min"], d["support_max"], np.asarray(d["mass"]),
                   d["total_count"], counts, d["coverage"])


@dataclass(frozen=True)
class MedValue:
    value: float
    edge_count: int


def edge_displacements(sentence: Sentence) -> list[int]:
    """Signed dependent-minus-head offsets, root edge excluded."""
    return [t.id - t.head for t in sentence.tokens if t.head != 0]


def med(sentence: Sentence) -> MedValue:
    """Mean edge displacement over the n-1 non-root edges."""
    disp = edge_displacements(sentence)
    if not disp:
        raise ValueError("mean edge displacement undefined for a one-token sentence")
    return MedValue(sum(disp) / len(disp), len(disp))


def displacement_counts(sentences: Iterable[Sentence]) -> Counter:
    counts = Counter()
    for s in sentences:
        counts.update(edge_displacements(s))
    return counts


def displacement_distribution(sentences: Iterable[Sentence],
                              support: tuple[int, int] = DEFAULT_SUPPORT) -> DiscreteDistribution:
    """Normalized displacement histogram on ``support``.

    Edges outside the window are excluded before normalization; the share
    kept is reported as ``coverage``.
    """
    counts = displacement_counts(sentences)
    if not counts:
        raise ValueError("no non-root edges in input")
    return DiscreteDistribution.from_counts(counts, support)


def length_distribution(sentences: Iterable[Sentence], max_length: int | None = None) -> DiscreteDistribution:
    counts = Counter(len(s) for s in sentences)
    if not counts:
        raise ValueError("empty sentence list")
    hi = max(counts) if max_length is None else max(max_length, max(counts))
    return DiscreteDistribution.from_counts(counts, (1, hi))


def mirror(sentence: Sentence) -> Sentence:
    """Reverse word order, remapping heads (negates every displacement)."""
    n = len(sentence)
    heads = [0 if t.head == 0 else n + 1 - t.head for t in reversed(sentence.tokens)]
    forms = [t.form for t in reversed(sentence.tokens)]
    deprels = [t.deprel for t in reversed(sentence.tokens)]
    return Sentence.from_heads(heads, deprels=deprels, forms=forms, sent_id=sentence.sent_id)


def mean_length(sentences: Sequence[Sentence]) -> float:
    return float(np.mean([len(s) for s in sentences]))
