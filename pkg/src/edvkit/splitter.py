"""MED-guided min/max-EDV treebank splits and EDV sampling-variance runs."""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .conllu_io import Sentence, Treebank, write_file
from .displacement import DEFAULT_SUPPORT, med
from .divergence import edv_between, slv_between, vaserstein
from .displacement import DiscreteDistribution
from .statistics import partial_spearman, spearman

MODES = ("min_edv", "max_edv")
RNG_ALGORITHM = "numpy.random.PCG64"
MANIFEST_VERSION = 1
MIN_POOL = 10
MIN_TOKENS = 3


@dataclass
class SplitResult:
    mode: str
    train: list
    dev: list
    test: list
    seed: int
    achieved_edv: float
    achieved_slv: float
    train_idx: list = field(default_factory=list)
    dev_idx: list = field(default_factory=list)
    test_idx: list = field(default_factory=list)
    rng_algorithm: str = RNG_ALGORITHM

    @property
    def sentence_counts(self) -> tuple[int, int, int]:
        return len(self.train), len(self.dev), len(self.test)

    def manifest(self, name: str = "") -> dict:
        return {
            "schema_version": MANIFEST_VERSION,
            "treebank": name,
            "mode": self.mode,
            "seed": self.seed,
            "rng_algorithm": self.rng_algorithm,
            "achieved_edv": self.achieved_edv,
            "achieved_slv": self.achieved_slv,
            "sentence_counts": dict(zip(("train", "dev", "test"), self.sentence_counts)),
        }


class MedIndex:
    """Per-length lists of ``(MED, pool index)`` sorted by MED, with removal."""

    def __init__(self, pool: Sequence[Sentence]):
        self.meds = [med(s).value for s in pool]
        self.bins: dict[int, list] = {}
        for idx, s in enumerate(pool):
            self.bins.setdefault(len(s), []).append((self.meds[idx], idx))
        for entries in self.bins.values():
            entries.sort()
        self.lengths = sorted(self.bins)
        self.size = len(pool)

    def nearest_length(self, length: int) -> int:
        """Closest non-empty length; ties go to the shorter one."""
        if not self.lengths:
            raise LookupError("index is empty")
        pos = bisect.bisect_left(self.lengths, length)
        if pos == len(self.lengths):
            return self.lengths[-1]
        if self.lengths[pos] == length or pos == 0:
            return self.lengths[pos]
        below, above = self.lengths[pos - 1], self.lengths[pos]
        return below if length - below <= above - length else above

    def _remove(self, length: int, pos: int) -> int:
        entries = self.bins[length]
        _, idx = entries.pop(pos)
        if not entries:
            del self.bins[length]
            self.lengths.pop(bisect.bisect_left(self.lengths, length))
        self.size -= 1
        return idx

    def take_closest(self, length: int, target: float) -> int:
        length = self.nearest_length(length)
        entries = self.bins[length]
        pos = bisect.bisect_left(entries, (target, -1))
        best = None
        if pos < len(entries):
            best = pos
        if pos > 0:
            lo = bisect.bisect_left(entries, (entries[pos - 1][0], -1))
            if best is None:
                best = lo
            else:
                d_lo, d_hi = target - entries[lo][0], entries[best][0] - target
                if d_lo < d_hi or (d_lo == d_hi and entries[lo][1] < entries[best][1]):
                    best = lo
        return self._remove(length, best)

    def take_furthest(self, length: int, target: float) -> int:
        length = self.nearest_length(length)
        entries = self.bins[length]
        lo = 0
        hi = bisect.bisect_left(entries, (entries[-1][0], -1))
        d_lo, d_hi = abs(target - entries[lo][0]), abs(entries[hi][0] - target)
        if d_hi > d_lo or (d_hi == d_lo and entries[hi][1] < entries[lo][1]):
            return self._remove(length, hi)
        return self._remove(length, lo)

    def take_random(self, rng: np.random.Generator) -> int:
        """Uniform over remaining sentences."""
        k = int(rng.integers(self.size))
        for length in self.lengths:
            if k < len(self.bins[length]):
                return self._remove(length, k)
            k -= len(self.bins[length])
        raise LookupError("index is empty")


def pool_treebank(treebank: Treebank, min_tokens: int = MIN_TOKENS) -> list[Sentence]:
    """All train, dev and test sentences (in that order) with at least ``min_tokens`` words."""
    pool = [s for split in ("train", "dev", "test") if treebank.has(split)
            for s in treebank.get(split) if len(s) >= min_tokens]
    if not pool:
        raise ValueError(f"treebank {treebank.name!r} has no sentences with >= {min_tokens} tokens")
    return pool


def _share(n: int, fraction: float = 0.2) -> int:
    return int(math.floor(n * fraction + 0.5))


def _stride_pick(n_items: int, n_pick: int) -> list[int]:
    """Evenly spaced positions, roughly every ``n_items / n_pick``-th item."""
    if n_pick <= 0:
        return []
    step = n_items / n_pick
    return [int(math.floor((j + 1) * step)) - 1 for j in range(n_pick)]


def generate_split(pool: Sequence[Sentence], mode: str, seed: int,
                   support: tuple[int, int] = DEFAULT_SUPPORT) -> SplitResult:
    """Split ``pool`` 60/20/20 so train-test EDV is minimized or maximized.

    Each round draws a sentence length, adds four training sentences closest
    in length and MED to the running training mean, then one test sentence:
    the closest MED for ``min_edv``, the furthest within that length for
    ``max_edv``. Dev is carved from the training sentences at a fixed stride.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if any(len(s) < MIN_TOKENS for s in pool):
        raise ValueError(f"pool contains sentences shorter than {MIN_TOKENS} tokens")
    n = len(pool)
    if n < MIN_POOL:
        raise ValueError(f"pool too small ({n} < {MIN_POOL})")
    n_test = n_dev = _share(n)

    rng = np.random.Generator(np.random.PCG64(seed))
    index = MedIndex(pool)
    meds = index.meds
    train_order, test_idx = [], []
    med_sum = 0.0

    while len(test_idx) < n_test:
        k = min(4, index.size - (n_test - len(test_idx)))
        if not train_order:
            first = index.take_random(rng)
            length = len(pool[first])
            train_order.append(first)
            med_sum += meds[first]
            k -= 1
        else:
            length = _draw_length(index, rng)
        for _ in range(k):
            idx = index.take_closest(length, med_sum / len(train_order))
            train_order.append(idx)
            med_sum += meds[idx]
        target = med_sum / len(train_order)
        if mode == "min_edv":
            test_idx.append(index.take_closest(length, target))
        else:
            test_idx.append(index.take_furthest(length, target))

    # fewer than five sentences can remain; they join train in pool order
    train_order.extend(sorted(idx for entries in index.bins.values() for _, idx in entries))

    dev_positions = set(_stride_pick(len(train_order), n_dev))
    dev_idx = [idx for pos, idx in enumerate(train_order) if pos in dev_positions]
    train_idx = [idx for pos, idx in enumerate(train_order) if pos not in dev_positions]

    train = [pool[i] for i in train_idx]
    test = [pool[i] for i in test_idx]
    return SplitResult(
        mode=mode, train=train, dev=[pool[i] for i in dev_idx], test=test, seed=int(seed),
        achieved_edv=edv_between(train, test, support), achieved_slv=slv_between(train, test),
        train_idx=train_idx, dev_idx=dev_idx, test_idx=test_idx,
    )


def _draw_length(index: MedIndex, rng: np.random.Generator) -> int:
    """Length of a uniformly drawn remaining sentence (weights lengths by count)."""
    k = int(rng.integers(index.size))
    for length in index.lengths:
        if k < len(index.bins[length]):
            return length
        k -= len(index.bins[length])
    raise LookupError("index is empty")


def split_file_names(name: str, mode: str) -> dict[str, str]:
    tag = "edvmin" if mode == "min_edv" else "edvmax"
    files = {part: f"{name}-{tag}-{part}.conllu" for part in ("train", "dev", "test")}
    files["manifest"] = f"{name}-{tag}-manifest.json"
    return files


def write_split(result: SplitResult, out_dir, name: str) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = split_file_names(name, result.mode)
    paths = {part: out / fname for part, fname in names.items()}
    for part in ("train", "dev", "test"):
        write_file(getattr(result, part), paths[part])
    paths["manifest"].write_text(json.dumps(result.manifest(name), indent=2, sort_keys=True) + "\n")
    return paths


# Delta statistics between min- and max-EDV runs

DELTA_FIELDS = ("las", "edv", "slv", "train_tokens", "l_test")


def delta_statistics(results_min: Mapping[str, Mapping], results_max: Mapping[str, Mapping]) -> dict:
    """Per-treebank max-minus-min deltas and their correlation battery.

    Each input maps treebank name to a record with ``las``, ``edv``, ``slv``,
    ``train_tokens`` and ``l_test``.
    """
    if set(results_min) != set(results_max):
        missing = sorted(set(results_min) ^ set(results_max))
        raise KeyError(f"unpaired treebanks: {missing}")
    rows = []
    for name in sorted(results_min):
        lo, hi = results_min[name], results_max[name]
        row = {"treebank": name}
        for f in DELTA_FIELDS:
            row[f"delta_{f}"] = float(hi[f]) - float(lo[f])
        row["train_tokens"] = (float(hi["train_tokens"]) + float(lo["train_tokens"])) / 2
        row["l_test"] = (float(hi["l_test"]) + float(lo["l_test"])) / 2
        rows.append(row)

    col = {k: np.array([r[k] for r in rows]) for k in rows[0] if k != "treebank"} if rows else {}
    battery = []

    def add(variable, target, covariate=None):
        if covariate:
            res = partial_spearman(col[variable], col[target], [col[covariate]], names=[covariate])
        else:
            res = spearman(col[variable], col[target])
        battery.append({"variable": variable, "target": target, "covariate": covariate or "None", **res.as_dict()})

    if len(rows) >= 4:
        for v in ("train_tokens", "l_test", "delta_train_tokens", "delta_l_test", "delta_slv", "delta_edv"):
            if np.ptp(col[v]) > 0 and np.ptp(col["delta_las"]) > 0:
                add(v, "delta_las")
        for v in ("l_test", "delta_slv"):
            if np.ptp(col[v]) > 0 and np.ptp(col["delta_edv"]) > 0:
                add(v, "delta_edv")
        if len(rows) >= 5:
            for cov in ("l_test", "delta_slv"):
                if all(np.ptp(col[c]) > 0 for c in ("delta_edv", "delta_las", cov)):
                    add("delta_edv", "delta_las", cov)
    summary = {
        f"mean_delta_{f}": float(np.mean(col[f"delta_{f}"])) for f in DELTA_FIELDS
    } if rows else {}
    if rows:
        summary["sd_delta_las"] = float(np.std(col["delta_las"], ddof=1)) if len(rows) > 1 else 0.0
        summary["mean_abs_delta_train_tokens"] = float(np.mean(np.abs(col["delta_train_tokens"])))
    return {"rows": rows, "correlations": battery, "summary": summary}


# Sample-size variance

def _displacement_matrix(sentences: Sequence[Sentence], support: tuple[int, int]) -> np.ndarray:
    lo, hi = support
    mat = np.zeros((len(sentences), hi - lo + 1), dtype=np.int64)
    for i, s in enumerate(sentences):
        for t in s.tokens:
            if t.head:
                d = t.id - t.head
                if lo <= d <= hi:
                    mat[i, d - lo] += 1
    return mat


def _edv_from_counts(train_counts: np.ndarray, test_dist: DiscreteDistribution, lo: int) -> float:
    total = int(train_counts.sum())
    p = DiscreteDistribution(lo, lo + len(train_counts) - 1, train_counts / total, total)
    return vaserstein(p, test_dist)


def variance_experiment(train: Sequence[Sentence], test: Sequence[Sentence],
                        sizes: Sequence[int] = (2000, 4000, 6000, 8000), repeats: int = 20,
                        seed: int = 0, support: tuple[int, int] = DEFAULT_SUPPORT) -> list[dict]:
    """EDV of ``repeats`` random training subsets per size against the fixed test split."""
    n = len(train)
    if not sizes or max(sizes) > n:
        raise ValueError(f"training split has {n} sentences, fewer than requested size {max(sizes, default=0)}")
    rng = np.random.Generator(np.random.PCG64(seed))
    mat = _displacement_matrix(train, support)
    test_counts = _displacement_matrix(test, support).sum(axis=0)
    test_dist = DiscreteDistribution(support[0], support[1], test_counts / test_counts.sum(), int(test_counts.sum()))
    rows = []
    for size in sizes:
        distinct_possible = math.comb(n, size) >= repeats
        seen, values = set(), []
        while len(values) < repeats:
            idx = np.sort(rng.choice(n, size=size, replace=False))
            key = idx.tobytes()
            if distinct_possible and key in seen:
                continue
            seen.add(key)
            values.append(_edv_from_counts(mat[idx].sum(axis=0), test_dist, support[0]))
        arr = np.array(values)
        rows.append({
            "size": int(size), "mean_edv": float(arr.mean()),
            "std_edv": float(arr.std(ddof=1)) if repeats > 1 else 0.0,
            "values": [float(v) for v in arr],
        })
    return rows
