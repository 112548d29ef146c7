"""Reading, writing and scoring CoNLL-U treebanks.

Only syntactic words are kept: multiword-token ranges (``1-2``) and empty
nodes (``1.1``) are dropped on read, so token ids are always ``1..n``.
"""
from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

logger = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")
_SPLIT_RE = re.compile(r"-ud-(train|dev|test)\.conllu$")


class ConlluError(ValueError):
    """Malformed CoNLL-U input."""


class AlignmentError(ValueError):
    """Gold and predicted treebanks do not share tokenization."""


@dataclass(frozen=True)
class Token:
    id: int
    form: str
    lemma: str
    upos: str
    head: int
    deprel: str
    feats: dict = field(default_factory=dict)
    xpos: str = "_"
    deps: str = "_"
    misc: str = "_"

    @property
    def feats_string(self) -> str:
        if not self.feats:
            return "_"
        return "|".join(f"{k}={v}" for k, v in self.feats.items())

    def to_line(self) -> str:
        return "\t".join((
            str(self.id), self.form, self.lemma, self.upos, self.xpos,
            self.feats_string, str(self.head), self.deprel, self.deps, self.misc,
        ))


@dataclass(frozen=True)
class Sentence:
    tokens: tuple
    sent_id: str | None = None
    comments: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "comments", tuple(self.comments))
        validate_tree(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    @property
    def heads(self) -> list[int]:
        return [t.head for t in self.tokens]

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @classmethod
    def from_heads(cls, heads: Sequence[int], deprels: Sequence[str] | None = None,
                   forms: Sequence[str] | None = None, sent_id: str | None = None) -> "Sentence":
        """Build a bare sentence from a head vector (1-based ids, 0 = root)."""
        n = len(heads)
        forms = forms or [f"w{i}" for i in range(1, n + 1)]
        deprels = deprels or ["root" if h == 0 else "dep" for h in heads]
        tokens = [
            Token(id=i, form=forms[i - 1], lemma=forms[i - 1], upos="X",
                  head=int(heads[i - 1]), deprel=deprels[i - 1])
            for i in range(1, n + 1)
        ]
        return cls(tokens, sent_id=sent_id)


def validate_tree(tokens: Sequence[Token]) -> None:
    """Raise ConlluError unless ``tokens`` form a single-rooted tree."""
    n = len(tokens)
    if n == 0:
        raise ConlluError("sentence has no syntactic words")
    for i, tok in enumerate(tokens, start=1):
        if tok.id != i:
            raise ConlluError(f"token ids are not consecutive at position {i} (got {tok.id})")
        if tok.head < 0 or tok.head > n:
            raise ConlluError(f"token {i}: head {tok.head} out of range 0..{n}")
        if tok.head == tok.id:
            raise ConlluError(f"token {i} is its own head")
        if not tok.deprel or tok.deprel == "_":
            raise ConlluError(f"token {i}: empty deprel")
    roots = [t.id for t in tokens if t.head == 0]
    if len(roots) != 1:
        raise ConlluError(f"expected exactly one root, found {len(roots)}")
    heads = [0] + [t.head for t in tokens]
    # every walk must hit 0 within n steps
    for start in range(1, n + 1):
        node, steps = start, 0
        while node != 0:
            node = heads[node]
            steps += 1
            if steps > n:
                raise ConlluError(f"cycle through token {start}")


def _parse_feats(raw: str) -> dict:
    if raw == "_" or raw == "":
        return {}
    feats = {}
    for pair in raw.split("|"):
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConlluError(f"malformed feature {pair!r}")
        feats[key] = value
    return feats


def _parse_block(lines: list[str]) -> Sentence:
    comments, tokens = [], []
    sent_id = None
    for line in lines:
        if line.startswith("#"):
            comments.append(line)
            key, sep, value = line[1:].partition("=")
            if sep and key.strip() == "sent_id":
                sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"expected 10 columns, got {len(cols)}: {line!r}")
        if "-" in cols[0] or "." in cols[0]:
            continue
        try:
            tid, head = int(cols[0]), int(cols[6])
        except ValueError as exc:
            raise ConlluError(f"non-integer id/head in {line!r}") from exc
        tokens.append(Token(
            id=tid, form=cols[1], lemma=cols[2], upos=cols[3], xpos=cols[4],
            feats=_parse_feats(cols[5]), head=head, deprel=cols[7],
            deps=cols[8], misc=cols[9],
        ))
    return Sentence(tokens, sent_id=sent_id, comments=comments)


def _blocks(lines: Iterable[str]) -> Iterator[tuple[int, list[str]]]:
    block, start = [], 0
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        if line.strip() == "":
            if block:
                yield start, block
            block = []
            continue
        if not block:
            start = lineno
        block.append(line)
    if block:
        yield start, block


def parse_lines(lines: Iterable[str], strictness: str = "strict", source: str = "<string>") -> list[Sentence]:
    if strictness not in ("strict", "lenient"):
        raise ValueError(f"unknown strictness {strictness!r}")
    sentences = []
    for start, block in _blocks(lines):
        try:
            sentences.append(_parse_block(block))
        except ConlluError as exc:
            if strictness == "strict":
                raise ConlluError(f"{source}:{start}: {exc}") from exc
            logger.warning("skipping sentence at %s:%d: %s", source, start, exc)
    return sentences


def parse_string(text: str, strictness: str = "strict") -> list[Sentence]:
    return parse_lines(text.splitlines(), strictness)


def parse_file(path, strictness: str = "strict") -> list[Sentence]:
    """Parse a CoNLL-U file.

    In ``strict`` mode any malformed sentence raises :class:`ConlluError`;
    in ``lenient`` mode it is skipped and a warning is logged.
    """
    with open(path, encoding="utf-8") as fh:
        return parse_lines(fh, strictness, source=str(path))


def format_sentence(sentence: Sentence) -> str:
    comments = list(sentence.comments)
    if sentence.sent_id is not None and not any(
        c[1:].partition("=")[0].strip() == "sent_id" for c in comments
    ):
        comments.insert(0, f"# sent_id = {sentence.sent_id}")
    return "\n".join(comments + [t.to_line() for t in sentence.tokens]) + "\n"


def write_file(sentences: Iterable[Sentence], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sentence in sentences:
            fh.write(format_sentence(sentence))
            fh.write("\n")


class Treebank:
    """A named treebank with up to three splits.

    Splits are either given directly or loaded lazily from ``source_paths``.
    """

    def __init__(self, name: str, splits: dict | None = None, source_paths: dict | None = None,
                 strictness: str = "lenient"):
        self.name = name
        self.source_paths = {k: Path(v) for k, v in (source_paths or {}).items()}
        self._splits = dict(splits or {})
        self.strictness = strictness
        unknown = (set(self._splits) | set(self.source_paths)) - set(SPLITS)
        if unknown:
            raise ValueError(f"unknown split name(s): {sorted(unknown)}")
        if not self._splits and not self.source_paths:
            raise ValueError(f"treebank {name!r} has no splits")

    def __repr__(self) -> str:
        return f"Treebank({self.name!r}, splits={self.available_splits})"

    @property
    def available_splits(self) -> list[str]:
        return [s for s in SPLITS if s in self._splits or s in self.source_paths]

    def has(self, split: str) -> bool:
        return split in self._splits or split in self.source_paths

    def get(self, split: str) -> list[Sentence]:
        if split not in self._splits:
            if split not in self.source_paths:
                raise KeyError(f"treebank {self.name!r} has no {split!r} split")
            self._splits[split] = parse_file(self.source_paths[split], self.strictness)
        return self._splits[split]

    __getitem__ = get

    @property
    def splits(self) -> dict:
        return {s: self.get(s) for s in self.available_splits}


def treebank_name(dirname: str) -> str:
    """``UD_Ancient_Greek-PROIEL`` -> ``Ancient Greek-PROIEL``."""
    name = dirname[3:] if dirname.startswith("UD_") else dirname
    return name.replace("_", " ")


def discover_treebanks(root_dir, names: Iterable[str] | None = None,
                       require: Sequence[str] = (), strictness: str = "lenient") -> list[Treebank]:
    """Find UD-style treebank directories below ``root_dir``.

    ``names`` optionally restricts the result to treebanks whose display name
    (see :func:`treebank_name`) or directory name is listed; ``require`` drops
    treebanks lacking any of the given splits.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise NotADirectoryError(f"{root} is not a directory")
    wanted = set(names) if names is not None else None
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        paths = {}
        for fname in sorted(filenames):
            m = _SPLIT_RE.search(fname)
            if m:
                paths.setdefault(m.group(1), Path(dirpath) / fname)
        if not paths:
            continue
        dirname = Path(dirpath).name
        name = treebank_name(dirname)
        if wanted is not None and name not in wanted and dirname not in wanted:
            continue
        if any(split not in paths for split in require):
            continue
        found.append(Treebank(name, source_paths=paths, strictness=strictness))
    return sorted(found, key=lambda tb: tb.name)


def evaluate_las(gold: Sequence[Sentence], predicted: Sequence[Sentence],
                 label_granularity: str = "universal") -> float:
    """Labeled attachment score over gold-tokenized predictions.

    ``universal`` compares only the deprel part before the first ``:``.
    """
    if label_granularity not in ("full", "universal"):
        raise ValueError(f"unknown label granularity {label_granularity!r}")
    if len(gold) != len(predicted):
        raise AlignmentError(f"{len(gold)} gold sentences vs {len(predicted)} predicted")

    def label(rel: str) -> str:
        return rel.split(":", 1)[0] if label_granularity == "universal" else rel

    correct = total = 0
    for i, (g, p) in enumerate(zip(gold, predicted)):
        if len(g) != len(p) or g.forms != p.forms:
            ident = g.sent_id if g.sent_id is not None else f"#{i + 1}"
            raise AlignmentError(f"sentence {ident} does not align with its prediction")
        for gt, pt in zip(g.tokens, p.tokens):
            total += 1
            correct += gt.head == pt.head and label(gt.deprel) == label(pt.deprel)
    if total == 0:
        raise AlignmentError("no tokens to evaluate")
    return correct / total
