"""Aggregate morphological complexity of a treebank's training data.

Five scores, each scaled so 0 means no complexity and 1 the maximum:
normalized word entropy, type-token ratio, form/lemma ratio, inflected
form/lemma ratio and head-POS entropy. MC is their unweighted mean.
"""
from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .conllu_io import Sentence

logger = logging.getLogger(__name__)

MISSING_LEMMA = "_"
ROOT_TAG = "ROOT"


def delex_unit(upos: str, feats: Mapping[str, str]) -> str:
    feats_str = "|".join(f"{k}={v}" for k, v in sorted(feats.items())) or "_"
    return f"{upos}|{feats_str}"


def _entropy(counts: Iterable[int]) -> float:
    # sorted so the float sum does not depend on corpus order
    counts = sorted(c for c in counts if c > 0)
    total = sum(counts)
    return -sum(c / total * math.log2(c / total) for c in counts)


@dataclass
class VocabProfile:
    form_counts: Counter = field(default_factory=Counter)
    lemma_to_forms: dict = field(default_factory=lambda: defaultdict(set))
    delex_head_tags: dict = field(default_factory=lambda: defaultdict(Counter))
    missing_lemmas: int = 0

    @classmethod
    def from_sentences(cls, sentences: Iterable[Sentence], lowercase: bool = False) -> "VocabProfile":
        profile = cls()
        for s in sentences:
            profile.add(s, lowercase=lowercase)
        return profile

    def add(self, sentence: Sentence, lowercase: bool = False) -> None:
        toks = sentence.tokens
        for tok in toks:
            form = tok.form.lower() if lowercase else tok.form
            self.form_counts[form] += 1
            if tok.lemma == MISSING_LEMMA:
                self.missing_lemmas += 1
            else:
                lemma = tok.lemma.lower() if lowercase else tok.lemma
                self.lemma_to_forms[lemma].add(form)
            head_tag = ROOT_TAG if tok.head == 0 else toks[tok.head - 1].upos
            self.delex_head_tags[delex_unit(tok.upos, tok.feats)][head_tag] += 1

    def merge(self, other: "VocabProfile") -> "VocabProfile":
        merged = VocabProfile()
        for p in (self, other):
            merged.form_counts.update(p.form_counts)
            for lemma, forms in p.lemma_to_forms.items():
                merged.lemma_to_forms[lemma] |= forms
            for d, tags in p.delex_head_tags.items():
                merged.delex_head_tags[d].update(tags)
            merged.missing_lemmas += p.missing_lemmas
        return merged

    @property
    def n_tokens(self) -> int:
        return sum(self.form_counts.values())

    @property
    def missing_lemma_fraction(self) -> float:
        return self.missing_lemmas / self.n_tokens if self.n_tokens else 0.0


def word_entropy_norm(profile: VocabProfile) -> float:
    vocab = len(profile.form_counts)
    if vocab < 2:
        raise ValueError("word entropy normalization needs at least two word types")
    return _entropy(profile.form_counts.values()) / math.log2(vocab)


def type_token_ratio(profile: VocabProfile) -> float:
    if profile.n_tokens < 1:
        raise ValueError("empty profile")
    return len(profile.form_counts) / profile.n_tokens


def form_lemma_ratio_norm(profile: VocabProfile) -> float:
    if not profile.lemma_to_forms:
        raise ValueError("no lemmas in profile")
    ratio = sum(len(f) for f in profile.lemma_to_forms.values()) / len(profile.lemma_to_forms)
    return 1.0 - 1.0 / ratio


def has_inflected_lemmas(profile: VocabProfile) -> bool:
    return any(len(f) >= 2 for f in profile.lemma_to_forms.values())


def inflected_form_lemma_ratio_norm(profile: VocabProfile) -> float:
    """Like :func:`form_lemma_ratio_norm` over lemmas with two or more forms.

    Returns 0.0 when no lemma is inflected; check
    :func:`has_inflected_lemmas` to tell that case apart.
    """
    sizes = [len(f) for f in profile.lemma_to_forms.values() if len(f) >= 2]
    if not sizes:
        logger.warning("no inflected lemmas; inflected form/lemma score set to 0")
        return 0.0
    return 1.0 - len(sizes) / sum(sizes)


def head_pos_entropy_norm(profile: VocabProfile) -> float:
    if not profile.delex_head_tags:
        raise ValueError("no delexicalized types in profile")
    normed = []
    for _, tags in sorted(profile.delex_head_tags.items()):
        k = sum(1 for c in tags.values() if c > 0)
        normed.append(_entropy(tags.values()) / math.log2(k) if k > 1 else 0.0)
    return 1.0 - sum(normed) / len(normed)


@dataclass(frozen=True)
class ComplexityScores:
    h_word_norm: float
    ttr: float
    f_l_norm: float
    f_il_norm: float
    hpe_norm: float
    f_il_degenerate: bool = False
    missing_lemma_fraction: float = 0.0

    @property
    def mc(self) -> float:
        return aggregate_mc(self)

    def as_dict(self) -> dict:
        return {
            "h_word_norm": self.h_word_norm, "ttr": self.ttr, "f_l_norm": self.f_l_norm,
            "f_il_norm": self.f_il_norm, "hpe_norm": self.hpe_norm, "mc": self.mc,
        }


def complexity_scores(sentences: Iterable[Sentence], lowercase: bool = False) -> ComplexityScores:
    profile = VocabProfile.from_sentences(sentences, lowercase=lowercase)
    return scores_from_profile(profile)


def scores_from_profile(profile: VocabProfile) -> ComplexityScores:
    return ComplexityScores(
        h_word_norm=word_entropy_norm(profile),
        ttr=type_token_ratio(profile),
        f_l_norm=form_lemma_ratio_norm(profile),
        f_il_norm=inflected_form_lemma_ratio_norm(profile),
        hpe_norm=head_pos_entropy_norm(profile),
        f_il_degenerate=not has_inflected_lemmas(profile),
        missing_lemma_fraction=profile.missing_lemma_fraction,
    )


def aggregate_mc(scores: ComplexityScores) -> float:
    parts = (scores.h_word_norm, scores.ttr, scores.f_l_norm, scores.f_il_norm, scores.hpe_norm)
    return sum(parts) / 5.0


def complexity_split(treebank_scores: Mapping[str, float]) -> tuple[set, set]:
    """Treebanks strictly above the mean MC are complex; the rest are not."""
    if len(treebank_scores) < 2:
        raise ValueError("need at least two treebanks to split")
    # exact rational mean so ties with the mean never flip on rounding
    mean = sum(Fraction(mc) for mc in treebank_scores.values()) / len(treebank_scores)
    complex_ = {name for name, mc in treebank_scores.items() if Fraction(mc) > mean}
    return complex_, set(treebank_scores) - complex_
