import math
from collections import Counter

import numpy as np
import pytest

import edvkit
from edvkit.conllu_io import Sentence, Token
from edvkit.morphology import (VocabProfile, aggregate_mc, complexity_scores, complexity_split, delex_unit,
                               form_lemma_ratio_norm, has_inflected_lemmas, head_pos_entropy_norm,
                               inflected_form_lemma_ratio_norm, type_token_ratio, word_entropy_norm,
                               ComplexityScores)
from synthetic import random_sentence


def _profile(forms=None, lemmas=None, heads=None):
    p = VocabProfile()
    p.form_counts.update(forms or {})
    for lemma, fs in (lemmas or {}).items():
        p.lemma_to_forms[lemma] = set(fs)
    for d, tags in (heads or {}).items():
        p.delex_head_tags[d].update(tags)
    return p


def test_word_entropy():
    assert word_entropy_norm(_profile({f"w{i}": 5 for i in range(8)})) == pytest.approx(1.0)
    assert word_entropy_norm(_profile({"a": 3, "b": 1})) == pytest.approx(0.811278, abs=1e-6)
    with pytest.raises(ValueError):
        word_entropy_norm(_profile({"a": 4}))


def test_ttr():
    assert type_token_ratio(_profile({"a": 1, "b": 1, "c": 1})) == 1.0
    assert type_token_ratio(_profile({"a": 3, "b": 1})) == 0.5


def test_form_lemma_ratio():
    assert form_lemma_ratio_norm(_profile(lemmas={"x": ["x"], "y": ["y"]})) == 0.0
    assert form_lemma_ratio_norm(_profile(lemmas={"x": ["x", "xs"], "y": ["y", "ys"]})) == 0.5
    assert form_lemma_ratio_norm(_profile(lemmas={"x": ["a", "b", "c"], "y": ["y"]})) == 0.5


def test_inflected_form_lemma_ratio():
    assert inflected_form_lemma_ratio_norm(_profile(lemmas={"x": ["a", "b"], "y": ["c", "d"]})) == 0.5
    p = _profile(lemmas={"x": list("abcd"), "y": ["e", "f"], "z": ["g"]})
    assert inflected_form_lemma_ratio_norm(p) == pytest.approx(2 / 3)
    flat = _profile(lemmas={"x": ["x"]})
    assert inflected_form_lemma_ratio_norm(flat) == 0.0
    assert not has_inflected_lemmas(flat)


def test_head_pos_entropy():
    assert head_pos_entropy_norm(_profile(heads={"N|_": {"V": 5}, "V|_": {"ROOT": 2}})) == 1.0
    assert head_pos_entropy_norm(_profile(heads={"N|_": {"V": 2, "N": 2, "A": 2, "ROOT": 2}})) == pytest.approx(0.0)
    h_b = -(0.75 * math.log2(0.75) + 0.25 * math.log2(0.25))
    p = _profile(heads={"A|_": {"N": 1, "V": 1}, "B|_": {"N": 3, "V": 1}})
    assert head_pos_entropy_norm(p) == pytest.approx(1 - (1.0 + h_b) / 2)


def test_delex_unit_sorted():
    assert delex_unit("NOUN", {"Number": "Sing", "Case": "Nom"}) == "NOUN|Case=Nom|Number=Sing"
    assert delex_unit("ADV", {}) == "ADV|_"


def test_profile_from_sentences(example_tree):
    p = VocabProfile.from_sentences([example_tree])
    assert p.form_counts["the"] == 1 and p.form_counts["The"] == 1
    assert p.lemma_to_forms["the"] == {"the", "The"}
    assert p.delex_head_tags["VERB|Tense=Past"] == Counter({"ROOT": 1})
    assert p.delex_head_tags["DET|Definite=Def"] == Counter({"NOUN": 2})
    assert VocabProfile.from_sentences([example_tree], lowercase=True).form_counts["the"] == 2


def test_missing_lemmas_excluded():
    s = Sentence([Token(1, "a", "_", "X", 0, "root"), Token(2, "b", "b", "X", 1, "dep")])
    p = VocabProfile.from_sentences([s])
    assert set(p.lemma_to_forms) == {"b"}
    assert p.missing_lemma_fraction == 0.5


def test_aggregate():
    zeros = ComplexityScores(0, 0, 0, 0, 0)
    ones = ComplexityScores(1, 1, 1, 1, 1)
    assert aggregate_mc(zeros) == 0 and aggregate_mc(ones) == 1
    s = ComplexityScores(0.1, 0.2, 0.3, 0.4, 0.5)
    assert s.mc == pytest.approx(0.3, abs=1e-12)


def _corpus(seed=3, n=80):
    rng = np.random.default_rng(seed)
    return [random_sentence(rng, int(rng.integers(3, 15))) for _ in range(n)]


def test_scores_in_unit_interval_and_order_invariant():
    corpus = _corpus()
    a = complexity_scores(corpus)
    b = complexity_scores(list(reversed(corpus)))
    assert a.as_dict() == b.as_dict()
    assert all(0.0 <= v <= 1.0 for v in a.as_dict().values())


def test_duplication():
    corpus = _corpus()
    a, b = complexity_scores(corpus), complexity_scores(corpus + corpus)
    for key in ("h_word_norm", "f_l_norm", "f_il_norm", "hpe_norm"):
        assert getattr(a, key) == pytest.approx(getattr(b, key), abs=1e-12)
    assert b.ttr < a.ttr


def test_split_boundary_and_partition():
    assert complexity_split({"a": 0.5, "b": 0.5}) == (set(), {"a", "b"})
    scores = {"Portuguese-GSD": 0.60, "Portuguese-Bosque": 0.52, "Galician-TreeGal": 0.55,
              "X": 0.61, "Y": 0.57}
    complex_, rest = complexity_split(scores)
    assert sum(scores.values()) / len(scores) == pytest.approx(0.57)
    assert complex_ == {"Portuguese-GSD", "X"}
    assert complex_ | rest == set(scores) and not complex_ & rest
    with pytest.raises(ValueError):
        complexity_split({"a": 1.0})


def test_published_lists_ship():
    v25, v26 = edvkit.complex_treebanks("2.5"), edvkit.complex_treebanks("2.6")
    assert len(v25) == 48 and len(v26) == 45
    assert "Portuguese-GSD" in v26
    assert "Portuguese-Bosque" not in v26 and "Galician-TreeGal" not in v26
    assert {"Sanskrit-Vedic", "Old Russian-RNC"} <= set(v26) - set(v25)
