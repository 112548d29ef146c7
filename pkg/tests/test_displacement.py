from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edvkit.conllu_io import Sentence
from edvkit.displacement import (DiscreteDistribution, displacement_distribution, edge_displacements,
                                 length_distribution, med, mirror)
from synthetic import random_sentence


def test_example_displacements(example_tree):
    assert sorted(edge_displacements(example_tree)) == [-2, -1, -1, -1, 2, 3]
    m = med(example_tree)
    assert m.value == 0.0
    assert m.edge_count == 6


def test_med_single_token_errors():
    with pytest.raises(ValueError):
        med(Sentence.from_heads([0]))


def test_chain_med():
    # every word headed by its right neighbour
    s = Sentence.from_heads([2, 3, 4, 0])
    assert med(s).value == -1.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 30))
def test_mirror_negates(seed, n):
    s = random_sentence(np.random.default_rng(seed), n)
    assert sorted(edge_displacements(mirror(s))) == sorted(-d for d in edge_displacements(s))
    assert med(mirror(s)).value == pytest.approx(-med(s).value)
    assert mirror(mirror(s)).heads == s.heads


def test_out_of_range_edges_excluded():
    # tokens 2..36 attached to token 1: displacements +1..+35, five outside [-30, 30]
    heads = [0] + [1] * 35
    s = Sentence.from_heads(heads)
    dist = displacement_distribution([s])
    assert dist.total_count == 30
    assert dist.coverage == pytest.approx(30 / 35)
    assert dist.mass.sum() == pytest.approx(1.0)
    assert dist.support_min == -30 and dist.support_max == 30
    assert np.all(dist.mass[:31] == 0)


def test_distribution_is_normalized(example_tree):
    dist = displacement_distribution([example_tree])
    assert dist.mass[-2 + 30] == pytest.approx(1 / 6)
    assert dist.mass[-1 + 30] == pytest.approx(3 / 6)
    assert dist.mean() == pytest.approx(0.0)
    assert dist.coverage == 1.0


def test_length_distribution():
    sents = [Sentence.from_heads([0] + [1] * (n - 1)) for n in (2, 2, 5)]
    dist = length_distribution(sents)
    assert (dist.support_min, dist.support_max) == (1, 5)
    assert dist.mass.tolist() == pytest.approx([0, 2 / 3, 0, 0, 1 / 3])
    assert length_distribution(sents, max_length=8).support_max == 8


def test_serialization_round_trip(example_tree):
    dist = displacement_distribution([example_tree])
    back = DiscreteDistribution.from_json(dist.to_json())
    assert np.array_equal(back.mass, dist.mass)
    assert back.total_count == dist.total_count
    lines = dist.to_csv().splitlines()
    assert lines[0] == "displacement,probability,count"
    assert len(lines) == 62


def test_invalid_distribution():
    with pytest.raises(ValueError):
        DiscreteDistribution(0, 1, np.array([0.5]), 1)
    with pytest.raises(ValueError):
        DiscreteDistribution(0, 1, np.array([1.5, -0.5]), 1)
    with pytest.raises(ValueError):
        DiscreteDistribution.from_counts(Counter({40: 2}), (-30, 30))
