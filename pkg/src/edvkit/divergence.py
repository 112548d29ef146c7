"""Vaserstein-1 (earth mover's) distance on the integer grid, and EDV/SLV."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conllu_io import Treebank
from .displacement import (DEFAULT_SUPPORT, DiscreteDistribution,
                           displacement_distribution, length_distribution)

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class TransportPlan:
    """Coupling between two distributions as sparse ``(i, j, mass)`` entries.

    Indices refer to positions on the shared support starting at ``support_min``.
    """

    entries: list
    cost: float
    support_min: int
    size: int

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        rows, cols = np.zeros(self.size), np.zeros(self.size)
        for i, j, m in self.entries:
            rows[i] += m
            cols[j] += m
        return rows, cols


def _check(p: DiscreteDistribution, name: str) -> None:
    total = float(np.sum(p.mass))
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"{name} is not normalized (sum={total!r})")


def align(p: DiscreteDistribution, q: DiscreteDistribution) -> tuple[DiscreteDistribution, DiscreteDistribution]:
    """Pad both distributions with zeros onto the union of their supports."""
    lo = min(p.support_min, q.support_min)
    hi = max(p.support_max, q.support_max)
    return p.on_support(lo, hi), q.on_support(lo, hi)


def vaserstein(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """W1 distance via the closed form sum_k |F_p(k) - F_q(k)| (unit spacing)."""
    _check(p, "p")
    _check(q, "q")
    p, q = align(p, q)
    diff = np.abs(np.cumsum(p.mass) - np.cumsum(q.mass))
    # the final CDF difference is rounding noise around 0
    return float(np.sum(diff[:-1]))


def transport_oracle(p: DiscreteDistribution, q: DiscreteDistribution) -> TransportPlan:
    """Optimal coupling by monotone (north-west corner) matching.

    Exact in one dimension; used to cross-check :func:`vaserstein`.
    """
    _check(p, "p")
    _check(q, "q")
    p, q = align(p, q)
    a, b = p.mass.astype(float).copy(), q.mass.astype(float).copy()
    entries, cost = [], 0.0
    i = j = 0
    n = len(a)
    while i < n and j < n:
        if a[i] <= 0:
            i += 1
            continue
        if b[j] <= 0:
            j += 1
            continue
        m = min(a[i], b[j])
        entries.append((i, j, m))
        cost += m * abs(i - j)
        a[i] -= m
        b[j] -= m
        if a[i] <= 0:
            i += 1
        else:
            j += 1
    return TransportPlan(entries, cost, p.support_min, n)


def _pair(treebank: Treebank) -> tuple[list, list]:
    for split in ("train", "test"):
        if not treebank.has(split):
            raise KeyError(f"treebank {treebank.name!r} lacks a {split} split")
    return treebank.get("train"), treebank.get("test")


def edv(treebank: Treebank, support: tuple[int, int] = DEFAULT_SUPPORT) -> float:
    """Edge-displacement Vaserstein distance between train and test."""
    train, test = _pair(treebank)
    return vaserstein(displacement_distribution(train, support), displacement_distribution(test, support))


def edv_between(train, test, support: tuple[int, int] = DEFAULT_SUPPORT) -> float:
    return vaserstein(displacement_distribution(train, support), displacement_distribution(test, support))


def slv(treebank: Treebank) -> float:
    """Sentence-length Vaserstein distance between train and test."""
    train, test = _pair(treebank)
    return slv_between(train, test)


def slv_between(train, test) -> float:
    return vaserstein(length_distribution(train), length_distribution(test))
