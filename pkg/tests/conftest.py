"""Shared fixtures and independent oracle implementations.

The oracles deliberately use plain Python loops and arithmetic so they
share no code path with the library implementations they check.
"""

from __future__ import annotations

import numpy as np
import pytest

from fairbench import Dataset


def brute_confusion(labels, protected, scores, tau):
    """Loop-based confusion counts per group; positive iff score > tau."""
    counts = {g: {"tp": 0, "fp": 0, "tn": 0, "fn": 0} for g in (0, 1)}
    for y, z, s in zip(labels, protected, scores):
        pred = 1 if s > tau else 0
        if pred == 1 and y == 1:
            counts[z]["tp"] += 1
        elif pred == 1 and y == 0:
            counts[z]["fp"] += 1
        elif pred == 0 and y == 0:
            counts[z]["tn"] += 1
        else:
            counts[z]["fn"] += 1
    return counts


def brute_rates(counts):
    out = {}
    for g in (0, 1):
        c = counts[g]
        n = c["tp"] + c["fp"] + c["tn"] + c["fn"]
        out[g] = (c["tp"] + c["fp"]) / n
    return out


def brute_di(counts):
    r = brute_rates(counts)
    if r[0] == 0 and r[1] == 0:
        return 1.0
    if r[0] == 0 or r[1] == 0:
        return 0.0
    return min(r[0] / r[1], r[1] / r[0])


def brute_eo(counts):
    tprs = {}
    for g in (0, 1):
        c = counts[g]
        tprs[g] = c["tp"] / (c["tp"] + c["fn"])
    return 1.0 - abs(tprs[0] - tprs[1])


def brute_spd(counts):
    r = brute_rates(counts)
    return abs(r[1] - r[0])


def brute_accuracy(counts):
    correct = sum(counts[g]["tp"] + counts[g]["tn"] for g in (0, 1))
    total = sum(sum(counts[g].values()) for g in (0, 1))
    return correct / total


def brute_precision(counts):
    tp = counts[0]["tp"] + counts[1]["tp"]
    fp = counts[0]["fp"] + counts[1]["fp"]
    return 1.0 if tp + fp == 0 else tp / (tp + fp)


def brute_auc(scores, labels):
    """O(n^2) positive/negative pair counting with half-credit ties."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def random_instance(rng, n_max=50):
    """Labels, groups and scores with every (class, group) combination present."""
    while True:
        n = int(rng.integers(8, n_max + 1))
        y = rng.integers(0, 2, n)
        z = rng.integers(0, 2, n)
        if len(np.unique(y)) == 2 and len(np.unique(z)) == 2 and all(
            ((y == a) & (z == b)).any() for a in (0, 1) for b in (0, 1)
        ):
            break
    # quantized scores so threshold ties actually occur
    s = rng.integers(0, 21, n) / 20.0
    return y, z, s


def toy_dataset(rng, n=120, d=4, signal=1.0):
    """A small dataset with learnable signal and both groups populated."""
    X = rng.standard_normal((n, d))
    z = rng.integers(0, 2, n)
    logits = signal * (X[:, 0] + 0.5 * X[:, 1]) + 0.3 * z
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logits))).astype(int)
    if len(np.unique(y)) < 2:  # pragma: no cover
        y[0], y[1] = 0, 1
    return Dataset(
        features=X,
        protected=z,
        labels=y,
        feature_names=tuple(f"x{i}" for i in range(d)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
