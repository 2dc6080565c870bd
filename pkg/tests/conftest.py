"""Shared fixtures for the vulforge test suite."""

from __future__ import annotations

import numpy as np
import pytest

from vulforge import synth
from vulforge.codefeat import FeaturizerConfig
from vulforge.core import PredictionSet
from vulforge.ingest import Dataset, Sample, stratified_split
from vulforge.learners import featurize_dataset

#: Small hash space keeps featurization fast in tests; collisions are rare
#: at these corpus sizes.
TEST_FEATURIZER = FeaturizerConfig(dims=1 << 14, ngram_orders=(1, 2))


@pytest.fixture(scope="session")
def separable():
    """A 500-sample linearly separable corpus with its feature matrix."""
    d = synth.separable_corpus(500, seed=1)
    return d, featurize_dataset(d, TEST_FEATURIZER)


@pytest.fixture(scope="session")
def separable_split(separable):
    d, _ = separable
    return stratified_split(d, 0)


def tiny_dataset(n: int = 40, k: int = 2) -> Dataset:
    """Minimal labeled corpus for ingest/metrics plumbing tests."""
    samples = tuple(
        Sample(f"t{i:03d}", f"int f{i}() {{ return {i % 3}; }}", i % k)
        for i in range(n)
    )
    return Dataset(samples, k, "tiny")


def make_predset(model_id: str, split: str, ids, probs) -> PredictionSet:
    return PredictionSet(model_id, split, tuple(ids),
                         np.asarray(probs, dtype=np.float64))


def pytest_terminal_summary(terminalreporter):
    """Echo acceptance verdicts past output capture, one line per criterion."""
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and getattr(mod, "VERDICTS", None):
        terminalreporter.section("acceptance verdicts")
        for line in mod.VERDICTS:
            terminalreporter.write_line(line)
