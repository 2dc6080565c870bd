"""Invariants of the synthetic corpus and prediction-set generators."""

import numpy as np

from vulforge import synth


class TestCorpora:
    def test_separable_deterministic(self):
        a = synth.separable_corpus(50, seed=2)
        b = synth.separable_corpus(50, seed=2)
        assert a.samples == b.samples

    def test_separable_marker_margin(self):
        d = synth.separable_corpus(200, seed=0)
        for s in d.samples:
            sinks = sum(s.code.count(f"sink_call_{j}") for j in range(10))
            guards = sum(s.code.count(f"guard_call_{j}") for j in range(10))
            # the true marker appears twice; at most one decoy from the
            # opposite pool, so the signed difference never cancels
            assert (sinks - guards > 0) == (s.label == 1)

    def test_imbalanced_class_fraction(self):
        d = synth.imbalanced_corpus(1000, pos_fraction=0.1)
        counts = d.class_counts()
        assert counts[1] == 100 and counts[0] == 900

    def test_shaped_sizes(self):
        assert sum(synth.shaped_class_sizes("devign")) == 27318
        assert sum(synth.shaped_class_sizes("reveal")) == 22734
        sizes = synth.shaped_class_sizes("bigvul")
        assert len(sizes) == 44  # non-vulnerable class + 43 CWE classes
        d = synth.shaped_corpus("bigvul")
        assert d.class_count == 44

    def test_paired_corpus_linkage(self):
        d = synth.paired_cwe_corpus({"CWE-119": 5})
        for s in d.samples:
            pair = d.by_id(s.pair_id)
            assert pair.pair_id == s.id
            assert (s.label == 0) != (pair.label == 0)


class TestPredsets:
    def test_complementary_regimes(self):
        d, bits = synth.complementary_corpus(300, seed=0)
        ids = d.ids
        preds = synth.complementary_predsets(d, bits, ids, "val", seed=0)
        for p, good_bit in zip(preds, (1, 0)):
            labels = p.reindexed(ids).argmax(axis=1)
            for sid, lbl in zip(ids, labels):
                correct = lbl == d.by_id(sid).label
                assert correct == (bits[sid] == good_bit)

    def test_sentinel_ownership(self):
        d, owner = synth.sentinel_corpus(200, experts=4, seed=0)
        ids = d.ids
        preds = synth.sentinel_predsets(d, owner, ids, "val", experts=4, seed=0)
        for j, p in enumerate(preds):
            labels = p.reindexed(ids).argmax(axis=1)
            for sid, lbl in zip(ids, labels):
                assert (lbl == d.by_id(sid).label) == (owner[sid] == j)
        # every sample carries exactly one sentinel token
        for s in d.samples:
            assert sum(s.code.count(f"tau_{j}(") for j in range(4)) == 1

    def test_rows_are_distributions(self):
        d, bits = synth.complementary_corpus(50, seed=1)
        p = synth.complementary_predsets(d, bits, d.ids, "val")[0]
        assert np.allclose(p.probs.sum(axis=1), 1.0)
        assert np.all(p.probs >= 0)
