"""Lexer totality, sentinel normalization, and hashed n-gram features."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vulforge.codefeat import (
    CHR_SENTINEL,
    FNV_OFFSET,
    FNV_PRIME,
    NUM_SENTINEL,
    STR_SENTINEL,
    FeaturizerConfig,
    featurize,
    featurize_code,
    fnv1a64,
    ngram_dimension,
    stack_features,
    tokenize,
)


class TestTokenize:
    def test_keywords_and_identifiers(self):
        kinds = [(t.kind, t.text) for t in tokenize("int foo = bar;")]
        assert kinds == [("keyword", "int"), ("identifier", "foo"),
                         ("operator", "="), ("identifier", "bar"),
                         ("punct", ";")]

    def test_literal_sentinels(self):
        texts = [t.text for t in tokenize('x = 42 + 0x1f; s = "hi"; c = \'a\';')]
        assert texts.count(NUM_SENTINEL) == 2
        assert STR_SENTINEL in texts
        assert CHR_SENTINEL in texts
        assert "42" not in texts and "hi" not in texts

    def test_comments_dropped(self):
        toks = tokenize("a // line comment\n/* block\ncomment */ b")
        assert [t.text for t in toks] == ["a", "b"]

    def test_maximal_munch_operators(self):
        assert [t.text for t in tokenize("a <<= b >> c")] == \
            ["a", "<<=", "b", ">>", "c"]

    def test_escaped_quote_in_string(self):
        toks = tokenize(r'"a\"b" x')
        assert [t.text for t in toks] == [STR_SENTINEL, "x"]

    def test_total_on_arbitrary_bytes(self):
        # never raises, regardless of input
        tokenize("\x00\x7fé @#`$ 3..4e+ '")

    @given(st.text(max_size=200))
    def test_total_property(self, s):
        for t in tokenize(s):
            assert t.text


class TestFnv:
    def test_reference_values(self):
        # independent reimplementation of 64-bit FNV-1a
        def ref(data):
            h = FNV_OFFSET
            for byte in data:
                h = ((h ^ byte) * FNV_PRIME) % (1 << 64)
            return h

        for blob in (b"", b"a", b"hello world", bytes(range(50))):
            assert fnv1a64(blob) == ref(blob)

    def test_known_constant(self):
        assert fnv1a64(b"") == FNV_OFFSET


class TestFeaturizerConfig:
    def test_power_of_two_required(self):
        with pytest.raises(ValueError):
            FeaturizerConfig(dims=1000)
        with pytest.raises(ValueError):
            FeaturizerConfig(ngram_orders=())
        with pytest.raises(ValueError):
            FeaturizerConfig(ngram_orders=(0,))


class TestFeaturize:
    def test_deterministic(self):
        code = "void f(int *p) { if (p) *p = 1; }"
        a = featurize_code(code)
        b = featurize_code(code)
        assert np.array_equal(a.indices, b.indices)
        assert np.array_equal(a.counts, b.counts)

    def test_unigram_counts_sum_to_token_count(self):
        code = "int a = 1; int b = 2;"
        cfg = FeaturizerConfig(dims=1 << 12, ngram_orders=(1,))
        fv = featurize(tokenize(code), cfg)
        assert fv.counts.sum() == len(tokenize(code))

    def test_norm_matches_counts(self):
        fv = featurize_code("a b a b a", FeaturizerConfig(1 << 10, (1,)))
        assert fv.norm == pytest.approx(float(np.sqrt((fv.counts ** 2).sum())))

    def test_empty_code(self):
        fv = featurize_code("")
        assert len(fv.indices) == 0 and fv.norm == 0.0

    def test_ngram_dimension_in_range(self):
        d = ngram_dimension(("a", "b"), 1 << 8)
        assert 0 <= d < 1 << 8

    def test_collisions_additive(self):
        # same token twice lands in one dimension with count 2
        fv = featurize(tokenize("x x"), FeaturizerConfig(1 << 10, (1,)))
        assert 2.0 in fv.counts


class TestStackFeatures:
    def test_csr_layout(self):
        cfg = FeaturizerConfig(1 << 10, (1,))
        vs = [featurize_code("a b", cfg), featurize_code("", cfg),
              featurize_code("c", cfg)]
        indptr, indices, data = stack_features(vs)
        assert indptr.tolist() == [0, 2, 2, 3]
        assert len(indices) == len(data) == 3
