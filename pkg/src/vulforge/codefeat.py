"""C-like lexer and hashed n-gram featurizer.

The lexer is total: any byte sequence tokenizes, compilable or not.
Number/string/char literals normalize to the sentinels ``<num>``, ``<str>``,
``<chr>`` so downstream models cannot key on incidental constants; comments
are dropped.  Features are counts of token n-grams hashed with 64-bit
FNV-1a into a power-of-two table, which makes the mapping bit-exact across
platforms and runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

C_KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    bool true false NULL nullptr new delete class namespace template public
    private protected virtual operator this using try catch throw""".split()
)

# Longest-first so maximal munch falls out of ordered scanning.
C_OPERATORS = (
    "<<=", ">>=", "...",
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=", "::",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "&", "|", "^", "~", "?", ".",
)

PUNCT_CHARS = frozenset("(){}[];,:#\\@`$")

NUM_SENTINEL = "<num>"
STR_SENTINEL = "<str>"
CHR_SENTINEL = "<chr>"

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | identifier | number | string | char | operator | punct
    text: str


@dataclass(frozen=True)
class FeatureVector:
    """Sparse hashed n-gram counts with a cached L2 norm."""

    dims: int
    indices: np.ndarray  # sorted int64 dimensions, each < dims
    counts: np.ndarray   # float64 counts, all > 0
    norm: float

    def __post_init__(self):
        self.indices.setflags(write=False)
        self.counts.setflags(write=False)

    def to_dense(self) -> np.ndarray:
        v = np.zeros(self.dims)
        v[self.indices] = self.counts
        return v


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(code: str) -> list[Token]:
    """Lex ``code`` into tokens; never fails on arbitrary text."""
    tokens: list[Token] = []
    i, n = 0, len(code)
    while i < n:
        c = code[i]
        if c.isspace():
            i += 1
            continue
        # comments are consumed and dropped
        if code.startswith("//", i):
            j = code.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if code.startswith("/*", i):
            j = code.find("*/", i + 2)
            i = n if j < 0 else j + 2
            continue
        if c == '"' or c == "'":
            quote = c
            j = i + 1
            while j < n:
                if code[j] == "\\":
                    j += 2
                    continue
                if code[j] == quote:
                    j += 1
                    break
                j += 1
            else:
                j = n
            if quote == '"':
                tokens.append(Token("string", STR_SENTINEL))
            else:
                tokens.append(Token("char", CHR_SENTINEL))
            i = max(j, i + 1)
            continue
        if c.isdigit() or (c == "." and i + 1 < n and code[i + 1].isdigit()):
            j = i + 1
            while j < n and (code[j].isalnum() or code[j] in "._" or
                             (code[j] in "+-" and code[j - 1] in "eEpP")):
                j += 1
            tokens.append(Token("number", NUM_SENTINEL))
            i = j
            continue
        if _is_ident_start(c):
            j = i + 1
            while j < n and _is_ident_char(code[j]):
                j += 1
            text = code[i:j]
            kind = "keyword" if text in C_KEYWORDS else "identifier"
            tokens.append(Token(kind, text))
            i = j
            continue
        for op in C_OPERATORS:
            if code.startswith(op, i):
                tokens.append(Token("operator", op))
                i += len(op)
                break
        else:
            # unknown bytes and plain punctuation both land here
            tokens.append(Token("punct", c))
            i += 1
    return tokens


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a, specified bit-exactly."""
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _U64
    return h


@dataclass(frozen=True)
class FeaturizerConfig:
    dims: int = 1 << 18
    ngram_orders: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        if self.dims <= 0 or self.dims & (self.dims - 1):
            raise ValueError(f"dims must be a power of two, got {self.dims}")
        if not self.ngram_orders or any(o < 1 for o in self.ngram_orders):
            raise ValueError(f"bad ngram orders {self.ngram_orders}")


def ngram_dimension(lexemes: tuple[str, ...], dims: int) -> int:
    """Hash a lexeme n-gram into a table dimension ( '\\x1f' joins grams)."""
    return fnv1a64("\x1f".join(lexemes).encode("utf-8")) & (dims - 1)


def featurize(tokens: list[Token], config: FeaturizerConfig = FeaturizerConfig()) -> FeatureVector:
    """Map a token stream to hashed n-gram counts.

    Counts are additive under hash collision.  Deterministic across runs
    and platforms (fixed hash, fixed sentinel normalization).
    """
    lexemes = [t.text for t in tokens]
    counts: dict[int, float] = {}
    for order in config.ngram_orders:
        for i in range(len(lexemes) - order + 1):
            d = ngram_dimension(tuple(lexemes[i:i + order]), config.dims)
            counts[d] = counts.get(d, 0.0) + 1.0
    if not counts:
        return FeatureVector(config.dims, np.empty(0, np.int64), np.empty(0), 0.0)
    idx = np.array(sorted(counts), dtype=np.int64)
    cnt = np.array([counts[d] for d in idx])
    return FeatureVector(config.dims, idx, cnt, float(np.sqrt(np.dot(cnt, cnt))))


def featurize_code(code: str, config: FeaturizerConfig = FeaturizerConfig()) -> FeatureVector:
    return featurize(tokenize(code), config)


def stack_features(vectors: list[FeatureVector]):
    """CSR-style arrays (indptr, indices, data) over a list of FeatureVectors."""
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        indptr[i + 1] = indptr[i] + len(v.indices)
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.empty(0, np.int64)
    data = np.concatenate([v.counts for v in vectors]) if vectors else np.empty(0)
    return indptr, indices, data
