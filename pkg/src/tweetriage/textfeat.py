"""Text features shared by the classifier and the tagger.

Tokenization, Turkish-aware case folding, a small suffix stemmer, word-shape
classes, and a TF-IDF vectorizer. Everything here is pure; fitted vectorizers
are immutable and safe to share across threads.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence


class VocabularyError(ValueError):
    """Fitting produced an empty vocabulary (min_df too high or empty docs)."""


def turkish_fold(text: str) -> str:
    """Lowercase with the Turkish dotted/dotless i pairs: I -> ı, İ -> i.

    Plain ``str.lower`` maps İ to 'i' plus a combining dot, which breaks
    offset arithmetic; this fold is always length-preserving.
    """
    return text.replace("İ", "i").replace("I", "ı").lower()


def turkish_upper_first(word: str) -> str:
    """Uppercase the first character Turkish-style (i -> İ, ı -> I)."""
    if not word:
        return word
    first = word[0]
    if first == "i":
        first = "İ"
    elif first == "ı":
        first = "I"
    else:
        first = first.upper()
    return first + word[1:]


@dataclass(frozen=True)
class Token:
    """A tokenizer output unit; offsets are Unicode character offsets."""

    surface: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad token offsets [{self.start}, {self.end})")


class ShapeClass(Enum):
    UPPER = "UPPER"
    TITLE = "TITLE"
    LOWER = "LOWER"
    DIGIT = "DIGIT"
    PUNCT = "PUNCT"
    MIXED = "MIXED"


def _is_punct(ch: str) -> bool:
    return not ch.isalnum()


def _keeps_trailing_period(core: str) -> bool:
    # Abbreviations like "Cad." / "Sok." must survive as one token.
    return 0 < len(core) <= 4 and core.isalpha() and core[0].isupper()


_CHUNK = re.compile(r"\S+")


def tokenize(text: str) -> list[Token]:
    """Split on whitespace, peeling leading/trailing punctuation into
    single-character tokens.

    A single trailing period stays attached when the rest of the chunk looks
    like a short title-cased abbreviation ("Cad.", "Sok."). Interior
    punctuation ("no:12") is never split.
    """
    tokens: list[Token] = []
    for match in _CHUNK.finditer(text):
        start, end = match.span()
        i = start
        while i < end and _is_punct(text[i]):
            tokens.append(Token(text[i : i + 1], i, i + 1))
            i += 1
        j = end
        trailing: list[Token] = []
        while j > i and _is_punct(text[j - 1]):
            if text[j - 1] == "." and _keeps_trailing_period(text[i : j - 1]):
                break
            trailing.append(Token(text[j - 1 : j], j - 1, j))
            j -= 1
        if j > i:
            tokens.append(Token(text[i:j], i, j))
        tokens.extend(reversed(trailing))
    return tokens


# Inflectional suffixes, longest first; at most two are stripped and the stem
# never shrinks below three characters.
_SUFFIXES = (
    "lardan", "lerden", "larda", "lerde", "ların", "lerin",
    "lar", "ler", "dan", "den", "tan", "ten", "da", "de", "ta", "te",
    "ın", "in", "un", "ün", "ı", "i", "u", "ü", "a", "e",
)

_MIN_STEM = 3
_MAX_PASSES = 2


def _stem_passes(token: str) -> tuple[str, int]:
    out = turkish_fold(token)
    passes = 0
    for _ in range(_MAX_PASSES):
        for suffix in _SUFFIXES:
            if out.endswith(suffix) and len(out) - len(suffix) >= _MIN_STEM:
                out = out[: -len(suffix)]
                passes += 1
                break
        else:
            break
    return out, passes


def stem(token: str) -> str:
    """Case-fold and strip up to two known Turkish suffixes (longest first)."""
    return _stem_passes(token)[0]


def shape_class(token: str) -> ShapeClass:
    if not token:
        raise ValueError("shape_class requires a non-empty token")
    if token.isalpha():
        if token.isupper():
            return ShapeClass.UPPER
        if token.islower():
            return ShapeClass.LOWER
        if token[0].isupper() and token[1:].islower():
            return ShapeClass.TITLE
        return ShapeClass.MIXED
    if token.isdigit():
        return ShapeClass.DIGIT
    if all(_is_punct(ch) for ch in token):
        return ShapeClass.PUNCT
    return ShapeClass.MIXED


@dataclass(frozen=True)
class SparseVector:
    """Sorted sparse vector; indices strictly increasing."""

    indices: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.values):
            raise ValueError("indices/values length mismatch")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError("weights must be finite")

    def dot(self, dense: Sequence[float]) -> float:
        return sum(dense[i] * v for i, v in zip(self.indices, self.values))

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))


class TfIdfVectorizer:
    """Smoothed TF-IDF: idf = ln((1+N)/(1+df)) + 1, raw counts, L2-normalized."""

    def __init__(self, terms: Sequence[str], idf: Sequence[float]):
        if len(terms) != len(idf):
            raise ValueError("terms/idf length mismatch")
        self._terms = tuple(terms)
        self._idf = tuple(float(x) for x in idf)
        self.vocabulary: Mapping[str, int] = {t: i for i, t in enumerate(self._terms)}
        if len(self.vocabulary) != len(self._terms):
            raise ValueError("duplicate terms in vocabulary")

    @property
    def feature_size(self) -> int:
        return len(self._terms)

    @property
    def terms(self) -> tuple[str, ...]:
        return self._terms

    @property
    def idf(self) -> tuple[float, ...]:
        return self._idf

    def to_json(self) -> str:
        return json.dumps({"terms": list(self._terms), "idf": list(self._idf)}, ensure_ascii=False)

    @classmethod
    def from_json(cls, payload: str) -> "TfIdfVectorizer":
        doc = json.loads(payload)
        return cls(doc["terms"], doc["idf"])

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def fit_tfidf(corpus: Sequence[Sequence[str]], min_df: int = 1) -> TfIdfVectorizer:
    """Fit a vectorizer over case-folded terms with document frequency >= min_df."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    df: dict[str, int] = {}
    for doc in corpus:
        for term in {turkish_fold(t) for t in doc}:
            df[term] = df.get(term, 0) + 1
    terms = sorted(t for t, n in df.items() if n >= min_df)
    if not terms:
        raise VocabularyError(f"no term reaches min_df={min_df}")
    n_docs = len(corpus)
    idf = [math.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in terms]
    return TfIdfVectorizer(terms, idf)


def tfidf_transform(vectorizer: TfIdfVectorizer, doc: Iterable[str]) -> SparseVector:
    """Weight in-vocabulary terms by count * idf and L2-normalize.

    Out-of-vocabulary terms are dropped; an all-OOV document yields the zero
    vector (no normalization).
    """
    counts: dict[int, int] = {}
    vocab = vectorizer.vocabulary
    for term in doc:
        idx = vocab.get(turkish_fold(term))
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    if not counts:
        return SparseVector((), ())
    indices = tuple(sorted(counts))
    weights = [counts[i] * vectorizer.idf[i] for i in indices]
    norm = math.sqrt(sum(w * w for w in weights))
    if norm > 0:
        weights = [w / norm for w in weights]
    return SparseVector(indices, tuple(weights))
