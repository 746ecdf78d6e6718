"""Schema matching, top-k candidate retrieval, and value matching.

All methods are policy-free and deterministic: scores live in [0, 1] and
ties are always broken lexicographically by target name, so identical
inputs produce identical outputs across runs.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, replace

from .errors import MatcherError
from .tablecore import Table, TargetSchema, distinct_values

METHOD_KINDS = ("exact", "levenshtein", "tfidf_ngram")

_NON_ALNUM = re.compile(r"[^0-9a-z]+")


def normalize_name(raw: str) -> str:
    """Lowercase, collapse runs of non-alphanumerics to single spaces, strip."""
    return _NON_ALNUM.sub(" ", raw.lower()).strip()


@dataclass(frozen=True)
class MatchMethod:
    """A similarity method; ngram length applies to tfidf_ngram only."""

    kind: str = "tfidf_ngram"
    ngram: int = 3

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise MatcherError(f"unknown match method {self.kind!r}")
        if self.ngram < 1:
            raise MatcherError("n-gram length must be >= 1")

    @classmethod
    def parse(cls, text: str) -> MatchMethod:
        """Parse "exact", "levenshtein", "tfidf_ngram", "tfidf", or "tfidf_ngram:<n>"."""
        kind, _, param = text.partition(":")
        if kind == "tfidf":
            kind = "tfidf_ngram"
        if param:
            if kind != "tfidf_ngram":
                raise MatcherError(f"method {kind!r} takes no parameter")
            try:
                return cls(kind=kind, ngram=int(param))
            except ValueError:
                raise MatcherError(f"bad n-gram length {param!r}") from None
        return cls(kind=kind)

    def __str__(self) -> str:
        if self.kind == "tfidf_ngram" and self.ngram != 3:
            return f"tfidf_ngram:{self.ngram}"
        return self.kind


@dataclass
class ColumnMatch:
    """Scored correspondence between a source column and a target attribute."""

    source_column: str
    target_attribute: str | None
    score: float
    method: str
    corrected: bool = False
    corrected_from: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise MatcherError(f"score {self.score} outside [0, 1]")
        if self.corrected != (self.corrected_from is not None):
            raise MatcherError("corrected_from must be present iff corrected is set")


@dataclass
class ValueMatch:
    source_value: str
    target_value: str | None
    score: float
    corrected: bool = False
    corrected_from: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise MatcherError(f"score {self.score} outside [0, 1]")
        if self.corrected != (self.corrected_from is not None):
            raise MatcherError("corrected_from must be present iff corrected is set")


@dataclass
class ValueMatchTable:
    """Per-(column, attribute) value matches, one per distinct source value."""

    source_column: str
    target_attribute: str
    matches: list[ValueMatch]
    skipped: bool = False

    def __post_init__(self):
        values = [m.source_value for m in self.matches]
        if len(set(values)) != len(values):
            raise MatcherError(f"duplicate source values in value matches for {self.source_column!r}")


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _ngram_terms(normalized: str, n: int) -> list[str]:
    # strings shorter than n contribute their whole text as a single term
    if len(normalized) < n:
        return [normalized]
    return [normalized[i : i + n] for i in range(len(normalized) - n + 1)]


class TfidfSpace:
    """Tf-idf vector space over character n-grams, fitted on a candidate corpus.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1 with raw term counts as tf and
    L2-normalized vectors, so cosine similarity stays within [0, 1] and the
    space is total (no zero vectors, no division by zero).
    """

    def __init__(self, corpus: list[str], n: int):
        self.n = n
        self.size = len(corpus)
        df: Counter[str] = Counter()
        for doc in corpus:
            df.update(set(_ngram_terms(normalize_name(doc), n)))
        self._df = df

    def idf(self, term: str) -> float:
        return math.log((1 + self.size) / (1 + self._df.get(term, 0))) + 1.0

    def vector(self, text: str) -> dict[str, float]:
        counts = Counter(_ngram_terms(normalize_name(text), self.n))
        weights = {term: tf * self.idf(term) for term, tf in counts.items()}
        norm = math.sqrt(sum(w * w for w in weights.values()))
        return {term: w / norm for term, w in weights.items()}

    def cosine(self, a: dict[str, float], b: dict[str, float]) -> float:
        if a == b:
            return 1.0
        if len(b) < len(a):
            a, b = b, a
        return min(1.0, sum(w * b[t] for t, w in a.items() if t in b))


def similarity(a: str, b: str, method: MatchMethod, corpus: list[str]) -> float:
    """Similarity of two strings in [0, 1] under the given method.

    For tfidf_ngram the corpus is the candidate set used to fit the idf
    weights; it is ignored by the other methods.
    """
    if method.kind == "exact":
        return 1.0 if normalize_name(a) == normalize_name(b) else 0.0
    if method.kind == "levenshtein":
        na, nb = normalize_name(a), normalize_name(b)
        longest = max(len(na), len(nb))
        if longest == 0:
            return 1.0
        return 1.0 - _levenshtein(na, nb) / longest
    space = TfidfSpace(corpus, method.ngram)
    return space.cosine(space.vector(a), space.vector(b))


class _Scorer:
    """Scores one query against a fixed candidate list, caching tfidf vectors."""

    def __init__(self, candidates: list[str], method: MatchMethod):
        self.candidates = candidates
        self.method = method
        if method.kind == "tfidf_ngram":
            self._space = TfidfSpace(candidates, method.ngram)
            self._vectors = [self._space.vector(c) for c in candidates]

    def scores(self, query: str) -> list[float]:
        if self.method.kind == "tfidf_ngram":
            qv = self._space.vector(query)
            return [self._space.cosine(qv, cv) for cv in self._vectors]
        return [similarity(query, c, self.method, self.candidates) for c in self.candidates]

    def ranked(self, query: str) -> list[tuple[str, float]]:
        """Candidates ranked by descending score, ties lexicographic."""
        pairs = list(zip(self.candidates, self.scores(query)))
        pairs.sort(key=lambda p: (-p[1], p[0]))
        return pairs


def match_schema(source: Table, target: TargetSchema, method: MatchMethod) -> list[ColumnMatch]:
    """Best target attribute for every source column; abstains only at score 0."""
    names = target.attribute_names()
    if not names:
        raise MatcherError(f"target schema {target.name!r} has no attributes")
    scorer = _Scorer(names, method)
    matches = []
    for column in source.columns:
        best_name, best_score = scorer.ranked(column)[0]
        matches.append(
            ColumnMatch(
                source_column=column,
                target_attribute=None if best_score == 0.0 else best_name,
                score=best_score,
                method=str(method),
            )
        )
    return matches


def top_matches(
    source: Table, column: str, target: TargetSchema, k: int, method: MatchMethod
) -> list[tuple[str, float]]:
    """Top-k target attributes for one column, descending score, ties lexicographic."""
    if k < 1:
        raise MatcherError("k must be a positive integer")
    if column not in source.columns:
        raise MatcherError(f"unknown column {column!r} in table {source.name!r}")
    names = target.attribute_names()
    if not names:
        raise MatcherError(f"target schema {target.name!r} has no attributes")
    return _Scorer(names, method).ranked(column)[:k]


def match_values(
    source: Table,
    target: TargetSchema,
    column_mapping: list[tuple[str, str]],
    method: MatchMethod,
) -> list[ValueMatchTable]:
    """Match each distinct source value to its best permissible target value.

    Pairs whose attribute domain is not enumerated are skipped with an empty,
    flagged table. The best candidate is always returned, even at low score.
    """
    tables = []
    for src_col, tgt_attr in column_mapping:
        if src_col not in source.columns:
            raise MatcherError(f"unknown column {src_col!r} in table {source.name!r}")
        attribute = target.attribute(tgt_attr)
        if attribute.domain.kind != "enum":
            tables.append(
                ValueMatchTable(source_column=src_col, target_attribute=tgt_attr, matches=[], skipped=True)
            )
            continue
        domain = list(attribute.domain.values)
        scorer = _Scorer(domain, method)
        matches = []
        for value in distinct_values(source, src_col):
            best_value, best_score = scorer.ranked(value)[0]
            matches.append(ValueMatch(source_value=value, target_value=best_value, score=best_score))
        tables.append(ValueMatchTable(source_column=src_col, target_attribute=tgt_attr, matches=matches))
    return tables


# --- JSON wire format for match results ---


def _match_dict(source: str, target: str | None, score: float, method: str,
                corrected: bool, corrected_from: str | None) -> dict:
    out: dict = {
        "source": source,
        "target": target,
        "score": score,
        "method": method,
        "corrected": corrected,
    }
    if corrected:
        out["corrected_from"] = corrected_from
    return out


def column_matches_to_json(matches: list[ColumnMatch]) -> list[dict]:
    return [
        _match_dict(m.source_column, m.target_attribute, m.score, m.method, m.corrected, m.corrected_from)
        for m in matches
    ]


def value_table_to_json(table: ValueMatchTable, method: str) -> dict:
    return {
        "source_column": table.source_column,
        "target_attribute": table.target_attribute,
        "skipped": table.skipped,
        "matches": [
            _match_dict(m.source_value, m.target_value, m.score, method, m.corrected, m.corrected_from)
            for m in table.matches
        ],
    }


def correct_column_match(match: ColumnMatch, new_target: str) -> ColumnMatch:
    """Replace the target, remembering the previous one.

    Installing a target on an abstained match is a fresh assignment,
    not a correction, so the corrected flag stays unset.
    """
    if match.target_attribute is None:
        return replace(match, target_attribute=new_target)
    return replace(match, target_attribute=new_target, corrected=True,
                   corrected_from=match.target_attribute)


def correct_value_match(match: ValueMatch, new_target: str) -> ValueMatch:
    """Value-match analogue of correct_column_match."""
    if match.target_value is None:
        return replace(match, target_value=new_target)
    return replace(match, target_value=new_target, corrected=True,
                   corrected_from=match.target_value)
