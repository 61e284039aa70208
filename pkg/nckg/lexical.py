# -*- coding: utf-8 -*-
#
# Copyright (C) 2026 nckg-review contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
"""TF-IDF label index with cosine top-k search.

Weights are ``tf(t, d) * ln(N / df(t))`` with raw in-document counts.
"""

import enum
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import (
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

from nckg import const
from nckg.exceptions import EmptyStore
from nckg.store import GraphStore
from nckg.terms import Iri, Literal, n3, RDF, RDFS, Term, XSD

__all__ = [
    "DocKind",
    "LabelDoc",
    "Match",
    "LexicalIndex",
    "tokenize",
    "term_tokens",
    "cosine",
    "norm",
    "build_index",
    "build_clause_index",
]

log = logging.getLogger(__name__)

camel_upperlower_regex = re.compile(r"([A-Z]+)([A-Z][a-z])")
camel_lowerupper_regex = re.compile(r"([a-z\d])([A-Z])")
word_regex = re.compile(r"[^\W\d_]+|\d+")

Vector = Dict[str, float]


class DocKind(enum.Enum):
    ENTITY = "Entity"
    EVENT = "Event"
    CLAUSE = "Clause"


@dataclass(frozen=True)
class LabelDoc(object):
    id: str
    kind: DocKind
    tokens: Tuple[str, ...]
    source: Union[Term, str]


@dataclass(frozen=True)
class Match(object):
    id: str
    score: float
    kind: DocKind
    source: Union[Term, str, None] = None


def tokenize(label: str) -> List[str]:
    """Split on camelCase, underscores, hyphens, digit runs and whitespace."""
    label = camel_upperlower_regex.sub(r"\1 \2", label)
    label = camel_lowerupper_regex.sub(r"\1 \2", label)
    return [w.lower() for w in word_regex.findall(label)]


def term_tokens(term: Term) -> List[str]:
    """Entity tokens come from the IRI local name; an event concatenates its
    subject, predicate and object labels."""
    if isinstance(term, Iri):
        return tokenize(term.local_name)
    if isinstance(term, Literal):
        return tokenize(term.lexical)
    inner = term.inner
    return term_tokens(inner.subject) + term_tokens(inner.predicate) + term_tokens(
        inner.object
    )


def _as_mapping(vector: Union[Mapping, Sequence[float]]) -> Mapping:
    if isinstance(vector, Mapping):
        return vector
    return dict(enumerate(vector))


def norm(vector: Union[Mapping, Sequence[float]]) -> float:
    return math.sqrt(math.fsum(v * v for v in _as_mapping(vector).values()))


def cosine(
    a: Union[Mapping, Sequence[float]], b: Union[Mapping, Sequence[float]]
) -> float:
    """A·B / (|A||B|), or 0 when either norm is 0."""
    a, b = _as_mapping(a), _as_mapping(b)
    norm_a, norm_b = norm(a), norm(b)
    if norm_a == 0 or norm_b == 0:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = math.fsum(v * b[k] for k, v in a.items() if k in b)
    return dot / (norm_a * norm_b)


@dataclass
class LexicalIndex(object):
    docs: List[LabelDoc]
    df: Dict[str, int] = field(default_factory=dict)
    vectors: List[Vector] = field(default_factory=list)
    # Number of top_k calls served
    queries: int = 0

    def __post_init__(self) -> None:
        if not self.df:
            for doc in self.docs:
                for token in set(doc.tokens):
                    self.df[token] = self.df.get(token, 0) + 1
        if not self.vectors:
            self.vectors = [self.weigh(doc.tokens) for doc in self.docs]
        self._norms = [norm(v) for v in self.vectors]
        self._postings: Dict[str, List[int]] = {}
        for i, vector in enumerate(self.vectors):
            for token in vector:
                self._postings.setdefault(token, []).append(i)
        self._by_id = {doc.id: i for i, doc in enumerate(self.docs)}

    @property
    def n_docs(self) -> int:
        return len(self.docs)

    def __len__(self) -> int:
        return len(self.docs)

    def idf(self, token: str) -> float:
        return math.log(self.n_docs / self.df[token])

    def weigh(self, tokens: Iterable[str]) -> Vector:
        """TF-IDF vector; tokens unseen by the index are dropped."""
        counts = Counter(t for t in tokens if t in self.df)
        return {t: tf * self.idf(t) for t, tf in counts.items()}

    def vector(self, doc_id: str) -> Vector:
        return self.vectors[self._by_id[doc_id]]

    def doc(self, doc_id: str) -> LabelDoc:
        return self.docs[self._by_id[doc_id]]

    def top_k(
        self, query: str, k: int = const.DEFAULT_TOP_K, kind: Optional[DocKind] = None
    ) -> List[Match]:
        """Best ``k`` documents of ``kind`` by cosine against ``query``.

        Only documents scoring above 0 are returned. Ties are broken by id.
        """
        if k < 1:
            raise ValueError("k must be a positive integer")
        self.queries += 1
        qvec = self.weigh(tokenize(query))
        qnorm = norm(qvec)
        if qnorm == 0:
            return []
        dots: Dict[int, float] = {}
        for token, weight in qvec.items():
            for i in self._postings.get(token, ()):
                dots[i] = dots.get(i, 0.0) + weight * self.vectors[i][token]
        matches = []
        for i, dot in dots.items():
            doc = self.docs[i]
            if kind is not None and doc.kind is not kind:
                continue
            if self._norms[i] == 0 or dot <= 0:
                continue
            score = min(1.0, dot / (qnorm * self._norms[i]))
            matches.append(Match(doc.id, score, doc.kind, doc.source))
        matches.sort(key=lambda m: (-m.score, m.id))
        return matches[:k]


def _excluded_iris(onto: Optional[object]) -> Set[Iri]:
    excluded: Set[Iri] = set()
    if onto is not None:
        excluded.update(getattr(onto, "classes", ()))
        excluded.update(getattr(onto, "risk_iris", ()))
    return excluded


def build_index(store: GraphStore, onto: Optional[object] = None) -> LexicalIndex:
    """One document per entity IRI and per quoted triple in ``store``.

    Ontology classes, risk-category IRIs and RDF/RDFS vocabulary are left out.
    """
    if not len(store):
        raise EmptyStore("Cannot build a lexical index over an empty store")
    excluded = _excluded_iris(onto)
    vocabularies = (RDF, RDFS, XSD)
    docs: List[LabelDoc] = []
    for iri in sorted(store.entity_iris(), key=n3):
        if iri in excluded or any(iri in ns for ns in vocabularies):
            continue
        tokens = term_tokens(iri)
        if tokens:
            docs.append(LabelDoc(n3(iri), DocKind.ENTITY, tuple(tokens), iri))
    for event in sorted(store.quoted_terms(), key=n3):
        tokens = term_tokens(event)
        if tokens:
            docs.append(LabelDoc(n3(event), DocKind.EVENT, tuple(tokens), event))
    if not docs:
        raise EmptyStore("The store holds no labelled entities or events")
    index = LexicalIndex(docs)
    log.debug("Built lexical index over %d documents", index.n_docs)
    return index


def build_clause_index(clauses: Iterable[Tuple[str, str]]) -> LexicalIndex:
    """Index whole clause texts, given as ``(clause_id, text)`` pairs."""
    docs = [
        LabelDoc(clause_id, DocKind.CLAUSE, tuple(tokenize(text)), clause_id)
        for clause_id, text in clauses
        if tokenize(text)
    ]
    if not docs:
        raise EmptyStore("No clause text to index")
    return LexicalIndex(docs)

