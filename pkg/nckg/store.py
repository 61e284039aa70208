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
"""In-memory RDF-star triple store.

The store keeps three permutation indexes (SPO, POS, OSP) over the top-level
terms of each asserted triple. Patterns that reach inside quoted triples are
answered by post-filtering the candidates of the most selective index.
"""

import logging
from dataclasses import asdict, dataclass
from typing import (
    Any,
    Dict,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Set,
    Tuple,
)

from nckg import const
from nckg.terms import (
    check_triple,
    ground,
    is_ground,
    is_nested,
    iter_node_iris,
    iter_quoted,
    Iri,
    PatternTerm,
    QuotedPattern,
    QuotedTriple,
    Term,
    Triple,
    triple_key,
    TriplePattern,
    Variable,
)

__all__ = ["GraphStore", "StoreStats", "unify", "unify_triple"]

log = logging.getLogger(__name__)

Bindings = Dict[str, Term]
_Index = Dict[Term, Dict[Term, Set[Term]]]


@dataclass(frozen=True)
class StoreStats(object):
    triples: int = 0
    nested: int = 0
    entities: int = 0
    events: int = 0
    clauses: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if self.clauses is None:
            del data["clauses"]
        return data


def unify(pattern: PatternTerm, term: Term, bindings: Bindings) -> Optional[Bindings]:
    """Unify one pattern position with a term.

    Returns the (possibly extended) bindings, or None when the term does not
    fit. The input mapping is never modified.
    """
    if pattern is None:
        return bindings
    if isinstance(pattern, Variable):
        bound = bindings.get(pattern.name)
        if bound is None:
            extended = dict(bindings)
            extended[pattern.name] = term
            return extended
        return bindings if bound == term else None
    if isinstance(pattern, QuotedPattern):
        if not isinstance(term, QuotedTriple):
            return None
        return unify_triple(pattern, term.inner, bindings)
    return bindings if pattern == term else None


def unify_triple(
    pattern: Iterable[PatternTerm], triple: Triple, bindings: Bindings
) -> Optional[Bindings]:
    current: Optional[Bindings] = bindings
    for pat, term in zip(pattern, triple):
        current = unify(pat, term, current)  # type: ignore
        if current is None:
            return None
    return current


def _index_add(index: _Index, a: Term, b: Term, c: Term) -> None:
    index.setdefault(a, {}).setdefault(b, set()).add(c)


def _index_remove(index: _Index, a: Term, b: Term, c: Term) -> None:
    inner = index[a]
    leaves = inner[b]
    leaves.discard(c)
    if not leaves:
        del inner[b]
    if not inner:
        del index[a]


class GraphStore(object):
    """Indexed set of asserted RDF-star triples.

    Args:
        max_depth: Maximum quoted-triple nesting depth accepted on insert
        prefixes: Prefix map used when the store is serialized
    """

    def __init__(
        self,
        max_depth: int = const.DEFAULT_MAX_DEPTH,
        prefixes: Optional[Mapping[str, str]] = None,
    ) -> None:
        if max_depth < 1:
            raise ValueError("max_depth must be a positive integer")
        self.max_depth = max_depth
        self.prefixes: Dict[str, str] = dict(const.DEFAULT_PREFIXES)
        if prefixes:
            self.prefixes.update(prefixes)
        self._triples: Set[Triple] = set()
        self._spo: _Index = {}
        self._pos: _Index = {}
        self._osp: _Index = {}
        # Number of read operations served, used to check that a pipeline
        # mode never consulted the store.
        self.reads = 0

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, triple: object) -> bool:
        return triple in self._triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples())

    def __repr__(self) -> str:
        return "<GraphStore triples=%d max_depth=%d>" % (len(self), self.max_depth)

    def contains(self, triple: Triple) -> bool:
        self.reads += 1
        return triple in self._triples

    def triples(self) -> List[Triple]:
        """All stored triples in canonical order."""
        return sorted(self._triples, key=triple_key)

    def insert(self, triple: Triple) -> bool:
        check_triple(triple, self.max_depth)
        if triple in self._triples:
            return False
        s, p, o = triple
        self._triples.add(triple)
        _index_add(self._spo, s, p, o)
        _index_add(self._pos, p, o, s)
        _index_add(self._osp, o, s, p)
        return True

    def insert_all(self, triples: Iterable[Triple]) -> int:
        return sum(1 for t in triples if self.insert(t))

    def remove(self, triple: Triple) -> bool:
        if triple not in self._triples:
            return False
        s, p, o = triple
        self._triples.remove(triple)
        _index_remove(self._spo, s, p, o)
        _index_remove(self._pos, p, o, s)
        _index_remove(self._osp, o, s, p)
        return True

    def clear(self) -> None:
        self._triples.clear()
        self._spo.clear()
        self._pos.clear()
        self._osp.clear()

    def _candidates(
        self, s: PatternTerm, p: PatternTerm, o: PatternTerm
    ) -> Iterator[Triple]:
        s_known, p_known, o_known = is_ground(s), is_ground(p), is_ground(o)
        if p_known and not isinstance(p, Iri):
            return
        # Variable-free but unmatchable, see terms.ground
        if any(isinstance(t, QuotedPattern) and is_ground(t) for t in (s, o)):
            return
        if s_known and p_known and o_known:
            triple = Triple(s, p, o)  # type: ignore
            if triple in self._triples:
                yield triple
        elif s_known:
            by_p = self._spo.get(s, {})  # type: ignore
            if p_known:
                for obj in by_p.get(p, ()):  # type: ignore
                    yield Triple(s, p, obj)  # type: ignore
            elif o_known:
                for pred in self._osp.get(o, {}).get(s, ()):  # type: ignore
                    yield Triple(s, pred, o)  # type: ignore
            else:
                for pred, objs in by_p.items():
                    for obj in objs:
                        yield Triple(s, pred, obj)  # type: ignore
        elif p_known:
            by_o = self._pos.get(p, {})  # type: ignore
            if o_known:
                for subj in by_o.get(o, ()):  # type: ignore
                    yield Triple(subj, p, o)  # type: ignore
            else:
                for obj, subjs in by_o.items():
                    for subj in subjs:
                        yield Triple(subj, p, obj)  # type: ignore
        elif o_known:
            for subj, preds in self._osp.get(o, {}).items():  # type: ignore
                for pred in preds:
                    yield Triple(subj, pred, o)  # type: ignore
        else:
            yield from self._triples

    def match_bindings(
        self, pattern: TriplePattern, bindings: Optional[Bindings] = None
    ) -> Iterator[Tuple[Triple, Bindings]]:
        """Yield (triple, bindings) for every stored triple unifying with pattern.

        Variables already bound in ``bindings`` are substituted first, so the
        most selective index is used. Order is unspecified.
        """
        self.reads += 1
        start: Bindings = dict(bindings or {})
        s, p, o = (ground(_substitute(t, start)) for t in pattern)
        for triple in self._candidates(s, p, o):
            found = unify_triple((s, p, o), triple, start)
            if found is not None:
                yield triple, found

    def match(self, pattern: TriplePattern) -> List[Triple]:
        """Stored triples unifying with ``pattern``, in canonical order."""
        return sorted(
            {t for t, _ in self.match_bindings(pattern)}, key=triple_key
        )

    def quoted_terms(self) -> Set[QuotedTriple]:
        """Quoted triples at any depth of any stored triple."""
        found: Set[QuotedTriple] = set()
        for triple in self._triples:
            for term in (triple.subject, triple.object):
                found.update(iter_quoted(term))
        return found

    def entity_iris(self) -> Set[Iri]:
        """IRIs in subject/object positions, including inside quoted triples."""
        found: Set[Iri] = set()
        for triple in self._triples:
            found.update(iter_node_iris(triple.subject))
            found.update(iter_node_iris(triple.object))
        return found

    def stats(self, clauses: Optional[int] = None) -> StoreStats:
        events: Set[QuotedTriple] = set()
        nested = 0
        for triple in self._triples:
            if is_nested(triple):
                nested += 1
            for term in (triple.subject, triple.object):
                if isinstance(term, QuotedTriple):
                    events.add(term)
        return StoreStats(
            triples=len(self._triples),
            nested=nested,
            entities=len(self.entity_iris()),
            events=len(events),
            clauses=clauses,
        )


def _substitute(term: PatternTerm, bindings: Bindings) -> PatternTerm:
    if isinstance(term, Variable):
        return bindings.get(term.name, term)
    if isinstance(term, QuotedPattern):
        return QuotedPattern(*(_substitute(t, bindings) for t in term))
    return term
