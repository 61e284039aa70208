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
"""SPARQL-star subset: ``PREFIX``, ``SELECT``, ``WHERE`` and ``UNION``.

Results always have set semantics and come back in canonical order.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from nckg import const
from nckg.exceptions import AnchorKindMismatch
from nckg.store import Bindings, GraphStore
from nckg.terms import (
    ground,
    is_ground,
    Iri,
    n3,
    pattern_variables,
    PatternTerm,
    QuotedPattern,
    QuotedTriple,
    Term,
    Triple,
    TriplePattern,
    Variable,
)
from nckg.turtle import (
    EOF,
    format_term,
    IRIREF,
    KEYWORD,
    Lexer,
    PNAME,
    QUOTE_CLOSE,
    QUOTE_OPEN,
    STRING,
    TokenStream,
    VAR,
)

__all__ = [
    "Query",
    "SolutionTable",
    "QueryTemplate",
    "parse_query",
    "evaluate",
    "bind_template",
    "run_template",
    "run_query",
    "template_text",
    "context_triples",
    "risk_objects",
]

log = logging.getLogger(__name__)

Row = Tuple[Optional[Term], ...]


@dataclass
class Query(object):
    prefixes: Dict[str, str] = field(default_factory=dict)
    # None means ``SELECT *``
    projection: Optional[List[str]] = None
    where: List[List[TriplePattern]] = field(default_factory=list)

    @property
    def variables(self) -> List[str]:
        """Variables in order of first appearance."""
        names: List[str] = []
        for alternative in self.where:
            for pattern in alternative:
                for name in pattern_variables(pattern):
                    if name not in names:
                        names.append(name)
        return names

    @property
    def header(self) -> List[str]:
        return list(self.projection) if self.projection is not None else self.variables


def _row_key(row: Row) -> Tuple[str, ...]:
    return tuple("" if t is None else n3(t) for t in row)


@dataclass
class SolutionTable(object):
    header: List[str]
    rows: List[Row] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def bindings(self) -> Iterator[Dict[str, Term]]:
        for row in self.rows:
            yield {
                name: term for name, term in zip(self.header, row) if term is not None
            }

    def column(self, name: str) -> List[Term]:
        idx = self.header.index(name)
        return [row[idx] for row in self.rows if row[idx] is not None]  # type: ignore

    def to_dicts(self, prefixes: Optional[Mapping[str, str]] = None) -> List[Dict]:
        return [
            {
                name: ("" if term is None else format_term(term, prefixes or {}))
                for name, term in zip(self.header, row)
            }
            for row in self.rows
        ]

    def to_tsv(self, prefixes: Optional[Mapping[str, str]] = None) -> str:
        lines = ["\t".join("?" + name for name in self.header)]
        for record in self.to_dicts(prefixes):
            lines.append("\t".join(record[name] for name in self.header))
        return "\n".join(lines) + "\n"


class _QueryReader(TokenStream):
    def read(self) -> Query:
        while self.at(KEYWORD, "PREFIX"):
            self.directive()
        self.expect_keyword("SELECT")
        projection: Optional[List[str]] = None
        projected_at: Dict[str, int] = {}
        if self.at("*"):
            self.advance()
        else:
            projection = []
            while self.at(VAR):
                token = self.advance()
                if token.value not in projection:
                    projection.append(token.value)
                    projected_at[token.value] = token.offset
            if not projection:
                raise self.unexpected("'*' or a variable")
        if self.at(KEYWORD, "WHERE"):
            self.advance()
        self.expect("{", "'{'")
        where: List[List[TriplePattern]] = []
        if self.at("{"):
            where.append(self.group())
            while self.at(KEYWORD, "UNION"):
                self.advance()
                where.append(self.group())
        else:
            where.append(self.patterns())
        self.expect("}", "'}'")
        if not self.at(EOF):
            raise self.unexpected("end of query")
        query = Query(dict(self.prefixes), projection, where)
        seen = set(query.variables)
        for name, offset in projected_at.items():
            if name not in seen:
                raise self.lexer.error(
                    "Projected variable ?%s does not appear in any pattern" % name,
                    offset,
                )
        return query

    def expect_keyword(self, word: str) -> None:
        if not self.at(KEYWORD, word):
            raise self.unexpected(word)
        self.advance()

    def group(self) -> List[TriplePattern]:
        self.expect("{", "'{'")
        patterns = self.patterns()
        self.expect("}", "'}'")
        return patterns

    def patterns(self) -> List[TriplePattern]:
        patterns: List[TriplePattern] = []
        while not self.at("}"):
            subject = self.term(allow_literal=False)
            while True:
                predicate = self.predicate()
                while True:
                    patterns.append(
                        TriplePattern(subject, predicate, self.term(allow_literal=True))
                    )
                    if not self.at(","):
                        break
                    self.advance()
                if not self.at(";"):
                    break
                self.advance()
            if self.at("."):
                self.advance()
            elif not self.at("}"):
                raise self.unexpected("'.' or '}'")
        if not patterns:
            raise self.unexpected("a triple pattern")
        return patterns

    def predicate(self) -> PatternTerm:
        if self.at(VAR):
            return Variable(self.advance().value)
        if self.at(IRIREF) or self.at(PNAME):
            return self.iri()
        raise self.unexpected("a predicate IRI or variable")

    def term(self, allow_literal: bool) -> PatternTerm:
        token = self.current
        if token.kind == VAR:
            return Variable(self.advance().value)
        if token.kind == QUOTE_OPEN:
            self.advance()
            subject = self.term(allow_literal=False)
            predicate = self.predicate()
            obj = self.term(allow_literal=True)
            self.expect(QUOTE_CLOSE, "'>>'")
            return ground(QuotedPattern(subject, predicate, obj))
        if token.kind == STRING:
            if not allow_literal:
                raise self.lexer.error(
                    "A literal cannot be in subject position", token.offset
                )
            return self.literal()
        if token.kind in (IRIREF, PNAME):
            return self.iri()
        raise self.unexpected("a term, quoted pattern or variable")


def parse_query(text: str, source: Optional[str] = None) -> Query:
    return _QueryReader(Lexer(text, source, query_mode=True)).read()


def _bound_positions(pattern: TriplePattern, bound: Set[str]) -> int:
    score = 0
    for term in pattern:
        if is_ground(term):
            score += 2
        elif isinstance(term, Variable) and term.name in bound:
            score += 2
        elif isinstance(term, QuotedPattern):
            score += 1
    return score


def _join(store: GraphStore, patterns: Sequence[TriplePattern]) -> List[Bindings]:
    remaining = list(patterns)
    solutions: List[Bindings] = [{}]
    bound: Set[str] = set()
    while remaining and solutions:
        # Most selective pattern first; ties keep the written order.
        best = max(
            range(len(remaining)),
            key=lambda i: (_bound_positions(remaining[i], bound), -i),
        )
        pattern = remaining.pop(best)
        solutions = [
            found
            for solution in solutions
            for _, found in store.match_bindings(pattern, solution)
        ]
        bound.update(pattern_variables(pattern))
    return solutions


def evaluate(store: GraphStore, query: Query) -> SolutionTable:
    header = query.header
    rows: Set[Row] = set()
    for alternative in query.where:
        for solution in _join(store, alternative):
            rows.add(tuple(solution.get(name) for name in header))
    return SolutionTable(header, sorted(rows, key=_row_key))


def run_query(store: GraphStore, text: str) -> SolutionTable:
    return evaluate(store, parse_query(text))


class QueryTemplate(enum.Enum):
    ENTITY_CONTEXT = "EntityContext"
    EVENT_CONTEXT = "EventContext"
    RISK_CATEGORY = "RiskCategory"


_CONTEXT_BODY = "SELECT ?s ?p ?o WHERE { { ?s ?p %(anchor)s } UNION { %(anchor)s ?p ?o } }"
_RISK_BODY = (
    "SELECT ?r WHERE { { %(anchor)s ckg:hasRiskCategory ?r }"
    " UNION { %(anchor)s ckg:hasRiskLabel ?r } }"
)


def template_text(
    template: QueryTemplate,
    anchor: Term,
    prefixes: Optional[Mapping[str, str]] = None,
) -> str:
    if template is QueryTemplate.ENTITY_CONTEXT:
        if not isinstance(anchor, Iri):
            raise AnchorKindMismatch("EntityContext needs an IRI anchor, got %s" % anchor)
    elif not isinstance(anchor, QuotedTriple):
        raise AnchorKindMismatch(
            "%s needs a quoted-triple anchor, got %s" % (template.value, anchor)
        )
    prefixes = dict(prefixes or const.DEFAULT_PREFIXES)
    prefixes.setdefault("ckg", const.CKG_NS)
    header = "".join("PREFIX %s: <%s>\n" % item for item in sorted(prefixes.items()))
    body = _RISK_BODY if template is QueryTemplate.RISK_CATEGORY else _CONTEXT_BODY
    return header + body % {"anchor": format_term(anchor, prefixes)}


def bind_template(
    template: QueryTemplate,
    anchor: Term,
    prefixes: Optional[Mapping[str, str]] = None,
) -> Query:
    """Build one of the three retrieval queries around ``anchor``."""
    return parse_query(template_text(template, anchor, prefixes))


def context_triples(table: SolutionTable, anchor: Term) -> List[Triple]:
    """Rebuild triples from a context query's ``?s ?p ?o`` rows."""
    triples = []
    for row in table.bindings():
        subject = row.get("s", anchor)
        obj = row.get("o", anchor)
        triples.append(Triple(subject, row["p"], obj))  # type: ignore
    return triples


def run_template(
    store: GraphStore, template: QueryTemplate, anchor: Term
) -> SolutionTable:
    return evaluate(store, bind_template(template, anchor, store.prefixes))


def risk_objects(store: GraphStore, anchor: QuotedTriple) -> List[Term]:
    return run_template(store, QueryTemplate.RISK_CATEGORY, anchor).column("r")
