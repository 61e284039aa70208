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
"""RDF-star terms: IRIs, literals, quoted triples and triple patterns.

A quoted triple is an ordinary term, so a triple (an *event*) can stand in
the subject or object position of another triple.
"""

import enum
import functools
import re
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple, Union

from nckg import const
from nckg.exceptions import DepthExceeded, InvalidTerm, LiteralSubject

__all__ = [
    "Iri",
    "Literal",
    "QuotedTriple",
    "Triple",
    "Term",
    "TripleKind",
    "Variable",
    "QuotedPattern",
    "TriplePattern",
    "Namespace",
    "CKG",
    "RDF",
    "RDFS",
]

# Characters an IRI reference may not hold in Turtle-star
IRI_ILLEGAL_CHARS = " \t\r\n<>\"{}|^`\\"
_INVALID_IRI_CHARS = re.compile(r"[\s<>\"{}|^`\\]")
IRI_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_LANG_TAG = re.compile(r"^[A-Za-z]+(-[A-Za-z0-9]+)*$")


@dataclass(frozen=True)
class Iri(object):
    value: str

    def __post_init__(self) -> None:
        if not isinstance(self.value, str) or not self.value:
            raise InvalidTerm("IRI must be a non-empty string")
        if _INVALID_IRI_CHARS.search(self.value):
            raise InvalidTerm("IRI contains an illegal character: %r" % self.value)
        if not IRI_SCHEME_RE.match(self.value):
            raise InvalidTerm("IRI must be absolute: %r" % self.value)

    @property
    def local_name(self) -> str:
        return local_name(self.value)

    def __str__(self) -> str:
        return n3(self)


@dataclass(frozen=True)
class Literal(object):
    lexical: str
    datatype: Optional[Iri] = None
    lang: Optional[str] = None

    def __post_init__(self) -> None:
        if self.datatype is not None and self.lang is not None:
            raise InvalidTerm("A literal cannot carry both a datatype and a language")
        if self.lang is not None and not _LANG_TAG.match(self.lang):
            raise InvalidTerm("Invalid language tag: %r" % self.lang)
        if self.lexical == "" and (self.datatype is not None or self.lang is not None):
            raise InvalidTerm("Only plain literals may be empty")

    def __str__(self) -> str:
        return n3(self)


@dataclass(frozen=True)
class QuotedTriple(object):
    inner: "Triple"

    @property
    def subject(self) -> "Term":
        return self.inner.subject

    @property
    def predicate(self) -> Iri:
        return self.inner.predicate

    @property
    def object(self) -> "Term":
        return self.inner.object

    def __str__(self) -> str:
        return n3(self)


Term = Union[Iri, Literal, QuotedTriple]


@dataclass(frozen=True)
class Triple(object):
    subject: Term
    predicate: Iri
    object: Term

    def __post_init__(self) -> None:
        if not isinstance(self.predicate, Iri):
            raise InvalidTerm("Predicate must be an IRI, got %r" % (self.predicate,))
        for term in (self.subject, self.object):
            if not isinstance(term, (Iri, Literal, QuotedTriple)):
                raise InvalidTerm("Not an RDF term: %r" % (term,))

    def __iter__(self) -> Iterator[Term]:
        return iter((self.subject, self.predicate, self.object))

    def quoted(self) -> QuotedTriple:
        return QuotedTriple(self)

    def __str__(self) -> str:
        return "%s %s %s ." % (n3(self.subject), n3(self.predicate), n3(self.object))


class TripleKind(enum.Enum):
    E2E = "E2E"
    E2EVT = "E2Evt"
    EVT2EVT = "Evt2Evt"


@dataclass(frozen=True)
class Variable(object):
    name: str

    def __str__(self) -> str:
        return "?" + self.name


@dataclass(frozen=True)
class QuotedPattern(object):
    """A ``<< s p o >>`` pattern that still contains variables."""

    subject: "PatternTerm"
    predicate: "PatternTerm"
    object: "PatternTerm"

    def __iter__(self) -> Iterator["PatternTerm"]:
        return iter((self.subject, self.predicate, self.object))


# None is an anonymous wildcard.
PatternTerm = Union[Iri, Literal, QuotedTriple, Variable, QuotedPattern, None]


@dataclass(frozen=True)
class TriplePattern(object):
    subject: PatternTerm = None
    predicate: PatternTerm = None
    object: PatternTerm = None

    def __iter__(self) -> Iterator[PatternTerm]:
        return iter((self.subject, self.predicate, self.object))

    def variables(self) -> Tuple[str, ...]:
        return pattern_variables(self)

    def __str__(self) -> str:
        return " ".join(pattern_n3(t) for t in self)


class Namespace(object):
    """Mint IRIs under a namespace: ``CKG.advancePayment`` or ``CKG["ifNot-then"]``."""

    def __init__(self, uri: str) -> None:
        self.uri = uri

    def __getattr__(self, name: str) -> Iri:
        if name.startswith("__"):
            raise AttributeError(name)
        return Iri(self.uri + name)

    def __getitem__(self, name: str) -> Iri:
        return Iri(self.uri + name)

    def __contains__(self, iri: object) -> bool:
        return isinstance(iri, Iri) and iri.value.startswith(self.uri)

    def __repr__(self) -> str:
        return "Namespace(%r)" % self.uri


CKG = Namespace(const.CKG_NS)
RDF = Namespace(const.RDF_NS)
RDFS = Namespace(const.RDFS_NS)
XSD = Namespace(const.XSD_NS)


def local_name(iri: str) -> str:
    for sep in ("#", "/", ":"):
        idx = iri.rfind(sep)
        if 0 <= idx < len(iri) - 1:
            return iri[idx + 1 :]
    return iri


def escape_string(value: str) -> str:
    return (
        value.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\t", "\\t")
    )


@functools.lru_cache(maxsize=65536)
def n3(term: Term) -> str:
    """Canonical serialization; also the sort key of every result set."""
    if isinstance(term, Iri):
        return "<%s>" % term.value
    if isinstance(term, Literal):
        text = '"%s"' % escape_string(term.lexical)
        if term.lang is not None:
            return "%s@%s" % (text, term.lang)
        if term.datatype is not None:
            return "%s^^%s" % (text, n3(term.datatype))
        return text
    if isinstance(term, QuotedTriple):
        inner = term.inner
        return "<< %s %s %s >>" % (n3(inner.subject), n3(inner.predicate), n3(inner.object))
    raise InvalidTerm("Not an RDF term: %r" % (term,))


def pattern_n3(term: PatternTerm) -> str:
    if term is None:
        return "[]"
    if isinstance(term, Variable):
        return str(term)
    if isinstance(term, QuotedPattern):
        return "<< %s >>" % " ".join(pattern_n3(t) for t in term)
    return n3(term)


def triple_key(triple: Triple) -> Tuple[str, str, str]:
    return (n3(triple.subject), n3(triple.predicate), n3(triple.object))


def depth(term: Term) -> int:
    if isinstance(term, QuotedTriple):
        return 1 + max(depth(term.inner.subject), depth(term.inner.object))
    return 0


def triple_depth(triple: Triple) -> int:
    return max(depth(triple.subject), depth(triple.object))


def classify_kind(triple: Triple) -> TripleKind:
    quoted_subject = isinstance(triple.subject, QuotedTriple)
    quoted_object = isinstance(triple.object, QuotedTriple)
    if quoted_subject and quoted_object:
        return TripleKind.EVT2EVT
    if quoted_subject or quoted_object:
        return TripleKind.E2EVT
    return TripleKind.E2E


def is_nested(triple: Triple) -> bool:
    return classify_kind(triple) is not TripleKind.E2E


def check_triple(triple: Triple, max_depth: int = const.DEFAULT_MAX_DEPTH) -> None:
    """Raise if ``triple`` may not be asserted (or quoted) in a store."""
    if isinstance(triple.subject, Literal):
        raise LiteralSubject("Literal in subject position: %s" % triple)
    for term in (triple.subject, triple.object):
        if isinstance(term, QuotedTriple):
            check_triple(term.inner, max_depth)
    found = triple_depth(triple)
    if found > max_depth:
        raise DepthExceeded(
            "Nesting depth %d exceeds the maximum of %d" % (found, max_depth)
        )


def iter_quoted(term: Term) -> Iterator[QuotedTriple]:
    """Yield ``term`` and every quoted triple nested inside it."""
    if isinstance(term, QuotedTriple):
        yield term
        yield from iter_quoted(term.inner.subject)
        yield from iter_quoted(term.inner.object)


def iter_node_iris(term: Term) -> Iterator[Iri]:
    """Yield the IRIs in node (subject/object) positions, looking inside quotes."""
    if isinstance(term, Iri):
        yield term
    elif isinstance(term, QuotedTriple):
        yield from iter_node_iris(term.inner.subject)
        yield from iter_node_iris(term.inner.object)


def is_ground(term: PatternTerm) -> bool:
    if term is None or isinstance(term, Variable):
        return False
    if isinstance(term, QuotedPattern):
        return all(is_ground(t) for t in term)
    return True


def ground(term: PatternTerm) -> PatternTerm:
    """Turn a variable-free QuotedPattern into a QuotedTriple.

    A pattern whose predicate is bound to a non-IRI stays a QuotedPattern; it
    matches no stored triple.
    """
    if isinstance(term, QuotedPattern):
        parts = tuple(ground(t) for t in term)
        subject, predicate, obj = parts
        if isinstance(predicate, Iri) and all(
            isinstance(t, (Iri, Literal, QuotedTriple)) for t in (subject, obj)
        ):
            return QuotedTriple(Triple(subject, predicate, obj))  # type: ignore
        return QuotedPattern(*parts)
    return term


def pattern_variables(pattern: Union[TriplePattern, QuotedPattern]) -> Tuple[str, ...]:
    names = []
    for term in pattern:
        if isinstance(term, Variable):
            names.append(term.name)
        elif isinstance(term, QuotedPattern):
            names.extend(pattern_variables(term))
    seen = set()
    return tuple(n for n in names if not (n in seen or seen.add(n)))  # type: ignore
