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
"""Turtle-star subset reader and writer (``.ttls`` files).

Supported: ``@prefix``/``PREFIX``, ``<iri>``, prefixed names, nestable
``<< s p o >>`` quoted triples, ``;`` and ``,`` lists, string literals with an
optional ``^^datatype`` or ``@lang``, ``.`` terminators and ``#`` comments.
Anything else (blank nodes, collections, numeric or boolean shorthand, the
``a`` keyword) is rejected with a positioned :class:`ParseError`.
"""

import bisect
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Tuple, TypeVar

from nckg import const, utils
from nckg.exceptions import InvalidTerm, ParseError, UnknownPrefix
from nckg.store import GraphStore
from nckg.terms import (
    CKG,
    escape_string,
    Iri,
    IRI_ILLEGAL_CHARS,
    IRI_SCHEME_RE,
    Literal,
    QuotedTriple,
    Term,
    Triple,
    triple_key,
)

__all__ = [
    "Document",
    "Token",
    "Lexer",
    "parse",
    "serialize",
    "format_term",
    "load_store",
    "save_store",
]

log = logging.getLogger(__name__)

T = TypeVar("T")

# Token kinds
IRIREF = "IRIREF"
PNAME = "PNAME"
STRING = "STRING"
LANGTAG = "LANGTAG"
DTYPE = "^^"
PREFIX_DIRECTIVE = "@prefix"
KEYWORD = "KEYWORD"
VAR = "VAR"
QUOTE_OPEN = "<<"
QUOTE_CLOSE = ">>"
EOF = "EOF"
PUNCTUATION = {";": ";", ",": ",", ".": ".", "{": "{", "}": "}", "*": "*"}

_PNAME_RE = re.compile(
    r"(?P<prefix>[A-Za-z][\w\-]*)?:(?P<local>(?:[\w\-](?:[\w\-.]*[\w\-])?)?)"
)
_LOCAL_RE = re.compile(r"^[\w\-](?:[\w\-.]*[\w\-])?$")
_WORD_RE = re.compile(r"[A-Za-z][\w\-]*")
_VAR_RE = re.compile(r"[?$](?P<name>\w+)")
_LANG_RE = re.compile(r"@(?P<tag>[A-Za-z]+(?:-[A-Za-z0-9]+)*)")
_IRI_ILLEGAL = set(IRI_ILLEGAL_CHARS)
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}

QUERY_KEYWORDS = ("PREFIX", "SELECT", "WHERE", "UNION")


@dataclass(frozen=True)
class Token(object):
    kind: str
    value: str
    offset: int


class Lexer(object):
    """Tokenizer shared by the Turtle-star reader and the query parser.

    Args:
        text: Input text
        source: Name reported in error messages (usually a file path)
        query_mode: Accept ``?var``, braces, ``*`` and the query keywords
    """

    def __init__(
        self, text: str, source: Optional[str] = None, query_mode: bool = False
    ) -> None:
        self.text = text
        self.source = source
        self.query_mode = query_mode
        self._line_starts = [0] + [m.end() for m in re.finditer(r"\n", text)]

    def position(self, offset: int) -> Tuple[int, int]:
        idx = bisect.bisect_right(self._line_starts, offset) - 1
        return idx + 1, offset - self._line_starts[idx] + 1

    def line_of(self, offset: int) -> int:
        return self.position(offset)[0]

    def error(
        self, message: str, offset: int, cls: type = ParseError
    ) -> ParseError:
        offset = min(max(offset, 0), len(self.text))
        line, column = self.position(offset)
        end = self.text.find("\n", offset)
        if end < 0:
            end = len(self.text)
        snippet = self.text[offset : min(end, offset + 24)]
        return cls(message, line, column, snippet, self.source)

    def tokens(self) -> List[Token]:
        text = self.text
        pos = 0
        out: List[Token] = []
        length = len(text)
        while pos < length:
            ch = text[pos]
            if ch in " \t\r\n":
                pos += 1
                continue
            if ch == "#":
                end = text.find("\n", pos)
                pos = length if end < 0 else end
                continue
            if text.startswith("<<", pos):
                out.append(Token(QUOTE_OPEN, "<<", pos))
                pos += 2
                continue
            if text.startswith(">>", pos):
                out.append(Token(QUOTE_CLOSE, ">>", pos))
                pos += 2
                continue
            if ch == "<":
                pos = self._iriref(pos, out)
                continue
            if ch == '"':
                pos = self._string(pos, out)
                continue
            if text.startswith("^^", pos):
                out.append(Token(DTYPE, "^^", pos))
                pos += 2
                continue
            if ch == "@":
                m = _LANG_RE.match(text, pos)
                if not m:
                    raise self.error("Malformed language tag or directive", pos)
                tag = m.group("tag")
                if tag == "prefix":
                    out.append(Token(PREFIX_DIRECTIVE, tag, pos))
                elif tag == "base":
                    raise self.error("@base is not supported", pos)
                else:
                    out.append(Token(LANGTAG, tag, pos))
                pos = m.end()
                continue
            if ch == "_" and text.startswith("_:", pos):
                raise self.error("Blank nodes are not supported", pos)
            if ch in "[]":
                raise self.error("Blank nodes are not supported", pos)
            if ch in "()":
                raise self.error("Collections are not supported", pos)
            if ch.isdigit() or (ch in "+-" and text[pos + 1 : pos + 2].isdigit()):
                raise self.error("Numeric literals are not supported", pos)
            if ch == "'":
                raise self.error("Only double-quoted strings are supported", pos)
            if ch in "?$":
                if not self.query_mode:
                    raise self.error("Variables are only allowed in queries", pos)
                m = _VAR_RE.match(text, pos)
                if not m:
                    raise self.error("Malformed variable", pos)
                out.append(Token(VAR, m.group("name"), pos))
                pos = m.end()
                continue
            if ch in PUNCTUATION:
                if ch in "{}*" and not self.query_mode:
                    raise self.error("Unexpected character %r" % ch, pos)
                out.append(Token(PUNCTUATION[ch], ch, pos))
                pos += 1
                continue
            m = _PNAME_RE.match(text, pos)
            if m:
                out.append(Token(PNAME, m.group(0), pos))
                pos = m.end()
                continue
            m = _WORD_RE.match(text, pos)
            if m:
                out.append(self._word(m.group(0), pos))
                pos = m.end()
                continue
            raise self.error("Unexpected character %r" % ch, pos)
        out.append(Token(EOF, "", length))
        return out

    def _word(self, word: str, pos: int) -> Token:
        upper = word.upper()
        if upper == "PREFIX":
            return Token(KEYWORD, upper, pos)
        if self.query_mode and upper in QUERY_KEYWORDS:
            return Token(KEYWORD, upper, pos)
        if word in ("true", "false"):
            raise self.error("Boolean literals are not supported", pos)
        if word == "a":
            raise self.error("The 'a' shorthand is not supported; use rdf:type", pos)
        raise self.error("Unexpected word %r" % word, pos)

    def _iriref(self, pos: int, out: List[Token]) -> int:
        end = pos + 1
        while end < len(self.text) and self.text[end] != ">":
            if self.text[end] in _IRI_ILLEGAL:
                raise self.error("Illegal character in IRI", end)
            end += 1
        if end >= len(self.text):
            raise self.error("Unterminated IRI", pos)
        value = self.text[pos + 1 : end]
        if not IRI_SCHEME_RE.match(value):
            raise self.error("Relative IRIs are not supported", pos)
        out.append(Token(IRIREF, value, pos))
        return end + 1

    def _string(self, pos: int, out: List[Token]) -> int:
        text = self.text
        if text.startswith('"""', pos):
            raise self.error("Long strings are not supported", pos)
        chars = []
        i = pos + 1
        while True:
            if i >= len(text) or text[i] == "\n":
                raise self.error("Unterminated string", pos)
            ch = text[i]
            if ch == '"':
                break
            if ch == "\\":
                escaped = text[i + 1 : i + 2]
                if escaped not in _ESCAPES:
                    raise self.error("Unsupported escape sequence", i)
                chars.append(_ESCAPES[escaped])
                i += 2
                continue
            chars.append(ch)
            i += 1
        out.append(Token(STRING, "".join(chars), pos))
        return i + 1


class TokenStream(object):
    """Cursor over a token list with prefix-aware term readers."""

    def __init__(self, lexer: Lexer, prefixes: Optional[Mapping[str, str]] = None):
        self.lexer = lexer
        self.tokens = lexer.tokens()
        self.index = 0
        self.prefixes: Dict[str, str] = dict(prefixes or {})

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        if token.kind != EOF:
            self.index += 1
        return token

    def at(self, kind: str, value: Optional[str] = None) -> bool:
        token = self.current
        return token.kind == kind and (value is None or token.value == value)

    def expect(self, kind: str, what: Optional[str] = None) -> Token:
        if not self.at(kind):
            raise self.unexpected(what or repr(kind))
        return self.advance()

    def unexpected(self, expected: str) -> ParseError:
        token = self.current
        found = "end of input" if token.kind == EOF else repr(token.value)
        return self.lexer.error(
            "Expected %s, found %s" % (expected, found), token.offset
        )

    def directive(self) -> None:
        """Read ``@prefix p: <iri> .`` or ``PREFIX p: <iri>``."""
        turtle_style = self.advance().kind == PREFIX_DIRECTIVE
        name = self.expect(PNAME, "a prefix name")
        if not name.value.endswith(":"):
            raise self.lexer.error("Prefix name must end with ':'", name.offset)
        iri = self.expect(IRIREF, "a namespace IRI")
        self.prefixes[name.value[:-1]] = iri.value
        if turtle_style:
            self.expect(".", "'.' after @prefix")

    def iri(self) -> Iri:
        token = self.advance()
        if token.kind == IRIREF:
            return self._term(token, Iri, token.value)
        if token.kind == PNAME:
            prefix, _, local = token.value.partition(":")
            if prefix not in self.prefixes:
                raise self.lexer.error(
                    "Undeclared prefix %r" % prefix, token.offset, UnknownPrefix
                )
            return self._term(token, Iri, self.prefixes[prefix] + local)
        self.index -= 1
        raise self.unexpected("an IRI")

    def literal(self) -> Literal:
        token = self.expect(STRING, "a string")
        if self.at(LANGTAG):
            return self._term(token, Literal, token.value, lang=self.advance().value)
        if self.at(DTYPE):
            self.advance()
            return self._term(token, Literal, token.value, datatype=self.iri())
        return Literal(token.value)

    def _term(self, token: Token, factory: Callable[..., T], *args: Any, **kwargs: Any) -> T:
        try:
            return factory(*args, **kwargs)
        except InvalidTerm as e:
            raise self.lexer.error(str(e), token.offset) from e


class _TurtleReader(TokenStream):
    def __init__(self, lexer: Lexer, normalize_risk_label: bool) -> None:
        super().__init__(lexer)
        self.normalize_risk_label = normalize_risk_label
        self.triples: List[Triple] = []
        self.lines: List[int] = []

    def read(self) -> "Document":
        while not self.at(EOF):
            if self.at(PREFIX_DIRECTIVE) or self.at(KEYWORD, "PREFIX"):
                self.directive()
            else:
                self.statement()
        return Document(self.prefixes, self.triples, self.lines)

    def statement(self) -> None:
        line = self.lexer.line_of(self.current.offset)
        subject = self.node(allow_literal=False)
        while True:
            predicate = self.predicate()
            while True:
                obj = self.node(allow_literal=True)
                self.triples.append(Triple(subject, predicate, obj))
                self.lines.append(line)
                if not self.at(","):
                    break
                self.advance()
            if not self.at(";"):
                break
            while self.at(";"):
                self.advance()
            if self.at("."):
                break
        self.expect(".", "'.'")

    def predicate(self) -> Iri:
        if not (self.at(IRIREF) or self.at(PNAME)):
            raise self.unexpected("a predicate IRI")
        iri = self.iri()
        if self.normalize_risk_label and iri == CKG.hasRiskLabel:
            return CKG.hasRiskCategory
        return iri

    def node(self, allow_literal: bool) -> Term:
        token = self.current
        if token.kind == QUOTE_OPEN:
            return self.quoted()
        if token.kind == STRING:
            if not allow_literal:
                raise self.lexer.error(
                    "A literal cannot be in subject position", token.offset
                )
            return self.literal()
        if token.kind in (IRIREF, PNAME):
            return self.iri()
        raise self.unexpected("an IRI, quoted triple or literal")

    def quoted(self) -> QuotedTriple:
        self.expect(QUOTE_OPEN)
        subject = self.node(allow_literal=False)
        predicate = self.predicate()
        obj = self.node(allow_literal=True)
        self.expect(QUOTE_CLOSE, "'>>'")
        return QuotedTriple(Triple(subject, predicate, obj))


@dataclass
class Document(object):
    """Prefix map plus asserted triples in source order.

    ``lines`` holds, for each triple, the line where its statement starts.
    """

    prefixes: Dict[str, str] = field(default_factory=dict)
    triples: List[Triple] = field(default_factory=list)
    lines: List[int] = field(default_factory=list)


def parse(
    text: str, normalize_risk_label: bool = False, source: Optional[str] = None
) -> Document:
    return _TurtleReader(Lexer(text, source), normalize_risk_label).read()


def parse_file(path: str, normalize_risk_label: bool = False) -> Document:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    return parse(text, normalize_risk_label, source=path)


def format_term(term: Term, prefixes: Mapping[str, str]) -> str:
    """Render a term, compacting IRIs with the longest matching namespace."""
    if isinstance(term, Iri):
        best: Optional[Tuple[int, str]] = None
        for prefix, namespace in prefixes.items():
            if term.value.startswith(namespace):
                local = term.value[len(namespace) :]
                if _LOCAL_RE.match(local) and (best is None or len(namespace) > best[0]):
                    best = (len(namespace), "%s:%s" % (prefix, local))
        return best[1] if best else "<%s>" % term.value
    if isinstance(term, Literal):
        text = '"%s"' % escape_string(term.lexical)
        if term.lang is not None:
            return "%s@%s" % (text, term.lang)
        if term.datatype is not None:
            return "%s^^%s" % (text, format_term(term.datatype, prefixes))
        return text
    inner = term.inner
    return "<< %s %s %s >>" % (
        format_term(inner.subject, prefixes),
        format_term(inner.predicate, prefixes),
        format_term(inner.object, prefixes),
    )


def format_triple(triple: Triple, prefixes: Mapping[str, str]) -> str:
    return "%s %s %s ." % tuple(format_term(t, prefixes) for t in triple)


def prefix_block(prefixes: Mapping[str, str]) -> str:
    return "".join(
        "@prefix %s: <%s> .\n" % (prefix, namespace)
        for prefix, namespace in prefixes.items()
    )


def serialize(doc: Document) -> str:
    """Prefix block, then one statement per triple; no ``;``/``,`` lists."""
    out = prefix_block(doc.prefixes)
    if doc.triples:
        out += "\n" + "".join(
            format_triple(t, doc.prefixes) + "\n" for t in doc.triples
        )
    return out


def store_document(store: GraphStore) -> Document:
    prefixes = dict(sorted(store.prefixes.items()))
    return Document(prefixes, sorted(store.triples(), key=triple_key))


def load_store(
    paths: Iterable[str],
    max_depth: int = const.DEFAULT_MAX_DEPTH,
    normalize_risk_label: bool = False,
    store: Optional[GraphStore] = None,
) -> GraphStore:
    """Parse ``.ttls`` files and merge them into a store (set semantics)."""
    if store is None:
        store = GraphStore(max_depth=max_depth)
    for path in paths:
        doc = parse_file(path, normalize_risk_label)
        store.prefixes.update(doc.prefixes)
        added = store.insert_all(doc.triples)
        log.debug("Loaded %s: %d triples, %d new", path, len(doc.triples), added)
    return store


def save_store(store: GraphStore, path: str) -> None:
    utils.atomic_write(path, serialize(store_document(store)))
