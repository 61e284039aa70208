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
"""Clause-to-graph extraction with a file-based review step.

A clause goes through five model-assisted steps (actor/object recognition,
event linking, property linking, constraint recognition, nested linking). The
result is written to a ``.stage.ttls`` file that a reviewer edits and marks
``Approved`` before it is committed to the store.
"""

import concurrent.futures
import enum
import json
import logging
import os
import re
from dataclasses import dataclass, field
from typing import (
    Any,
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Set,
    Tuple,
)

from nckg import const, utils
from nckg.client import Gateway
from nckg.exceptions import (
    EmptyExtraction,
    ExtractionStepError,
    InvalidTerm,
    NckgError,
    NotApproved,
    on_gateway_error,
    PromptError,
    StatusMissing,
)
from nckg.ontology import OntologyModel
from nckg.prompts import (
    CLASS_DESCRIPTIONS,
    format_elements,
    parse_json_array,
    PromptTemplate,
)
from nckg.store import GraphStore
from nckg.terms import (
    check_triple,
    CKG,
    is_nested,
    Iri,
    QuotedTriple,
    RDF,
    RDFS,
    Triple,
    TriplePattern,
)
from nckg.turtle import Document, format_term, format_triple, parse, prefix_block

__all__ = [
    "ClauseSource",
    "Clause",
    "ExtractionStep",
    "ExtractionStatus",
    "ClauseGraph",
    "StagedExtraction",
    "CommitDelta",
    "IngestSummary",
    "mint_entity",
    "mint_predicate",
    "extract_clause",
    "write_staging",
    "read_staging",
    "commit",
    "ingest_corpus",
]

log = logging.getLogger(__name__)

_ARTICLES = ("the", "a", "an")
_WORD_RE = re.compile(r"[^\W_]+")
_LOCAL_RE = re.compile(r"^[A-Za-z][\w\-]*$")
_HEADER_RE = re.compile(r"^#\s*(?P<key>[a-z]+):\s?(?P<value>.*)$")
_MINT_RE = re.compile(r'^(?P<span>".*")\s*->\s*(?P<iri>\S+)$')
_TEMPORAL_PREFIXES = ("within", "before", "after", "until", "assoonas", "by")


class ClauseSource(enum.Enum):
    FIDIC = "FIDIC"
    NEC = "NEC"
    OTHER = "Other"

    @classmethod
    def parse(cls, value: str) -> "ClauseSource":
        for source in cls:
            if source.value.lower() == str(value).strip().lower():
                return source
        raise ValueError("Unknown clause source %r" % value)


@dataclass(frozen=True)
class Clause(object):
    id: str
    source: ClauseSource
    section: str
    text: str

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id.strip():
            raise ValueError("A clause needs a non-empty id")
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValueError("Clause %s has no text" % self.id)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Clause":
        return cls(
            id=str(data.get("id", "")),
            source=ClauseSource.parse(data.get("source", "Other")),
            section=str(data.get("section", "")),
            text=data.get("text", ""),
        )

    def to_dict(self) -> Dict[str, str]:
        return {
            "id": self.id,
            "source": self.source.value,
            "section": self.section,
            "text": self.text,
        }


class ExtractionStep(enum.Enum):
    ACTOR_OBJECT = "actor-object"
    EVENT_LINK = "event-link"
    PROPERTY = "property"
    CONSTRAINT = "constraint"
    NESTED_LINK = "nested-link"
    ANNOTATION = "annotation"
    # Triples a reviewer added outside any step section
    MANUAL = "manual"


class ExtractionStatus(enum.Enum):
    PENDING = "Pending"
    APPROVED = "Approved"
    REJECTED = "Rejected"


_EVENT_STEPS = (ExtractionStep.EVENT_LINK, ExtractionStep.PROPERTY)


@dataclass
class ClauseGraph(object):
    clause_id: str
    triples: List[Triple] = field(default_factory=list)
    provenance: Dict[Triple, ExtractionStep] = field(default_factory=dict)
    # Upper ontology class of every extracted entity
    entity_types: Dict[Iri, Iri] = field(default_factory=dict)
    # Surface span -> minted IRI
    minting: Dict[str, Iri] = field(default_factory=dict)

    def add(self, triple: Triple, step: ExtractionStep) -> bool:
        if triple in self.provenance:
            return False
        self.triples.append(triple)
        self.provenance[triple] = step
        return True

    @property
    def entities(self) -> Set[Iri]:
        return set(self.entity_types)

    @property
    def constraints(self) -> Set[Iri]:
        constraint = CKG[const.CONTRACT_CONSTRAINT]
        return {e for e, cls in self.entity_types.items() if cls == constraint}

    @property
    def events(self) -> List[Triple]:
        """Event triples, asserted (isolated events) or quoted in nested ones."""
        found: List[Triple] = []
        for triple in self.triples:
            step = self.provenance.get(triple)
            if step in _EVENT_STEPS:
                candidates = [triple]
            elif step is ExtractionStep.NESTED_LINK:
                candidates = [
                    t.inner for t in (triple.subject, triple.object) if isinstance(t, QuotedTriple)
                ]
            else:
                candidates = []
            for event in candidates:
                if event not in found:
                    found.append(event)
        return found

    @property
    def relations(self) -> Set[Iri]:
        predicates = {t.predicate for t in self.triples}
        predicates.update(e.predicate for e in self.events)
        return predicates

    @property
    def nested(self) -> List[Triple]:
        return [t for t in self.triples if is_nested(t)]


@dataclass
class StagedExtraction(object):
    clause: Clause
    graph: ClauseGraph
    status: ExtractionStatus = ExtractionStatus.PENDING
    reviewer_note: str = ""


@dataclass(frozen=True)
class CommitDelta(object):
    triples_added: int = 0
    nested_added: int = 0


def _split_words(span: str) -> List[str]:
    words = _WORD_RE.findall(span)
    while len(words) > 1 and words[0].lower() in _ARTICLES:
        words = words[1:]
    return words


def _normalize_span(span: str) -> str:
    return " ".join(w.lower() for w in _split_words(span))


def mint_entity(span: str, aliases: Optional[Mapping[str, str]] = None) -> Optional[Iri]:
    """Turn a surface span into a ``ckg:`` IRI ("advance payment" ->
    ``ckg:advancePayment``). Returns None when nothing usable is left."""
    span = span.strip()
    if aliases:
        wanted = _normalize_span(span)
        for alias, canonical in aliases.items():
            if _normalize_span(alias) == wanted:
                span = canonical.strip()
                break
    if _LOCAL_RE.match(span):
        return CKG[span]
    words = _split_words(span)
    if not words:
        return None
    local = words[0] + "".join(w[0].upper() + w[1:] for w in words[1:])
    if not local[0].isalpha():
        local = "n" + local
    return CKG[local]


def mint_predicate(label: str) -> Optional[Iri]:
    """lowerCamel predicate IRI; ``ifNot-then`` style names are kept."""
    label = label.strip()
    if _LOCAL_RE.match(label):
        return CKG[label[0].lower() + label[1:]]
    words = _WORD_RE.findall(label)
    if not words:
        return None
    local = words[0].lower() + "".join(w[0].upper() + w[1:] for w in words[1:])
    if not local[0].isalpha():
        return None
    return CKG[local]


class _Extractor(object):
    def __init__(
        self,
        clause: Clause,
        onto: OntologyModel,
        gateway: Gateway,
        aliases: Optional[Mapping[str, str]] = None,
    ) -> None:
        self.clause = clause
        self.onto = onto
        self.gateway = gateway
        self.aliases = aliases or {}
        self.graph = ClauseGraph(clause.id)

    def _reply_array(self, step: str, template: PromptTemplate, slots: Dict) -> List[Any]:
        content = self.gateway.ask(template, slots)
        try:
            return parse_json_array(content)
        except PromptError as e:
            raise ExtractionStepError("%s: %s" % (step, e)) from e

    def _recognize(self, step: str, class_name: str) -> List[Iri]:
        spans = self._reply_array(
            step,
            PromptTemplate.NER,
            {
                "target_class": class_name,
                "class_description": CLASS_DESCRIPTIONS[class_name],
                "clause": self.clause.text,
            },
        )
        upper = CKG[class_name]
        found: List[Iri] = []
        for span in spans:
            if not isinstance(span, str):
                raise ExtractionStepError("%s: expected strings, got %r" % (step, span))
            iri = mint_entity(span, self.aliases)
            if iri is None:
                continue
            self.graph.minting.setdefault(span.strip(), iri)
            self.graph.entity_types.setdefault(iri, upper)
            if iri not in found:
                found.append(iri)
        return found

    def _link(self, step: str, stage: str, elements: Dict[str, str], instructions: str) -> List[Tuple[str, str, str]]:
        rows = self._reply_array(
            step,
            PromptTemplate.RELATION_LINK,
            {
                "link_stage": stage,
                "clause": self.clause.text,
                "elements": format_elements(elements),
                "instructions": instructions,
            },
        )
        links = []
        for row in rows:
            if (
                not isinstance(row, list)
                or len(row) != 3
                or not all(isinstance(x, str) for x in row)
            ):
                raise ExtractionStepError(
                    "%s: expected [subject, predicate, object], got %r" % (step, row)
                )
            links.append((row[0], row[1], row[2]))
        return links

    def _resolve(self, name: str, allowed: Iterable[Iri]) -> Optional[Iri]:
        iri = self.graph.minting.get(name.strip()) or mint_entity(name, self.aliases)
        return iri if iri in set(allowed) else None

    @on_gateway_error(ExtractionStepError, "actor and object recognition")
    def actors_and_objects(self) -> Tuple[List[Iri], List[Iri]]:
        step = "actor and object recognition"
        actors = self._recognize(step, const.CONTRACT_ACTOR)
        objects = [
            o for o in self._recognize(step, const.CONTRACT_OBJECT) if o not in actors
        ]
        return actors, objects

    @on_gateway_error(ExtractionStepError, "event linking")
    def events(self, actors: List[Iri], objects: List[Iri]) -> List[Triple]:
        elements = {
            "Actors": ", ".join(i.local_name for i in actors) or "(none)",
            "Objects": ", ".join(i.local_name for i in objects) or "(none)",
        }
        links = self._link(
            "event linking",
            "event",
            elements,
            "Link each actor to the actor or object its action in the clause"
            " concerns. The subject must be an actor.",
        )
        events = []
        for s, p, o in links:
            subject = self._resolve(s, actors)
            obj = self._resolve(o, actors + objects)
            predicate = mint_predicate(p)
            if subject is None or obj is None or predicate is None:
                log.warning(
                    "Clause %s: dropping event link %r (unknown element)",
                    self.clause.id,
                    [s, p, o],
                )
                continue
            events.append(Triple(subject, predicate, obj))
        return events

    @on_gateway_error(ExtractionStepError, "property linking")
    def properties(self, objects: List[Iri]) -> List[Triple]:
        properties = self._recognize("property recognition", const.CONTRACT_PROPERTY)
        if not properties or not objects:
            return []
        links = self._link(
            "property linking",
            "property",
            {
                "Objects": ", ".join(i.local_name for i in objects),
                "Properties": ", ".join(i.local_name for i in properties),
            },
            "Link each object to the property it has with the predicate hasProperty.",
        )
        events = []
        for s, _, o in links:
            subject = self._resolve(s, objects)
            obj = self._resolve(o, properties)
            if subject is None or obj is None:
                log.warning(
                    "Clause %s: dropping property link %r", self.clause.id, [s, o]
                )
                continue
            events.append(Triple(subject, CKG.hasProperty, obj))
        return events

    @on_gateway_error(ExtractionStepError, "constraint recognition")
    def constraints(self) -> List[Iri]:
        return self._recognize("constraint recognition", const.CONTRACT_CONSTRAINT)

    def _annotate(self, predicate: Iri, root: Iri) -> None:
        known = self.onto.super_properties(predicate) != {predicate}
        if known or predicate in self.onto.relation_taxonomy:
            return
        self.graph.add(
            Triple(predicate, RDFS.subPropertyOf, root), ExtractionStep.ANNOTATION
        )

    @on_gateway_error(ExtractionStepError, "nested linking")
    def nested(self, events: List[Triple], constraints: List[Iri]) -> List[Triple]:
        event_ids = {"E%d" % (i + 1): e for i, e in enumerate(events)}
        constraint_ids = {"C%d" % (i + 1): c for i, c in enumerate(constraints)}
        elements = {k: format_triple(e, {"": const.CKG_NS})[:-2] for k, e in event_ids.items()}
        elements = {k: "<< %s >>" % v for k, v in elements.items()}
        elements.update({k: c.local_name for k, c in constraint_ids.items()})
        links = self._link(
            "nested linking",
            "nested",
            elements,
            "Refer to elements by their ids (E1, C1, ...). Link an event to a"
            " constraint with hasConstraint or one of hasTimeConstraint,"
            " hasAmountConstraint, hasConditionConstraint, hasResultConstraint."
            " Link two events with a concrete conditional relation (hasCondition,"
            " exception, unless, ifNot-then, otherwise) or temporal relation"
            " (before, after, until, asSoonAs, withinNOf).",
        )
        nested = []
        for s, p, o in links:
            subject_event = event_ids.get(s.strip())
            predicate = mint_predicate(p)
            if subject_event is None or predicate is None:
                log.warning("Clause %s: dropping nested link %r", self.clause.id, [s, p, o])
                continue
            if o.strip() in constraint_ids:
                self._annotate(predicate, CKG.hasConstraint)
                nested.append(
                    Triple(QuotedTriple(subject_event), predicate, constraint_ids[o.strip()])
                )
                continue
            object_event = event_ids.get(o.strip())
            if object_event is None:
                log.warning("Clause %s: dropping nested link %r", self.clause.id, [s, p, o])
                continue
            if predicate == CKG.hasContractualRelation:
                log.warning(
                    "Clause %s: %s is abstract; dropping link %r",
                    self.clause.id,
                    predicate,
                    [s, p, o],
                )
                continue
            local = predicate.local_name.lower()
            root = (
                CKG.temporalRelation
                if local.startswith(_TEMPORAL_PREFIXES)
                else CKG.hasContractualRelation
            )
            self._annotate(predicate, root)
            nested.append(
                Triple(QuotedTriple(subject_event), predicate, QuotedTriple(object_event))
            )
        return nested

    def run(self) -> ClauseGraph:
        actors, objects = self.actors_and_objects()
        if not actors and not objects:
            raise EmptyExtraction(
                "No contract actor or object recognised in clause %s" % self.clause.id
            )
        events = self.events(actors, objects)
        property_events = self.properties(objects)
        constraints = self.constraints()
        all_events = []
        for event in events + property_events:
            if event not in all_events:
                all_events.append(event)
        nested = self.nested(all_events, constraints) if all_events else []

        quoted: Set[Triple] = set()
        for triple in nested:
            for term in (triple.subject, triple.object):
                if isinstance(term, QuotedTriple):
                    quoted.add(term.inner)
        # Events without a nested link are asserted as plain facts.
        for event in events:
            if event not in quoted:
                self.graph.add(event, ExtractionStep.EVENT_LINK)
        for event in property_events:
            if event not in quoted:
                self.graph.add(event, ExtractionStep.PROPERTY)
        for triple in nested:
            self.graph.add(triple, ExtractionStep.NESTED_LINK)
        return self.graph


def extract_clause(
    clause: Clause,
    onto: OntologyModel,
    gateway: Gateway,
    aliases: Optional[Mapping[str, str]] = None,
) -> StagedExtraction:
    graph = _Extractor(clause, onto, gateway, aliases).run()
    log.debug(
        "Extracted clause %s: %d triples, %d nested",
        clause.id,
        len(graph.triples),
        len(graph.nested),
    )
    return StagedExtraction(clause, graph)


STAGING_PREFIXES = {
    "ckg": const.CKG_NS,
    "rdf": const.RDF_NS,
    "rdfs": const.RDFS_NS,
}


def dumps_staging(staged: StagedExtraction) -> str:
    clause, graph = staged.clause, staged.graph
    lines = [
        "# clause: %s" % json.dumps(clause.id, ensure_ascii=False),
        "# source: %s" % clause.source.value,
        "# section: %s" % json.dumps(clause.section, ensure_ascii=False),
        "# text: %s" % json.dumps(clause.text, ensure_ascii=False),
        "# status: %s" % staged.status.value,
        "# note: %s" % json.dumps(staged.reviewer_note, ensure_ascii=False),
    ]
    for iri, cls in graph.entity_types.items():
        lines.append(
            "# type: %s %s"
            % (format_term(iri, STAGING_PREFIXES), format_term(cls, STAGING_PREFIXES))
        )
    for span, iri in graph.minting.items():
        lines.append(
            "# mint: %s -> %s"
            % (json.dumps(span, ensure_ascii=False), format_term(iri, STAGING_PREFIXES))
        )
    out = "\n".join(lines) + "\n\n" + prefix_block(STAGING_PREFIXES)
    current = None
    for triple in graph.triples:
        step = graph.provenance.get(triple, ExtractionStep.MANUAL)
        if step is not current:
            out += "\n# step: %s\n" % step.value
            current = step
        out += format_triple(triple, STAGING_PREFIXES) + "\n"
    return out


def write_staging(staged: StagedExtraction, path: str) -> None:
    utils.atomic_write(path, dumps_staging(staged))


def _resolve_name(text: str, prefixes: Mapping[str, str]) -> Iri:
    text = text.strip()
    if text.startswith("<") and text.endswith(">"):
        return Iri(text[1:-1])
    prefix, sep, local = text.partition(":")
    if not sep or prefix not in prefixes:
        raise ValueError("Cannot resolve %r" % text)
    return Iri(prefixes[prefix] + local)


def loads_staging(text: str, source: Optional[str] = None) -> StagedExtraction:
    doc: Document = parse(text, source=source)
    header: Dict[str, str] = {}
    types: List[str] = []
    mints: List[str] = []
    steps: List[Tuple[int, ExtractionStep]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _HEADER_RE.match(line.strip())
        if not m:
            continue
        key, value = m.group("key"), m.group("value").strip()
        if key == "type":
            types.append(value)
        elif key == "mint":
            mints.append(value)
        elif key == "step":
            try:
                steps.append((lineno, ExtractionStep(value)))
            except ValueError:
                raise StatusMissing("%s:%d: unknown step %r" % (source, lineno, value))
        else:
            header.setdefault(key, value)

    if "status" not in header:
        raise StatusMissing("Staging file %s has no '# status:' header" % (source or ""))
    try:
        status = ExtractionStatus(header["status"].capitalize())
    except ValueError:
        raise StatusMissing(
            "Staging file %s has an unknown status %r" % (source or "", header["status"])
        ) from None

    def _text(key: str, default: str = "") -> str:
        value = header.get(key)
        if value is None:
            return default
        try:
            decoded = json.loads(value)
            return decoded if isinstance(decoded, str) else value
        except ValueError:
            return value

    try:
        clause = Clause(
            id=_text("clause"),
            source=ClauseSource.parse(header.get("source", "Other")),
            section=_text("section"),
            text=_text("text"),
        )
        prefixes = dict(STAGING_PREFIXES)
        prefixes.update(doc.prefixes)
        graph = ClauseGraph(clause.id)
        for value in types:
            iri_text, cls_text = value.split()
            graph.entity_types[_resolve_name(iri_text, prefixes)] = _resolve_name(
                cls_text, prefixes
            )
        for value in mints:
            m = _MINT_RE.match(value)
            if not m:
                raise ValueError("Malformed mint line %r" % value)
            graph.minting[json.loads(m.group("span"))] = _resolve_name(
                m.group("iri"), prefixes
            )
    except (ValueError, InvalidTerm) as e:
        raise StatusMissing("Invalid staging header in %s: %s" % (source or "", e)) from e

    for triple, line in zip(doc.triples, doc.lines):
        step = ExtractionStep.MANUAL
        for marker_line, marker_step in steps:
            if marker_line < line:
                step = marker_step
        graph.add(triple, step)
    return StagedExtraction(clause, graph, status, _text("note"))


def read_staging(path: str) -> StagedExtraction:
    with open(path, encoding="utf-8") as f:
        return loads_staging(f.read(), source=path)


def commit(
    staged: StagedExtraction, store: GraphStore, onto: Optional[OntologyModel] = None
) -> CommitDelta:
    """Merge an approved extraction into ``store``.

    Every triple is checked before the first insert, so a rejected triple
    leaves the store untouched.
    """
    if staged.status is not ExtractionStatus.APPROVED:
        raise NotApproved(
            "Clause %s is %s, not Approved" % (staged.clause.id, staged.status.value)
        )
    graph = staged.graph
    pending = list(graph.triples)
    for iri, cls in graph.entity_types.items():
        if onto is not None and onto.classes and cls not in onto.classes:
            log.warning("Clause %s: %s is not an ontology class", graph.clause_id, cls)
        typed = store.match(TriplePattern(iri, RDF.type, None))
        if not typed and not any(
            t.subject == iri and t.predicate == RDF.type for t in pending
        ):
            pending.append(Triple(iri, RDF.type, cls))
    for triple in pending:
        check_triple(triple, store.max_depth)

    added = nested = 0
    for triple in pending:
        if store.insert(triple):
            added += 1
            if is_nested(triple):
                nested += 1
    log.debug("Committed clause %s: %d added, %d nested", graph.clause_id, added, nested)
    return CommitDelta(added, nested)


@dataclass
class SourceRow(object):
    clauses: int = 0
    triples: int = 0
    nested: int = 0


@dataclass
class IngestSummary(object):
    rows: Dict[str, SourceRow] = field(default_factory=dict)
    staged: List[str] = field(default_factory=list)
    # (clause id or "line N", message)
    failures: List[Tuple[str, str]] = field(default_factory=list)

    def record(self, staged: StagedExtraction) -> None:
        row = self.rows.setdefault(staged.clause.source.value, SourceRow())
        row.clauses += 1
        row.triples += len(staged.graph.triples)
        row.nested += len(staged.graph.nested)

    @property
    def total(self) -> SourceRow:
        return SourceRow(
            clauses=sum(r.clauses for r in self.rows.values()),
            triples=sum(r.triples for r in self.rows.values()),
            nested=sum(r.nested for r in self.rows.values()),
        )

    def to_markdown(self) -> str:
        lines = [
            "| Source | Clauses | Triples | Nested triples |",
            "|---|---:|---:|---:|",
        ]
        order = [s.value for s in ClauseSource]
        for source in sorted(self.rows, key=order.index):
            row = self.rows[source]
            lines.append("| %s | %d | %d | %d |" % (source, row.clauses, row.triples, row.nested))
        total = self.total
        lines.append(
            "| Total | %d | %d | %d |" % (total.clauses, total.triples, total.nested)
        )
        return "\n".join(lines) + "\n"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sources": {
                k: {"clauses": v.clauses, "triples": v.triples, "nested": v.nested}
                for k, v in sorted(self.rows.items())
            },
            "staged": list(self.staged),
            "failures": [{"id": i, "error": m} for i, m in self.failures],
        }


def staging_filename(clause_id: str) -> str:
    return utils.safe_filename(clause_id) + const.STAGING_SUFFIX


def ingest_corpus(
    jsonl_path: str,
    onto: OntologyModel,
    gateway: Gateway,
    staging_dir: str,
    aliases: Optional[Mapping[str, str]] = None,
) -> IngestSummary:
    """Extract every clause of a JSONL corpus into its own staging file.

    A failing clause (or malformed line) is recorded and the batch goes on.
    So is a clause whose id maps to the staging file of an earlier id.
    """
    summary = IngestSummary()
    clauses: List[Clause] = []
    seen: Set[str] = set()
    # staging file name -> clause id
    owners: Dict[str, str] = {}
    for lineno, record in utils.iter_jsonl(jsonl_path):
        if isinstance(record, Exception):
            summary.failures.append(("line %d" % lineno, str(record)))
            continue
        try:
            clause = Clause.from_dict(record)
        except ValueError as e:
            summary.failures.append(("line %d" % lineno, str(e)))
            continue
        owner = owners.setdefault(staging_filename(clause.id), clause.id)
        if owner == clause.id and clause.id in seen:
            summary.failures.append((clause.id, "duplicate clause id"))
            continue
        if owner != clause.id:
            summary.failures.append(
                (clause.id, "staging file name clashes with clause %r" % owner)
            )
            continue
        seen.add(clause.id)
        clauses.append(clause)

    os.makedirs(staging_dir, exist_ok=True)
    with concurrent.futures.ThreadPoolExecutor(
        max_workers=gateway.config.max_in_flight
    ) as executor:
        futures = [
            executor.submit(extract_clause, clause, onto, gateway, aliases)
            for clause in clauses
        ]
        for clause, future in zip(clauses, futures):
            try:
                staged = future.result()
            except NckgError as e:
                log.error("Clause %s failed: %s", clause.id, e)
                summary.failures.append((clause.id, str(e)))
                continue
            path = os.path.join(staging_dir, staging_filename(clause.id))
            write_staging(staged, path)
            summary.staged.append(path)
            summary.record(staged)
    return summary
