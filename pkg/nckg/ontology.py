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
"""Ontology layer: class hierarchy, relation taxonomy and risk links.

The ontology is an ordinary Turtle-star document. Classes are declared with
``rdf:type rdfs:Class`` or ``rdfs:subClassOf``; relation kinds with
``rdf:type ckg:E2ERelation`` (``E2EvtRelation``, ``Evt2EvtRelation``) and
``rdfs:subPropertyOf``; risk links with ``ckg:hasRiskCategory`` (or its alias
``ckg:hasRiskLabel``) from a class to a risk-category IRI.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Set,
)

from nckg import const
from nckg.exceptions import (
    CyclicHierarchy,
    NckgError,
    OntologyError,
    UnknownUpperClass,
)
from nckg.store import GraphStore
from nckg.terms import (
    check_triple,
    CKG,
    classify_kind,
    iter_quoted,
    Iri,
    QuotedTriple,
    RDF,
    RDFS,
    Term,
    Triple,
    TripleKind,
    TriplePattern,
)
from nckg.turtle import Document, parse_file

__all__ = [
    "RiskCategory",
    "RiskType",
    "Severity",
    "Diagnostic",
    "OntologyModel",
    "load_ontology",
    "load_default_ontology",
    "classes_of",
    "risk_categories_for",
    "validate",
    "validate_triples",
]

log = logging.getLogger(__name__)


class RiskCategory(enum.Enum):
    ASSIGNMENT = "Assignment"
    PAYMENT = "Payment"
    TEMPORAL = "Temporal"
    FINANCIAL = "Financial"
    DSC = "DSC"
    LIABILITY = "Liability"

    @property
    def iri(self) -> Iri:
        return CKG[self.value]

    @classmethod
    def from_label(cls, label: str) -> Optional["RiskCategory"]:
        wanted = label.strip().lower()
        for category in cls:
            if category.value.lower() == wanted:
                return category
        return None

    @classmethod
    def from_iri(cls, iri: Term) -> Optional["RiskCategory"]:
        if isinstance(iri, Iri) and iri in CKG:
            return cls.from_label(iri.local_name)
        return None


class RiskType(enum.Enum):
    AMBIGUITY = "Ambiguity"
    UNBALANCED_OBLIGATION = "Unbalanced Obligation"
    NO_RISK = "No risk"

    @classmethod
    def from_label(cls, label: str) -> Optional["RiskType"]:
        wanted = " ".join(label.lower().split())
        if wanted.endswith("obligations"):
            wanted = wanted[:-1]
        for risk_type in cls:
            if risk_type.value.lower() == wanted:
                return risk_type
        return None


class Severity(enum.Enum):
    WARNING = "warning"
    ERROR = "error"


@dataclass(frozen=True)
class Diagnostic(object):
    severity: Severity
    subject: Term
    message: str

    def __str__(self) -> str:
        return "%s: %s: %s" % (self.severity.value, self.subject, self.message)


RISK_PREDICATES = (CKG.hasRiskCategory, CKG.hasRiskLabel)
_KIND_CLASSES = {
    CKG[const.E2E_RELATION]: TripleKind.E2E,
    CKG[const.E2EVT_RELATION]: TripleKind.E2EVT,
    CKG[const.EVT2EVT_RELATION]: TripleKind.EVT2EVT,
}
# Predicates that may link anything to an event without a family check.
_FAMILY_EXEMPT = frozenset([RDF.type, CKG.hasRiskCategory, CKG.hasRiskLabel])


@dataclass(frozen=True)
class OntologyModel(object):
    """Immutable view of the ontology layer.

    ``subclass_of`` is a forest (one parent per class) and must be acyclic.
    ``subproperty_of`` may list several parents per property.
    """

    classes: FrozenSet[Iri] = frozenset()
    subclass_of: Mapping[Iri, Iri] = field(default_factory=dict)
    subproperty_of: Mapping[Iri, FrozenSet[Iri]] = field(default_factory=dict)
    relation_taxonomy: Mapping[Iri, TripleKind] = field(default_factory=dict)
    risk_map: Mapping[Iri, FrozenSet[RiskCategory]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for start in self.subclass_of:
            seen = {start}
            current = self.subclass_of.get(start)
            while current is not None:
                if current in seen:
                    raise CyclicHierarchy(
                        "Cycle in class hierarchy through %s" % current
                    )
                seen.add(current)
                current = self.subclass_of.get(current)
        for cls in self.risk_map:
            if cls not in self.classes:
                raise OntologyError("Risk link on undeclared class %s" % cls)

    def ancestors(self, cls: Iri) -> List[Iri]:
        """``cls`` followed by its superclasses, nearest first."""
        chain = [cls]
        current = self.subclass_of.get(cls)
        while current is not None:
            chain.append(current)
            current = self.subclass_of.get(current)
        return chain

    def is_subclass(self, cls: Iri, ancestor: Iri) -> bool:
        return ancestor in self.ancestors(cls)

    def closure(self, types: Iterable[Iri]) -> Set[Iri]:
        closed: Set[Iri] = set()
        for cls in types:
            closed.update(self.ancestors(cls))
        return closed

    def super_properties(
        self, predicate: Iri, extra: Optional[Mapping[Iri, Set[Iri]]] = None
    ) -> Set[Iri]:
        """``predicate`` and every property above it."""
        found = {predicate}
        todo = [predicate]
        while todo:
            current = todo.pop()
            parents = set(self.subproperty_of.get(current, ()))
            if extra:
                parents.update(extra.get(current, ()))
            for parent in parents - found:
                found.add(parent)
                todo.append(parent)
        return found

    def relation_kind(self, predicate: Iri) -> Optional[TripleKind]:
        for prop in sorted(self.super_properties(predicate), key=lambda i: i.value):
            if prop in self.relation_taxonomy:
                return self.relation_taxonomy[prop]
        return None

    def in_family(
        self,
        predicate: Iri,
        root: Iri,
        extra: Optional[Mapping[Iri, Set[Iri]]] = None,
    ) -> bool:
        return root in self.super_properties(predicate, extra)

    @property
    def risk_iris(self) -> FrozenSet[Iri]:
        return frozenset(c.iri for c in RiskCategory)


def load_ontology(doc: Document) -> OntologyModel:
    classes: Set[Iri] = set()
    subclass_of: Dict[Iri, Iri] = {}
    subproperty_of: Dict[Iri, Set[Iri]] = {}
    declared_kinds: Dict[Iri, TripleKind] = {}
    risk_links: Dict[Iri, Set[RiskCategory]] = {}

    for triple in doc.triples:
        s, p, o = triple
        if not isinstance(s, Iri):
            continue
        if p == RDF.type and o == RDFS.Class:
            classes.add(s)
        elif p == RDFS.subClassOf and isinstance(o, Iri):
            classes.update((s, o))
            if s in subclass_of and subclass_of[s] != o:
                raise OntologyError(
                    "%s has more than one superclass (%s, %s)" % (s, subclass_of[s], o)
                )
            subclass_of[s] = o
        elif p == RDFS.subPropertyOf and isinstance(o, Iri):
            subproperty_of.setdefault(s, set()).add(o)
        elif p == RDF.type and o in _KIND_CLASSES:
            declared_kinds[s] = _KIND_CLASSES[o]  # type: ignore
        elif p in RISK_PREDICATES:
            category = RiskCategory.from_iri(o)
            if category is None:
                raise OntologyError("Unknown risk category %s on %s" % (o, s))
            risk_links.setdefault(s, set()).add(category)

    model = OntologyModel(
        classes=frozenset(classes),
        subclass_of=subclass_of,
        subproperty_of={k: frozenset(v) for k, v in subproperty_of.items()},
        relation_taxonomy={},
        risk_map={k: frozenset(v) for k, v in risk_links.items()},
    )
    missing = [name for name in const.UPPER_CLASSES if CKG[name] not in classes]
    if missing:
        raise UnknownUpperClass("Missing upper classes: %s" % ", ".join(missing))

    # A property inherits the kind declared on its nearest ancestor.
    taxonomy: Dict[Iri, TripleKind] = dict(declared_kinds)
    for prop in subproperty_of:
        if prop in taxonomy:
            continue
        for ancestor in model.super_properties(prop):
            if ancestor in declared_kinds:
                taxonomy[prop] = declared_kinds[ancestor]
                break
    object.__setattr__(model, "relation_taxonomy", taxonomy)
    log.debug(
        "Loaded ontology: %d classes, %d relations, %d risk links",
        len(model.classes),
        len(taxonomy),
        len(model.risk_map),
    )
    return model


def load_default_ontology(path: Optional[str] = None) -> OntologyModel:
    return load_ontology(parse_file(path or const.DEFAULT_ONTOLOGY_PATH))


def _asserted_types(term: Term, store: GraphStore) -> List[Iri]:
    return [
        t.object
        for t in store.match(TriplePattern(term, RDF.type, None))
        if isinstance(t.object, Iri)
    ]


def classes_of(term: Term, store: GraphStore, onto: OntologyModel) -> Set[Iri]:
    """rdf:type assertions on ``term`` closed upward through the hierarchy."""
    return onto.closure(_asserted_types(term, store))


def risk_categories_for(
    term: Term, store: GraphStore, onto: OntologyModel
) -> Set[RiskCategory]:
    classes = classes_of(term, store, onto)
    if isinstance(term, QuotedTriple):
        classes |= classes_of(term.predicate, store, onto)
    found: Set[RiskCategory] = set()
    for cls in classes:
        found.update(onto.risk_map.get(cls, ()))
    return found


def _store_subproperties(store: GraphStore) -> Dict[Iri, Set[Iri]]:
    links: Dict[Iri, Set[Iri]] = {}
    for t in store.match(TriplePattern(None, RDFS.subPropertyOf, None)):
        if isinstance(t.subject, Iri) and isinstance(t.object, Iri):
            links.setdefault(t.subject, set()).add(t.object)
    return links


def validate_triples(
    triples: Iterable[Triple],
    store: GraphStore,
    onto: OntologyModel,
    max_depth: int = const.DEFAULT_MAX_DEPTH,
) -> List[Diagnostic]:
    """Shape checks over ``triples``; types are looked up in ``store``."""
    diagnostics: List[Diagnostic] = []
    extra = _store_subproperties(store)
    nested_roots = (CKG.hasConstraint, CKG.hasContractualRelation)
    events: Set[QuotedTriple] = set()
    checked: Set[Triple] = set()

    def check_shape(triple: Triple) -> None:
        if triple in checked:
            return
        checked.add(triple)
        if classify_kind(triple) is TripleKind.E2E:
            return
        if triple.predicate in _FAMILY_EXEMPT:
            return
        if not any(onto.in_family(triple.predicate, r, extra) for r in nested_roots):
            diagnostics.append(
                Diagnostic(
                    Severity.WARNING,
                    triple.subject,
                    "nested triple predicate %s is outside the constraint and"
                    " contractual-relation families" % triple.predicate,
                )
            )

    for triple in triples:
        try:
            check_triple(triple, max_depth)
        except NckgError as e:
            diagnostics.append(Diagnostic(Severity.ERROR, triple.subject, str(e)))
            continue
        check_shape(triple)
        for term in (triple.subject, triple.object):
            for quoted in iter_quoted(term):
                events.add(quoted)
                check_shape(quoted.inner)

    actor = CKG[const.CONTRACT_ACTOR]
    for event in sorted(events, key=str):
        subject = event.subject
        if not isinstance(subject, Iri):
            continue
        if onto.in_family(event.predicate, CKG.hasProperty, extra):
            continue
        if actor not in classes_of(subject, store, onto):
            diagnostics.append(
                Diagnostic(
                    Severity.WARNING,
                    event,
                    "event subject %s is not typed under %s" % (subject, actor),
                )
            )
    for diagnostic in diagnostics:
        log.info("%s", diagnostic)
    return diagnostics


def validate(store: GraphStore, onto: OntologyModel) -> List[Diagnostic]:
    return validate_triples(store.triples(), store, onto, store.max_depth)

