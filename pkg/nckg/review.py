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
"""Graph-retrieval clause review and the two comparison pipelines.

``nckg`` mode extracts two terms from the clause, maps them onto entities
and events of the store, pulls their context and risk categories with the
retrieval queries and asks the model for a verdict. ``vector`` mode hands the
model the most similar standard provision instead, and ``llm-only`` mode sends
the clause alone.
"""

import concurrent.futures
import enum
import logging
import os
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Set, Tuple, Union

from nckg import const, utils
from nckg.client import Gateway
from nckg.construct import Clause
from nckg.exceptions import EmptyRetrieval, NckgError, VerdictParseFailure
from nckg.lexical import DocKind, LexicalIndex, Match
from nckg.ontology import (
    OntologyModel,
    risk_categories_for,
    RiskCategory,
    RiskType,
)
from nckg.prompts import parse_term_list, PromptTemplate
from nckg.query import context_triples, QueryTemplate, risk_objects, run_template
from nckg.store import GraphStore
from nckg.terms import Iri, iter_quoted, n3, QuotedTriple, Term, Triple
from nckg.turtle import format_term, format_triple

__all__ = [
    "ReviewMode",
    "RetrievalBundle",
    "Assessment",
    "RiskVerdict",
    "ReviewContext",
    "ReviewFailure",
    "ReviewSummary",
    "retrieve",
    "review",
    "parse_verdict",
    "review_corpus",
]

log = logging.getLogger(__name__)

_TYPE_PATTERN = r"no\s+risks?|unbalanced\s+obligations?|ambiguity|ambiguous"
# One assessment per line, at line start after an optional list marker
assessment_regex = re.compile(
    r"^\s*(?:(?:[-*•]|\d+[.)])\s*)?\**\[?\s*(?P<label>[A-Za-z][\w&/]*)\s*\]?\**"
    r"\s*-{1,2}\s*"
    r"\**\[?\s*(?P<type>%s)\b\s*\]?\**(?P<rest>.*)$" % _TYPE_PATTERN,
    re.IGNORECASE | re.MULTILINE,
)
summary_regex = re.compile(r"risk\s+summary\s*\**\s*[:：]?\s*\**", re.IGNORECASE)
_LIST_MARKER_RE = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*")
_PUNCTUATION_RE = re.compile(r"^[\W_]*$")


class ReviewMode(enum.Enum):
    NCKG = "nckg"
    VECTOR = "vector"
    LLM_ONLY = "llm-only"


def _match_label(match: Match, prefixes: Mapping[str, str]) -> str:
    if isinstance(match.source, (Iri, QuotedTriple)):
        return format_term(match.source, prefixes)
    return match.id


@dataclass
class RetrievalBundle(object):
    clause_id: str
    extracted_terms: List[str]
    entity_matches: Dict[str, List[Match]] = field(default_factory=dict)
    event_matches: Dict[str, List[Match]] = field(default_factory=dict)
    retrieved_triples: List[Triple] = field(default_factory=list)
    retrieved_risk_categories: Set[RiskCategory] = field(default_factory=set)

    @property
    def categories(self) -> List[RiskCategory]:
        order = list(RiskCategory)
        return sorted(self.retrieved_risk_categories, key=order.index)

    def prompt_triples(self, prefixes: Mapping[str, str]) -> str:
        """The retrieved context as Turtle-star statements."""
        return "\n".join(format_triple(t, prefixes) for t in self.retrieved_triples)

    def prompt_categories(self) -> str:
        return ", ".join(c.value for c in self.categories)

    def to_dict(self, prefixes: Mapping[str, str]) -> Dict[str, Any]:
        def matches(found: Dict[str, List[Match]]) -> Dict[str, Any]:
            return {
                term: [
                    {"id": _match_label(m, prefixes), "score": round(m.score, 6)}
                    for m in found.get(term, [])
                ]
                for term in self.extracted_terms
            }

        return {
            "clause_id": self.clause_id,
            "extracted_terms": list(self.extracted_terms),
            "entity_matches": matches(self.entity_matches),
            "event_matches": matches(self.event_matches),
            "retrieved_triples": [
                format_triple(t, prefixes) for t in self.retrieved_triples
            ],
            "retrieved_risk_categories": [c.value for c in self.categories],
        }


@dataclass(frozen=True)
class Assessment(object):
    # A RiskCategory, or the label as printed when it names none
    category: Union[RiskCategory, str]
    risk_type: RiskType

    @property
    def label(self) -> str:
        if isinstance(self.category, RiskCategory):
            return self.category.value
        return self.category

    @property
    def is_known(self) -> bool:
        return isinstance(self.category, RiskCategory)

    def to_dict(self) -> Dict[str, str]:
        return {"category": self.label, "risk_type": self.risk_type.value}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Assessment":
        label = str(data.get("category", ""))
        risk_type = RiskType.from_label(str(data.get("risk_type", "")))
        if not label or risk_type is None:
            raise ValueError("Invalid assessment: %r" % dict(data))
        return cls(RiskCategory.from_label(label) or label, risk_type)


@dataclass
class RiskVerdict(object):
    clause_id: str
    mode: ReviewMode
    assessments: List[Assessment]
    summary: str = ""
    raw_response: str = ""
    # Set when the requested mode could not run and llm-only answered
    degraded_from: Optional[ReviewMode] = None

    @property
    def categories(self) -> Set[RiskCategory]:
        return {
            a.category for a in self.assessments if isinstance(a.category, RiskCategory)
        }

    @property
    def unknown_labels(self) -> List[str]:
        return [a.label for a in self.assessments if not a.is_known]

    def to_dict(self) -> Dict[str, Any]:
        return utils.remove_none_from_dict(
            {
                "clause_id": self.clause_id,
                "mode": self.mode.value,
                "assessments": [a.to_dict() for a in self.assessments],
                "summary": self.summary,
                "raw_response": self.raw_response,
                "degraded_from": self.degraded_from.value
                if self.degraded_from
                else None,
            }
        )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RiskVerdict":
        try:
            degraded = data.get("degraded_from")
            return cls(
                clause_id=str(data["clause_id"]),
                mode=ReviewMode(data["mode"]),
                assessments=[Assessment.from_dict(a) for a in data["assessments"]],
                summary=str(data.get("summary", "")),
                raw_response=str(data.get("raw_response", "")),
                degraded_from=ReviewMode(degraded) if degraded else None,
            )
        except (KeyError, TypeError) as e:
            raise ValueError("Invalid verdict record: %s" % e) from e


def _risk_type(text: str) -> RiskType:
    words = " ".join(text.lower().split())
    if words.startswith("no risk"):
        return RiskType.NO_RISK
    if words.startswith("ambigu"):
        return RiskType.AMBIGUITY
    return RiskType.UNBALANCED_OBLIGATION


def _assessment(line: str) -> Optional[Tuple[str, Optional[RiskCategory], RiskType]]:
    m = assessment_regex.match(line)
    if m is None:
        return None
    category = RiskCategory.from_label(m.group("label"))
    # Prose such as "Non-ambiguous wording" belongs to the summary
    if category is None and not _PUNCTUATION_RE.match(m.group("rest")):
        return None
    return m.group("label"), category, _risk_type(m.group("type"))


def parse_verdict(text: str) -> Tuple[List[Assessment], str]:
    """Read ``<label>-<risk type>`` assessments and the summary from a reply.

    Both ``-`` and ``--`` separate label and type, optionally bracketed. An
    assessment starts its line, after an optional list marker. An unknown
    label counts only when nothing but punctuation follows the risk type.
    The first assessment of a category wins. The summary is the text after a
    ``Risk Summary`` marker, or else the lines holding no assessment.

    Raises:
        VerdictParseFailure: If the reply holds no assessment
    """
    marker = summary_regex.search(text)
    if marker and not any(map(_assessment, text[: marker.start()].splitlines())):
        # Summary first, assessments after it
        body = text[marker.end() :]
        marker = None
    else:
        body = text[: marker.start()] if marker else text

    assessments: List[Assessment] = []
    seen: Set[str] = set()
    prose: List[str] = []
    for line in body.splitlines():
        found = _assessment(line)
        if found is None:
            line = _LIST_MARKER_RE.sub("", line).strip()
            if line:
                prose.append(line)
            continue
        label, category, risk_type = found
        key = category.value if category else label.lower()
        if key in seen:
            continue
        seen.add(key)
        if category is None:
            log.warning("Unknown risk label in verdict: %s", label)
        assessments.append(Assessment(category or label, risk_type))

    if not assessments:
        raise VerdictParseFailure(
            "No risk assessment found in model reply", raw_response=text
        )
    if marker:
        summary = " ".join(text[marker.end() :].split())
    else:
        summary = " ".join(" ".join(prose).split())
    return assessments, summary


def _anchor_order(bundle: RetrievalBundle) -> List[Term]:
    anchors: List[Term] = []
    seen: Set[str] = set()
    for term in bundle.extracted_terms:
        for match in bundle.entity_matches[term] + bundle.event_matches[term]:
            if match.id in seen:
                continue
            seen.add(match.id)
            anchors.append(match.source)  # type: ignore
    return anchors


def retrieve(
    clause: Clause,
    store: GraphStore,
    index: LexicalIndex,
    onto: Optional[OntologyModel],
    gateway: Gateway,
    top_k: int = const.DEFAULT_TOP_K,
    include_ontology_risks: bool = False,
) -> RetrievalBundle:
    """Collect graph context and candidate risk categories for ``clause``.

    Raises:
        EmptyRetrieval: If no extracted term matches anything in the index
    """
    reply = gateway.ask(PromptTemplate.TERM_EXTRACT, {"clause": clause.text})
    bundle = RetrievalBundle(clause.id, parse_term_list(reply))

    for term in bundle.extracted_terms:
        bundle.entity_matches[term] = index.top_k(term, top_k, DocKind.ENTITY)
        bundle.event_matches[term] = index.top_k(term, top_k, DocKind.EVENT)
    anchors = _anchor_order(bundle)
    if not anchors:
        raise EmptyRetrieval(
            "No entity or event matches %s" % ", ".join(bundle.extracted_terms)
        )

    seen: Set[Triple] = set()
    for anchor in anchors:
        template = (
            QueryTemplate.EVENT_CONTEXT
            if isinstance(anchor, QuotedTriple)
            else QueryTemplate.ENTITY_CONTEXT
        )
        for triple in context_triples(run_template(store, template, anchor), anchor):
            if triple not in seen:
                seen.add(triple)
                bundle.retrieved_triples.append(triple)

    events: Dict[str, QuotedTriple] = {}
    for triple in bundle.retrieved_triples:
        for position in (triple.subject, triple.object, triple.quoted()):
            for event in iter_quoted(position):
                events.setdefault(n3(event), event)
    for key in sorted(events):
        for obj in risk_objects(store, events[key]):
            category = RiskCategory.from_iri(obj)
            if category is not None:
                bundle.retrieved_risk_categories.add(category)
            else:
                log.warning("Ignoring unknown risk category %s", obj)
        if include_ontology_risks and onto is not None:
            bundle.retrieved_risk_categories |= risk_categories_for(
                events[key], store, onto
            )
    log.debug(
        "Clause %s: %d anchors, %d triples, categories %s",
        clause.id,
        len(anchors),
        len(bundle.retrieved_triples),
        bundle.prompt_categories(),
    )
    return bundle


@dataclass
class ReviewContext(object):
    """What a review needs besides the clause.

    ``store`` and ``index`` serve ``nckg`` mode; ``catalog`` and
    ``catalog_index`` (standard provisions) serve ``vector`` mode.
    """

    gateway: Gateway
    store: Optional[GraphStore] = None
    index: Optional[LexicalIndex] = None
    onto: Optional[OntologyModel] = None
    catalog: Dict[str, str] = field(default_factory=dict)
    catalog_index: Optional[LexicalIndex] = None
    top_k: int = const.DEFAULT_TOP_K
    include_ontology_risks: bool = False
    # Last bundle per clause id, for dumps
    bundles: Dict[str, RetrievalBundle] = field(default_factory=dict)

    @property
    def prefixes(self) -> Mapping[str, str]:
        if self.store is not None:
            return self.store.prefixes
        return const.DEFAULT_PREFIXES

    def check(self, mode: ReviewMode) -> None:
        if mode is ReviewMode.NCKG and (self.store is None or self.index is None):
            raise ValueError("nckg mode needs a store and its lexical index")
        if mode is ReviewMode.VECTOR and self.catalog_index is None:
            raise ValueError("vector mode needs a standard-provision catalog")


def _verdict(
    clause: Clause,
    mode: ReviewMode,
    reply: str,
    degraded_from: Optional[ReviewMode] = None,
) -> RiskVerdict:
    assessments, summary = parse_verdict(reply)
    if utils.word_count(summary) > const.SUMMARY_WORD_LIMIT:
        log.warning(
            "Summary for clause %s has %d words (limit %d)",
            clause.id,
            utils.word_count(summary),
            const.SUMMARY_WORD_LIMIT,
        )
    return RiskVerdict(clause.id, mode, assessments, summary, reply, degraded_from)


def _review_llm_only(
    clause: Clause, ctx: ReviewContext, degraded_from: Optional[ReviewMode] = None
) -> RiskVerdict:
    reply = ctx.gateway.ask(PromptTemplate.BASELINE_LLM_ONLY, {"clause": clause.text})
    return _verdict(clause, ReviewMode.LLM_ONLY, reply, degraded_from)


def _review_nckg(clause: Clause, ctx: ReviewContext) -> RiskVerdict:
    try:
        bundle = retrieve(
            clause,
            ctx.store,  # type: ignore
            ctx.index,  # type: ignore
            ctx.onto,
            ctx.gateway,
            ctx.top_k,
            ctx.include_ontology_risks,
        )
    except EmptyRetrieval as e:
        log.warning("Clause %s: %s; reviewing without graph context", clause.id, e)
        return _review_llm_only(clause, ctx, ReviewMode.NCKG)
    ctx.bundles[clause.id] = bundle
    reply = ctx.gateway.ask(
        PromptTemplate.REVIEW,
        {
            "input_clause": clause.text,
            "retrieved_triple": bundle.prompt_triples(ctx.prefixes),
            "retrieved_risk_category": bundle.prompt_categories(),
        },
    )
    return _verdict(clause, ReviewMode.NCKG, reply)


def nearest_provision(clause: Clause, ctx: ReviewContext) -> Optional[Match]:
    """The standard provision most similar to ``clause``, if any scores above 0."""
    found = ctx.catalog_index.top_k(clause.text, 1, DocKind.CLAUSE)  # type: ignore
    return found[0] if found else None


def _review_vector(clause: Clause, ctx: ReviewContext) -> RiskVerdict:
    match = nearest_provision(clause, ctx)
    if match is None:
        log.warning(
            "Clause %s: no similar standard provision; reviewing the clause alone",
            clause.id,
        )
        return _review_llm_only(clause, ctx, ReviewMode.VECTOR)
    reply = ctx.gateway.ask(
        PromptTemplate.BASELINE_VECTOR,
        {"clause": clause.text, "standard_provision": ctx.catalog[match.id]},
    )
    return _verdict(clause, ReviewMode.VECTOR, reply)


def review(clause: Clause, mode: ReviewMode, ctx: ReviewContext) -> RiskVerdict:
    """Review one clause in ``mode``.

    Raises:
        GatewayError: If the model cannot be reached
        VerdictParseFailure: If the reply holds no assessment
    """
    ctx.check(mode)
    if mode is ReviewMode.NCKG:
        return _review_nckg(clause, ctx)
    if mode is ReviewMode.VECTOR:
        return _review_vector(clause, ctx)
    return _review_llm_only(clause, ctx)


@dataclass
class ReviewFailure(object):
    clause_id: str
    message: str
    # Model reply that could not be read, if any
    raw_response: Optional[str] = None

    @classmethod
    def from_error(cls, clause_id: str, error: NckgError) -> "ReviewFailure":
        raw = error.raw_response if isinstance(error, VerdictParseFailure) else None
        return cls(clause_id, str(error), raw)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"clause_id": self.clause_id, "error": self.message}
        if self.raw_response is not None:
            data["raw_response"] = self.raw_response
        return data


@dataclass
class ReviewSummary(object):
    verdicts: List[RiskVerdict] = field(default_factory=list)
    failures: List[ReviewFailure] = field(default_factory=list)

    @property
    def total_failure(self) -> bool:
        return not self.verdicts and bool(self.failures)


def _filename_clashes(clauses: List[Clause]) -> Dict[str, str]:
    """Map each clause id whose file name is taken by an earlier id to that id."""
    owners: Dict[str, str] = {}
    clashes: Dict[str, str] = {}
    for clause in clauses:
        owner = owners.setdefault(utils.safe_filename(clause.id), clause.id)
        if owner != clause.id:
            clashes[clause.id] = owner
    return clashes


def review_corpus(
    clauses: List[Clause],
    mode: ReviewMode,
    ctx: ReviewContext,
    output_dir: Optional[str] = None,
) -> ReviewSummary:
    """Review clauses in parallel, keeping input order in the result.

    A clause whose id maps to the same file name as an earlier, different id
    is not reviewed and counts as a failure.

    With ``output_dir``, verdicts go to ``verdicts.jsonl``, failures to
    ``failures.jsonl`` and each retrieval bundle to ``bundles/<clause>.json``.
    """
    ctx.check(mode)
    summary = ReviewSummary()
    clashes = _filename_clashes(clauses)
    with concurrent.futures.ThreadPoolExecutor(
        max_workers=ctx.gateway.config.max_in_flight
    ) as executor:
        futures = [
            None if clause.id in clashes else executor.submit(review, clause, mode, ctx)
            for clause in clauses
        ]
        for clause, future in zip(clauses, futures):
            if future is None:
                message = "Clause id %r clashes with %r as a file name" % (
                    clause.id,
                    clashes[clause.id],
                )
                log.error("Review of clause %s skipped: %s", clause.id, message)
                summary.failures.append(ReviewFailure(clause.id, message))
                continue
            try:
                summary.verdicts.append(future.result())
            except NckgError as e:
                log.error("Review of clause %s failed: %s", clause.id, e)
                summary.failures.append(ReviewFailure.from_error(clause.id, e))

    if output_dir is not None:
        for clause in clauses:
            bundle = ctx.bundles.get(clause.id)
            if bundle is None or clause.id in clashes:
                continue
            name = utils.safe_filename(clause.id) + ".json"
            utils.write_json(
                os.path.join(output_dir, "bundles", name), bundle.to_dict(ctx.prefixes)
            )
        utils.write_jsonl(
            os.path.join(output_dir, "verdicts.jsonl"),
            [v.to_dict() for v in summary.verdicts],
        )
        utils.write_jsonl(
            os.path.join(output_dir, "failures.jsonl"),
            [f.to_dict() for f in summary.failures],
        )
    return summary
