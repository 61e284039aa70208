import json
import os

import mock
import pytest
import requests

from nckg.client import Gateway, GatewayConfig, MockBackend
from nckg.construct import Clause, ClauseSource
from nckg.exceptions import EmptyRetrieval, VerdictParseFailure
from nckg.lexical import build_clause_index
from nckg.ontology import RiskCategory, RiskType
from nckg.review import (
    Assessment,
    parse_verdict,
    retrieve,
    review,
    review_corpus,
    ReviewContext,
    ReviewFailure,
    ReviewMode,
    RiskVerdict,
)
from nckg.store import GraphStore
from nckg.terms import CKG, n3, Triple, TriplePattern
from nckg.utils import read_jsonl

from .conftest import data_file

P, F, T, L, D = (
    RiskCategory.PAYMENT,
    RiskCategory.FINANCIAL,
    RiskCategory.TEMPORAL,
    RiskCategory.LIABILITY,
    RiskCategory.DSC,
)

make_payment = Triple(CKG.Employer, CKG.make, CKG.advancePayment).quoted()


@pytest.fixture
def ctx(review_gateway, seed_store, seed_index, onto):
    catalog = [Clause.from_dict(r) for r in read_jsonl(data_file("standard_provisions.jsonl"))]
    return ReviewContext(
        gateway=review_gateway,
        store=seed_store,
        index=seed_index,
        onto=onto,
        catalog={c.id: c.text for c in catalog},
        catalog_index=build_clause_index((c.id, c.text) for c in catalog),
        top_k=2,
    )


@pytest.fixture
def clauses(gold):
    return [g.clause for g in gold]


def test_parse_double_dash_verdict():
    assessments, summary = parse_verdict(
        "Payment--Unbalanced Obligation\nFinancial--Unbalanced Obligation\n"
        "Risk Summary: The commencement conditions are not defined."
    )
    assert assessments == [
        Assessment(P, RiskType.UNBALANCED_OBLIGATION),
        Assessment(F, RiskType.UNBALANCED_OBLIGATION),
    ]
    assert summary == "The commencement conditions are not defined."


def test_parse_bracketed_verdict_after_summary():
    assessments, summary = parse_verdict(
        "Risk Summary: The time for certifying payment is not defined.\n"
        "- [Payment]-[Ambiguity]"
    )
    assert assessments == [Assessment(P, RiskType.AMBIGUITY)]
    assert summary == "The time for certifying payment is not defined."


def test_parse_numbered_verdict_without_marker():
    assessments, summary = parse_verdict(
        "1. Liability - Unbalanced obligation\n"
        "The Project Company can waive conditions precedent alone."
    )
    assert assessments == [Assessment(L, RiskType.UNBALANCED_OBLIGATION)]
    assert summary == "The Project Company can waive conditions precedent alone."


def test_parse_verdict_keeps_first_assessment_per_category():
    assessments, _ = parse_verdict(
        "Payment-No risk\npayment-Ambiguity\nVariation-Unbalanced obligations"
    )
    assert assessments == [
        Assessment(P, RiskType.NO_RISK),
        Assessment("Variation", RiskType.UNBALANCED_OBLIGATION),
    ]
    assert not assessments[1].is_known


@pytest.mark.parametrize(
    "prose",
    [
        "The wording is non-ambiguous overall.",
        "Non-ambiguous wording is used throughout.",
        "Cost-unbalanced obligations are absent here.",
        "A self-ambiguity check found nothing.",
    ],
)
def test_parse_verdict_keeps_hyphenated_prose_in_summary(prose):
    assessments, summary = parse_verdict("Payment--Unbalanced Obligation\n" + prose)
    assert assessments == [Assessment(P, RiskType.UNBALANCED_OBLIGATION)]
    assert summary == prose


def test_parse_verdict_reads_markdown_list_items():
    assessments, summary = parse_verdict(
        "* **Payment**-Ambiguity\n- Temporal - No risk.\nRisk Summary: Dates are vague."
    )
    assert assessments == [
        Assessment(P, RiskType.AMBIGUITY),
        Assessment(T, RiskType.NO_RISK),
    ]
    assert summary == "Dates are vague."


def test_parse_verdict_without_assessment():
    with pytest.raises(VerdictParseFailure) as e:
        parse_verdict("The clause looks fine to me.")
    assert e.value.raw_response == "The clause looks fine to me."


def test_verdict_round_trip():
    verdict = RiskVerdict(
        "case-3",
        ReviewMode.LLM_ONLY,
        [Assessment(L, RiskType.UNBALANCED_OBLIGATION), Assessment("Variation", RiskType.NO_RISK)],
        "summary",
        "raw",
        ReviewMode.NCKG,
    )
    data = json.loads(json.dumps(verdict.to_dict()))
    assert data["degraded_from"] == "nckg"
    assert RiskVerdict.from_dict(data) == verdict
    with pytest.raises(ValueError):
        RiskVerdict.from_dict({"clause_id": "x"})


def test_retrieve_advance_payment(advance_payment_clause, seed_store, seed_index, onto, review_gateway):
    bundle = retrieve(advance_payment_clause, seed_store, seed_index, onto, review_gateway, 2)
    assert bundle.extracted_terms == ["commencement date", "advance payment"]
    assert [m.id for m in bundle.entity_matches["commencement date"]] == [
        n3(CKG.commencementDate),
        n3(CKG.commencement),
    ]
    assert bundle.event_matches["commencement date"] == []
    assert bundle.event_matches["advance payment"][0].source == make_payment
    assert bundle.retrieved_triples[0] == Triple(
        CKG.commencementDate, CKG.hasDefinition, CKG.dateOfEngineerNotice
    )
    assert len(bundle.retrieved_triples) == 5
    assert Triple(make_payment, CKG.hasRiskLabel, CKG.Payment) in bundle.retrieved_triples
    assert bundle.categories == [P, F]
    assert bundle.prompt_categories() == "Payment, Financial"


def test_retrieve_includes_ontology_risks(advance_payment_clause, seed_store, seed_index, onto, review_gateway):
    for triple in seed_store.match(TriplePattern(None, CKG.hasRiskLabel, None)):
        seed_store.remove(triple)
    plain = retrieve(advance_payment_clause, seed_store, seed_index, onto, review_gateway, 2)
    assert len(plain.retrieved_triples) == 4
    assert plain.retrieved_risk_categories == set()
    enriched = retrieve(
        advance_payment_clause, seed_store, seed_index, onto, review_gateway, 2, True
    )
    assert enriched.retrieved_triples == plain.retrieved_triples
    assert enriched.categories == [P, F]


def test_retrieve_without_matches(gold, seed_store, seed_index, onto, review_gateway):
    with pytest.raises(EmptyRetrieval):
        retrieve(gold[3].clause, seed_store, seed_index, onto, review_gateway, 2)


def test_bundle_to_dict(advance_payment_clause, ctx):
    bundle = retrieve(advance_payment_clause, ctx.store, ctx.index, ctx.onto, ctx.gateway, 2)
    data = bundle.to_dict(ctx.prefixes)
    assert data["entity_matches"]["advance payment"] == [
        {"id": "ckg:advancePayment", "score": 1.0}
    ]
    assert data["retrieved_risk_categories"] == ["Payment", "Financial"]
    assert data["retrieved_triples"][0] == (
        "ckg:commencementDate ckg:hasDefinition ckg:dateOfEngineerNotice ."
    )


def test_review_nckg(advance_payment_clause, ctx):
    verdict = review(advance_payment_clause, ReviewMode.NCKG, ctx)
    assert verdict.mode is ReviewMode.NCKG
    assert verdict.categories == {P, F}
    assert all(a.risk_type is RiskType.UNBALANCED_OBLIGATION for a in verdict.assessments)
    assert verdict.summary.startswith("As the conditions for commencement")
    assert verdict.degraded_from is None
    assert ctx.bundles["case-1"].categories == [P, F]


def test_review_nckg_degrades_without_matches(gold, ctx):
    verdict = review(gold[3].clause, ReviewMode.NCKG, ctx)
    assert verdict.mode is ReviewMode.LLM_ONLY
    assert verdict.degraded_from is ReviewMode.NCKG
    assert verdict.assessments == [Assessment(D, RiskType.NO_RISK)]


def test_review_llm_only_never_reads_the_store(clauses, ctx):
    reads = ctx.store.reads
    verdict = review(clauses[2], ReviewMode.LLM_ONLY, ctx)
    assert verdict.categories == {L}
    assert verdict.unknown_labels == ["Variation"]
    assert ctx.store.reads == reads
    assert ctx.index.queries == 0


def test_review_vector(advance_payment_clause, ctx):
    verdict = review(advance_payment_clause, ReviewMode.VECTOR, ctx)
    assert verdict.mode is ReviewMode.VECTOR
    assert verdict.categories == {P, F, T}
    assert verdict.summary.startswith("The clause lacks a payment guarantee")


def test_review_vector_degrades_without_provision(ctx):
    clause = Clause("odd", ClauseSource.OTHER, "", "zzz unforeseen physical conditions.")
    verdict = review(clause, ReviewMode.VECTOR, ctx)
    assert verdict.mode is ReviewMode.LLM_ONLY
    assert verdict.degraded_from is ReviewMode.VECTOR
    assert verdict.categories == {D}


def test_review_checks_context(review_gateway, advance_payment_clause):
    ctx = ReviewContext(gateway=review_gateway)
    with pytest.raises(ValueError):
        review(advance_payment_clause, ReviewMode.NCKG, ctx)
    with pytest.raises(ValueError):
        review(advance_payment_clause, ReviewMode.VECTOR, ctx)


def test_review_corpus(clauses, ctx, tmp_path):
    summary = review_corpus(clauses, ReviewMode.NCKG, ctx, str(tmp_path))
    assert summary.failures == []
    assert [v.clause_id for v in summary.verdicts] == ["case-1", "case-2", "case-3", "case-4"]
    assert [v.categories for v in summary.verdicts] == [{P, F}, {P}, {L}, {D}]
    records = read_jsonl(str(tmp_path / "verdicts.jsonl"))
    assert [r["clause_id"] for r in records] == ["case-1", "case-2", "case-3", "case-4"]
    assert sorted(os.listdir(str(tmp_path / "bundles"))) == [
        "case-1.json",
        "case-2.json",
        "case-3.json",
    ]


def test_review_corpus_is_deterministic(clauses, ctx, tmp_path):
    first = review_corpus(clauses, ReviewMode.NCKG, ctx, str(tmp_path / "a"))
    second = review_corpus(clauses, ReviewMode.NCKG, ctx, str(tmp_path / "b"))
    assert [v.to_dict() for v in first.verdicts] == [v.to_dict() for v in second.verdicts]
    assert (tmp_path / "a" / "verdicts.jsonl").read_bytes() == (
        tmp_path / "b" / "verdicts.jsonl"
    ).read_bytes()


def test_review_corpus_records_failures(clauses, ctx):
    # No vector reply is scripted for the other gold clauses.
    summary = review_corpus(clauses, ReviewMode.VECTOR, ctx)
    assert [v.clause_id for v in summary.verdicts] == ["case-1"]
    assert [f.clause_id for f in summary.failures] == ["case-2", "case-3", "case-4"]
    assert not summary.total_failure


def test_review_corpus_writes_failures(clauses, ctx, tmp_path):
    summary = review_corpus(clauses, ReviewMode.VECTOR, ctx, str(tmp_path))
    records = read_jsonl(str(tmp_path / "failures.jsonl"))
    assert [r["clause_id"] for r in records] == ["case-2", "case-3", "case-4"]
    assert [r["error"] for r in records] == [f.message for f in summary.failures]
    assert all("raw_response" not in r for r in records)


def test_review_corpus_keeps_unreadable_replies(clauses, tmp_path):
    config = GatewayConfig(backend="mock", mock_script="<inline>")
    gateway = Gateway(
        config,
        backend=MockBackend(
            [
                {
                    "match": {"template_id": "BASELINE_LLM_ONLY"},
                    "response": "The clause looks fine to me.",
                }
            ]
        ),
    )
    summary = review_corpus(
        clauses[:2], ReviewMode.LLM_ONLY, ReviewContext(gateway=gateway), str(tmp_path)
    )
    assert summary.total_failure
    assert summary.failures[0] == ReviewFailure(
        "case-1", "No risk assessment found in model reply", "The clause looks fine to me."
    )
    assert read_jsonl(str(tmp_path / "failures.jsonl"))[1] == {
        "clause_id": "case-2",
        "error": "No risk assessment found in model reply",
        "raw_response": "The clause looks fine to me.",
    }
    assert read_jsonl(str(tmp_path / "verdicts.jsonl")) == []


def test_review_corpus_rejects_file_name_clashes(ctx, tmp_path, advance_payment_clause):
    first = Clause("case 1", ClauseSource.OTHER, "", advance_payment_clause.text)
    second = Clause("case_1", ClauseSource.OTHER, "", advance_payment_clause.text)
    summary = review_corpus([first, second], ReviewMode.NCKG, ctx, str(tmp_path))
    assert [v.clause_id for v in summary.verdicts] == ["case 1"]
    assert summary.failures == [
        ReviewFailure("case_1", "Clause id 'case_1' clashes with 'case 1' as a file name")
    ]
    assert os.listdir(str(tmp_path / "bundles")) == ["case_1.json"]
    with open(str(tmp_path / "bundles" / "case_1.json"), encoding="utf-8") as f:
        assert json.load(f)["clause_id"] == "case 1"


@pytest.fixture
def six_clauses(clauses):
    extra = [
        # Same text as an earlier clause under another id
        Clause("case-5", ClauseSource.NEC, "", clauses[1].text),
        # Nothing is scripted for this one; its review fails
        Clause("case-6", ClauseSource.FIDIC, "", "The Engineer may issue a Variation."),
    ]
    return clauses + extra


def test_review_corpus_output_is_byte_identical_offline(six_clauses, ctx, tmp_path):
    runs = []
    with mock.patch.object(
        requests.Session, "send", side_effect=AssertionError("network access")
    ) as send:
        for run in range(3):
            out = tmp_path / str(run)
            summary = review_corpus(six_clauses, ReviewMode.NCKG, ctx, str(out))
            assert [v.clause_id for v in summary.verdicts] == [
                "case-1",
                "case-2",
                "case-3",
                "case-4",
                "case-5",
            ]
            assert [f.clause_id for f in summary.failures] == ["case-6"]
            runs.append(
                (
                    (out / "verdicts.jsonl").read_bytes(),
                    (out / "failures.jsonl").read_bytes(),
                )
            )
    assert not send.called
    assert runs[0][0]
    assert runs[0] == runs[1] == runs[2]


def test_review_corpus_needs_an_index(review_gateway, clauses):
    ctx = ReviewContext(gateway=review_gateway, store=GraphStore(), index=None)
    with pytest.raises(ValueError):
        review_corpus(clauses, ReviewMode.NCKG, ctx)
