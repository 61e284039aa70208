import fractions
import itertools
import json
import random

import pytest

from nckg.client import Gateway, GatewayConfig, MockBackend
from nckg.evaluation import (
    AnnotatedClause,
    confusion,
    ConfusionCell,
    evaluate_run,
    load_gold,
    load_rs_scores,
    load_verdicts,
    macro_f1,
    metrics,
    write_report,
)
from nckg.exceptions import LengthMismatch, MissingVerdict
from nckg.ontology import RiskCategory, RiskType
from nckg.review import Assessment, review_corpus, ReviewContext, ReviewMode, RiskVerdict
from nckg.utils import write_jsonl

from .conftest import data_file

A, P, T, F, D, L = (
    RiskCategory.ASSIGNMENT,
    RiskCategory.PAYMENT,
    RiskCategory.TEMPORAL,
    RiskCategory.FINANCIAL,
    RiskCategory.DSC,
    RiskCategory.LIABILITY,
)
UNBALANCED = RiskType.UNBALANCED_OBLIGATION


def verdict(clause_id, *pairs, mode=ReviewMode.NCKG, degraded_from=None):
    return RiskVerdict(
        clause_id,
        mode,
        [Assessment(c, t) for c, t in pairs],
        degraded_from=degraded_from,
    )


@pytest.fixture
def nckg_verdicts():
    return [
        verdict("case-1", (P, UNBALANCED), (F, UNBALANCED)),
        verdict("case-2", (P, RiskType.AMBIGUITY)),
        verdict("case-3", (L, UNBALANCED), ("Variation", UNBALANCED)),
        verdict(
            "case-4",
            (D, RiskType.NO_RISK),
            mode=ReviewMode.LLM_ONLY,
            degraded_from=ReviewMode.NCKG,
        ),
    ]


def test_load_gold(gold):
    assert [g.id for g in gold] == ["case-1", "case-2", "case-3", "case-4"]
    assert gold[0].gold_categories == {P, F}
    assert gold[0].gold_risk_type is UNBALANCED
    assert gold[2].gold_categories == {L}
    assert gold[3].gold_pairs() == {(D, RiskType.NO_RISK)}
    assert gold[0].clause.text.startswith("The Employer shall pay to the Contractor")


def test_annotated_clause_per_category_risk_types():
    item = AnnotatedClause.from_dict(
        {
            "id": "x",
            "text": "The Employer pays within 28 days.",
            "categories": "Payment;Temporal",
            "risk_type": "No risk",
            "risk_types": {"Temporal": "Ambiguity"},
        }
    )
    assert item.gold_pairs() == {(P, RiskType.NO_RISK), (T, RiskType.AMBIGUITY)}


@pytest.mark.parametrize(
    "record",
    [
        {"id": "x", "text": "t", "categories": ["Weather"], "risk_type": "No risk"},
        {"id": "x", "text": "t", "categories": ["Payment"], "risk_type": "Severe"},
        {"id": "x", "text": "t", "categories": [], "risk_type": "Ambiguity"},
    ],
)
def test_annotated_clause_rejects(record):
    with pytest.raises(ValueError):
        AnnotatedClause.from_dict(record)


def test_load_gold_reports_line(tmp_path):
    path = tmp_path / "gold.jsonl"
    path.write_text('{"id": "a", "text": "t", "categories": [], "risk_type": "No risk"}\n[]\n')
    with pytest.raises(ValueError, match="gold.jsonl:2"):
        load_gold(str(path))


def test_metrics():
    m = metrics(ConfusionCell(P, tp=3, fp=1, tn=0, fn=2))
    assert m.precision == pytest.approx(0.75)
    assert m.recall == pytest.approx(0.6)
    assert m.f1 == pytest.approx(0.6667, abs=1e-4)


def test_metrics_zero_denominators():
    m = metrics(ConfusionCell(A, tn=4))
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)


def test_confusion_worked_example():
    gold = [{P, F}, {P}, {L}]
    pred = [{P}, {P, T}, {D}]
    cells = confusion(gold, pred)
    assert [c.label for c in cells] == [A, P, T, F, D, L]
    payment = cells[1]
    assert (payment.tp, payment.fp, payment.tn, payment.fn) == (2, 0, 1, 0)
    assert all(c.n == 3 for c in cells)
    assert macro_f1(cells) == pytest.approx(1 / 6)


def test_confusion_length_mismatch():
    with pytest.raises(LengthMismatch):
        confusion([{P}], [])


def test_macro_f1_needs_every_label():
    with pytest.raises(ValueError):
        macro_f1([ConfusionCell(P, tp=1)])


def test_perfect_and_empty_predictions():
    gold = [{P, F}, {P}, {L}, {D}]
    assert macro_f1(confusion(gold, gold)) == pytest.approx(4 / 6)
    assert macro_f1(confusion(gold, [set()] * 4)) == 0.0


def subsets(labels):
    return [
        frozenset(combo)
        for size in range(len(labels) + 1)
        for combo in itertools.combinations(labels, size)
    ]


def counted_macro_f1(gold, pred):
    total = fractions.Fraction(0)
    for label in RiskCategory:
        tp = sum(label in g and label in p for g, p in zip(gold, pred))
        wrong = sum((label in g) != (label in p) for g, p in zip(gold, pred))
        if tp:
            total += fractions.Fraction(2 * tp, 2 * tp + wrong)
    return total / len(RiskCategory)


@pytest.mark.parametrize("size", [1, 2])
def test_macro_f1_matches_counting_on_every_small_instance(size):
    labels = subsets([P, F, L])
    for gold in itertools.product(labels, repeat=size):
        for pred in itertools.product(labels, repeat=size):
            assert macro_f1(confusion(gold, pred)) == pytest.approx(
                float(counted_macro_f1(gold, pred))
            )


def random_label_sets(rng, n):
    labels = list(RiskCategory)
    return [frozenset(rng.sample(labels, rng.randint(0, 3))) for _ in range(n)]


def test_macro_f1_ignores_clause_order():
    rng = random.Random(17)
    for _ in range(200):
        n = rng.randint(1, 30)
        pairs = list(zip(random_label_sets(rng, n), random_label_sets(rng, n)))
        gold, pred = zip(*pairs)
        rng.shuffle(pairs)
        shuffled_gold, shuffled_pred = zip(*pairs)
        assert confusion(shuffled_gold, shuffled_pred) == confusion(gold, pred)
        assert macro_f1(confusion(shuffled_gold, shuffled_pred)) == macro_f1(
            confusion(gold, pred)
        )


def test_recall_never_drops_when_a_gold_label_is_predicted():
    rng = random.Random(23)
    for _ in range(200):
        n = rng.randint(1, 20)
        gold = random_label_sets(rng, n)
        pred = random_label_sets(rng, n)
        before = [metrics(c).recall for c in confusion(gold, pred)]
        i = rng.randrange(n)
        if not gold[i]:
            continue
        pred[i] = pred[i] | {rng.choice(sorted(gold[i], key=lambda c: c.value))}
        after = [metrics(c).recall for c in confusion(gold, pred)]
        assert all(a >= b for a, b in zip(after, before))


def test_evaluate_run(gold, nckg_verdicts):
    report = evaluate_run(gold, nckg_verdicts, load_rs_scores(data_file("rs.jsonl")))
    assert report.n == 4
    assert report.macro_f1 == pytest.approx(4 / 6)
    assert report.rs_mean == pytest.approx(85.0)
    assert report.exact_match == 1.0
    assert report.unknown_labels == 1
    assert report.degraded == 1
    assert report.mode is None
    assert report.per_label[P].f1 == 1.0
    assert report.per_label[A].f1 == 0.0


def test_evaluate_run_missing_verdict(gold, nckg_verdicts):
    with pytest.raises(MissingVerdict) as e:
        evaluate_run(gold, nckg_verdicts[1:3])
    assert e.value.clause_ids == ["case-1", "case-4"]


def test_evaluate_run_ignores_extra_and_duplicate_verdicts(gold, nckg_verdicts):
    extra = nckg_verdicts + [verdict("case-9", (A, UNBALANCED)), verdict("case-1", (A, UNBALANCED))]
    report = evaluate_run(gold, extra)
    assert report.macro_f1 == pytest.approx(4 / 6)
    assert report.cells[0].fp == 0


def test_report_markdown(gold, nckg_verdicts):
    verdicts = [
        RiskVerdict(v.clause_id, ReviewMode.NCKG, v.assessments) for v in nckg_verdicts
    ]
    report = evaluate_run(gold, verdicts, {"case-1": 80, "case-2": 90, "case-3": 70, "case-4": 100})
    text = report.to_markdown()
    assert "| nckg | 4 | 66.7 | 85.0 |" in text
    assert "| Payment | 1.0000 | 1.0000 | 1.0000 | 2 | 0 | 2 | 0 |" in text
    assert "| Assignment | 0.0000 | 0.0000 | 0.0000 | 0 | 0 | 4 | 0 |" in text


def test_report_without_rs_scores(gold, nckg_verdicts):
    report = evaluate_run(gold, nckg_verdicts, {"other": 50})
    assert report.rs_mean is None
    assert "| mixed | 4 | 66.7 | -- |" in report.to_markdown()


@pytest.mark.parametrize("line", ['{"id": "a", "score": 120}', '{"id": "a"}', '{"score": 5}'])
def test_load_rs_scores_rejects(tmp_path, line):
    path = tmp_path / "rs.jsonl"
    path.write_text(line + "\n")
    with pytest.raises(ValueError):
        load_rs_scores(str(path))


def test_write_report(gold, nckg_verdicts, tmp_path):
    json_path, md_path = write_report(evaluate_run(gold, nckg_verdicts), str(tmp_path))
    with open(json_path) as f:
        data = json.load(f)
    assert data["per_label"]["Payment"]["tp"] == 2
    assert data["degraded"] == 1
    with open(md_path) as f:
        assert f.read().startswith("| Method | Clauses | RE-score(%) | RS-score(%) |")


def test_end_to_end_review_and_score(gold, review_gateway, seed_store, seed_index, onto, tmp_path):
    ctx = ReviewContext(review_gateway, seed_store, seed_index, onto, top_k=2)
    review_corpus([g.clause for g in gold], ReviewMode.NCKG, ctx, str(tmp_path))
    verdicts = load_verdicts(str(tmp_path / "verdicts.jsonl"))
    report = evaluate_run(gold, verdicts, load_rs_scores(data_file("rs.jsonl")))
    assert report.macro_f1 == pytest.approx(4 / 6)
    assert report.degraded == 1


def test_scale_with_synthetic_corpus(tmp_path):
    # 143 clauses, one category each in rotation
    categories = list(RiskCategory)
    records = []
    script = []
    for i in range(143):
        category = categories[i % len(categories)]
        text = "Synthetic clause number %d about %s matters." % (i, category.value)
        records.append(
            {
                "id": "syn-%03d" % i,
                "source": "Other",
                "text": text,
                "categories": [category.value],
                "risk_type": "Ambiguity",
            }
        )
        script.append(
            {
                "match": {"template_id": "BASELINE_LLM_ONLY", "contains": "number %d about" % i},
                "response": "%s-Ambiguity\nRisk Summary: Vague." % category.value,
            }
        )
    gold_path = tmp_path / "gold.jsonl"
    write_jsonl(str(gold_path), records)
    dataset = load_gold(str(gold_path))
    gateway = Gateway(
        GatewayConfig(backend="mock", mock_script="<inline>", max_in_flight=8),
        backend=MockBackend(script),
    )
    summary = review_corpus(
        [item.clause for item in dataset], ReviewMode.LLM_ONLY, ReviewContext(gateway)
    )
    assert len(summary.verdicts) == 143
    assert gateway.calls == 143
    report = evaluate_run(dataset, summary.verdicts)
    assert report.macro_f1 == pytest.approx(1.0)
    assert report.exact_match == 1.0
    assert sum(c.tp for c in report.cells) == 143

