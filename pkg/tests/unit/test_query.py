import random

import pytest

from nckg.exceptions import AnchorKindMismatch, ParseError, UnknownPrefix
from nckg.query import (
    bind_template,
    context_triples,
    evaluate,
    parse_query,
    Query,
    QueryTemplate,
    risk_objects,
    run_query,
    run_template,
    template_text,
)
from nckg.store import GraphStore
from nckg.terms import (
    CKG,
    Literal,
    n3,
    QuotedPattern,
    QuotedTriple,
    Triple,
    TriplePattern,
    Variable,
)

make_payment = Triple(CKG.Employer, CKG.make, CKG.advancePayment).quoted()
provide_evidence = Triple(
    CKG.Employer, CKG.provide, CKG.financialArrangementsEvidence
).quoted()

union_query = """PREFIX ckg: <http://example.org/NCKG/>
SELECT ?s ?p ?o WHERE {
    { ?s ?p << ckg:Employer ckg:make ckg:advancePayment >> }
    UNION
    { << ckg:Employer ckg:make ckg:advancePayment >> ?p ?o }
}
"""


def test_parse_union_query():
    query = parse_query(union_query)
    assert query.projection == ["s", "p", "o"]
    assert len(query.where) == 2
    first = query.where[0][0]
    assert first.subject == Variable("s")
    assert first.object == make_payment


def test_parse_select_star():
    query = parse_query(
        "PREFIX ckg: <http://example.org/NCKG/>\n"
        "SELECT * WHERE { ?s ckg:hasCondition << ?who ckg:make ?what >> . }"
    )
    assert query.projection is None
    assert query.header == ["s", "who", "what"]
    assert isinstance(query.where[0][0].object, QuotedPattern)


def test_parse_undeclared_prefix():
    with pytest.raises(UnknownPrefix):
        parse_query("SELECT ?s WHERE { ?s foo:bar ?o }")


def test_parse_projection_must_appear_in_pattern():
    with pytest.raises(ParseError, match="\\?x"):
        parse_query(
            "PREFIX ckg: <http://example.org/NCKG/>\n"
            "SELECT ?x WHERE { ?s ckg:hasCondition ?o }"
        )


def test_parse_empty_group():
    with pytest.raises(ParseError, match="triple pattern"):
        parse_query("SELECT * WHERE { }")


def test_event_context_query(context_store):
    table = run_query(context_store, union_query)
    assert len(table) == 2
    assert table.header == ["s", "p", "o"]
    records = table.to_dicts(context_store.prefixes)
    assert {"s": "ckg:commencement", "p": "ckg:hasCondition", "o": ""} in records
    assert {"s": "", "p": "ckg:hasRiskLabel", "o": "ckg:Payment"} in records


def test_query_on_empty_store():
    table = run_query(GraphStore(), union_query)
    assert len(table) == 0
    assert table.to_tsv() == "?s\t?p\t?o\n"


def test_union_is_commutative(context_store):
    swapped = parse_query(union_query)
    swapped.where.reverse()
    original = evaluate(context_store, parse_query(union_query))
    assert evaluate(context_store, swapped).rows == original.rows


def test_select_star_has_at_least_as_many_rows(context_store):
    star = run_query(
        context_store,
        "PREFIX ckg: <http://example.org/NCKG/>\n"
        "SELECT * WHERE { ckg:commencement ckg:hasCondition << ckg:Employer ?p ?o >> }",
    )
    projected = run_query(
        context_store,
        "PREFIX ckg: <http://example.org/NCKG/>\n"
        "SELECT ?p WHERE { ckg:commencement ckg:hasCondition << ckg:Employer ?p ?o >> }",
    )
    assert len(star) == 3
    assert len(star) >= len(projected)
    assert projected.column("p") == [CKG.issue, CKG.make, CKG.provide]


def test_join_on_shared_variable(context_store):
    table = run_query(
        context_store,
        "PREFIX ckg: <http://example.org/NCKG/>\n"
        "SELECT ?e ?r WHERE { ckg:commencement ckg:hasCondition ?e . ?e ckg:hasRiskLabel ?r }",
    )
    assert set(table.column("r")) == {CKG.Financial, CKG.Payment}
    assert len(table) == 2


def test_results_are_sorted_and_distinct(seed_store):
    table = run_query(
        seed_store,
        "PREFIX ckg: <http://example.org/NCKG/>\n"
        "SELECT ?s WHERE { { ?s ckg:hasCondition ?o } UNION { ?s ckg:hasCondition ?x } }",
    )
    assert table.column("s") == [CKG.commencement]


def test_single_pattern_matches_store(seed_store):
    rng = random.Random(7)
    store = seed_store
    terms = sorted(
        {t for triple in store.triples() for t in triple}, key=lambda t: str(t)
    )
    for _ in range(200):
        pattern = TriplePattern(
            *(
                rng.choice(terms) if rng.random() < 0.3 else Variable(name)
                for name in ("s", "p", "o")
            )
        )
        table = evaluate(store, Query({}, None, [[pattern]]))
        assert len(table) == len(store.match(pattern))


ENTITIES = [CKG["e%d" % i] for i in range(8)]
PREDICATES = [CKG.make, CKG.hasCondition, CKG.hasRiskLabel, CKG.provide]
LITERALS = [Literal("14 days"), Literal("advance", lang="en")]
VARIABLES = [Variable(name) for name in "abcd"]


def random_store(rng):
    events = [
        Triple(rng.choice(ENTITIES), rng.choice(PREDICATES), rng.choice(ENTITIES)).quoted()
        for _ in range(6)
    ]
    events += [
        Triple(rng.choice(ENTITIES), rng.choice(PREDICATES), rng.choice(events)).quoted()
        for _ in range(3)
    ]
    store = GraphStore()
    for _ in range(rng.randint(20, 300)):
        store.insert(
            Triple(
                rng.choice(ENTITIES + events),
                rng.choice(PREDICATES),
                rng.choice(ENTITIES + events + LITERALS),
            )
        )
    return store, events


def random_position(rng, pool, events, depth=0):
    roll = rng.random()
    if roll < 0.45:
        return rng.choice(VARIABLES)
    if depth < 2 and roll < 0.65:
        return QuotedPattern(
            random_position(rng, ENTITIES, events, depth + 1),
            rng.choice(VARIABLES + PREDICATES),
            random_position(rng, ENTITIES + events, events, depth + 1),
        )
    if roll < 0.7:
        return None
    return rng.choice(pool)


def random_query(rng, events):
    branches = [
        [
            TriplePattern(
                random_position(rng, ENTITIES + events, events),
                rng.choice(VARIABLES + PREDICATES),
                random_position(rng, ENTITIES + events + LITERALS, events),
            )
            for _ in range(rng.randint(1, 3))
        ]
        for _ in range(rng.randint(1, 2))
    ]
    projection = None
    if rng.random() < 0.5:
        projection = [v.name for v in rng.sample(VARIABLES, rng.randint(1, 3))]
    return Query({}, projection, branches)


def oracle_unify(pattern, term, bindings):
    if pattern is None:
        return bindings
    if isinstance(pattern, Variable):
        if pattern.name not in bindings:
            return dict(bindings, **{pattern.name: term})
        return bindings if bindings[pattern.name] == term else None
    if isinstance(pattern, QuotedPattern):
        if not isinstance(term, QuotedTriple):
            return None
        for inner_pattern, inner_term in zip(pattern, term.inner):
            bindings = oracle_unify(inner_pattern, inner_term, bindings)
            if bindings is None:
                return None
        return bindings
    return bindings if pattern == term else None


def nested_loop_rows(triples, query):
    rows = set()
    for branch in query.where:
        solutions = [{}]
        for pattern in branch:
            extended = []
            for solution in solutions:
                for triple in triples:
                    found = oracle_unify(QuotedPattern(*pattern), triple.quoted(), solution)
                    if found is not None:
                        extended.append(found)
            solutions = extended
        rows.update(tuple(s.get(name) for name in query.header) for s in solutions)
    return rows


def test_quoted_predicate_bound_to_non_iri_matches_nothing(seed_store):
    table = run_query(
        seed_store,
        "PREFIX ckg: <http://example.org/NCKG/>\n"
        "SELECT ?x ?o WHERE { ckg:commencement ckg:hasCondition ?x . "
        "<< ckg:Employer ?x ckg:advancePayment >> ?p ?o }",
    )
    assert len(table) == 0


def test_query_rows_match_nested_loop_join():
    rng = random.Random(11)
    non_empty = 0
    for _ in range(12):
        store, events = random_store(rng)
        triples = store.triples()
        for _ in range(10):
            query = random_query(rng, events)
            table = evaluate(store, query)
            expected = nested_loop_rows(triples, query)
            assert set(table.rows) == expected, query
            assert len(table.rows) == len(expected)
            assert table.rows == sorted(
                table.rows, key=lambda row: ["" if t is None else n3(t) for t in row]
            )
            non_empty += bool(expected)
    assert non_empty > 20


def test_template_text_uses_prefixes():
    text = template_text(QueryTemplate.RISK_CATEGORY, make_payment)
    assert "PREFIX ckg: <http://example.org/NCKG/>" in text
    assert "<< ckg:Employer ckg:make ckg:advancePayment >> ckg:hasRiskLabel ?r" in text


def test_bind_template():
    query = bind_template(QueryTemplate.ENTITY_CONTEXT, CKG.commencementDate)
    assert query.projection == ["s", "p", "o"]
    assert len(query.where) == 2


@pytest.mark.parametrize(
    "template,anchor",
    [
        (QueryTemplate.ENTITY_CONTEXT, make_payment),
        (QueryTemplate.EVENT_CONTEXT, CKG.commencement),
        (QueryTemplate.RISK_CATEGORY, CKG.commencement),
    ],
)
def test_bind_template_anchor_kind(template, anchor):
    with pytest.raises(AnchorKindMismatch):
        bind_template(template, anchor)


def test_entity_context(seed_store):
    table = run_template(seed_store, QueryTemplate.ENTITY_CONTEXT, CKG.commencementDate)
    assert context_triples(table, CKG.commencementDate) == [
        Triple(CKG.commencementDate, CKG.hasDefinition, CKG.dateOfEngineerNotice)
    ]


def test_event_context(context_store):
    table = run_template(context_store, QueryTemplate.EVENT_CONTEXT, make_payment)
    assert set(context_triples(table, make_payment)) == {
        Triple(CKG.commencement, CKG.hasCondition, make_payment),
        Triple(make_payment, CKG.hasRiskLabel, CKG.Payment),
    }


def test_risk_objects(context_store):
    assert risk_objects(context_store, make_payment) == [CKG.Payment]
    assert risk_objects(context_store, provide_evidence) == [CKG.Financial]
    unlabeled = Triple(CKG.Employer, CKG.issue, CKG.NoticeToProceed).quoted()
    assert risk_objects(context_store, unlabeled) == []


def test_risk_objects_after_normalization(context_store):
    store = GraphStore()
    for triple in context_store.triples():
        if triple.predicate == CKG.hasRiskLabel:
            triple = Triple(triple.subject, CKG.hasRiskCategory, triple.object)
        store.insert(triple)
    assert risk_objects(store, make_payment) == [CKG.Payment]
