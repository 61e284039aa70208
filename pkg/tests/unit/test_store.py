import random

import pytest

from nckg.exceptions import DepthExceeded, LiteralSubject
from nckg.store import GraphStore, unify_triple
from nckg.terms import (
    CKG,
    Literal,
    QuotedPattern,
    Triple,
    triple_key,
    TriplePattern,
    Variable,
)
from nckg.turtle import parse, serialize, store_document

submit = Triple(CKG.Contractor, CKG.submit, CKG.Programme)
make_payment = Triple(CKG.Employer, CKG.make, CKG.advancePayment)


def test_insert():
    store = GraphStore()
    assert store.insert(submit) is True
    assert len(store) == 1
    assert store.insert(submit) is False
    assert len(store) == 1
    assert store.contains(submit)


def test_insert_literal_subject():
    store = GraphStore()
    with pytest.raises(LiteralSubject):
        store.insert(Triple(Literal("Contractor"), CKG.submit, CKG.Programme))
    assert len(store) == 0


def test_insert_depth_exceeded():
    store = GraphStore(max_depth=1)
    nested = Triple(CKG.commencement, CKG.hasCondition, make_payment.quoted())
    store.insert(nested)
    with pytest.raises(DepthExceeded):
        store.insert(Triple(nested.quoted(), CKG.hasRiskCategory, CKG.Payment))


def test_max_depth_must_be_positive():
    with pytest.raises(ValueError):
        GraphStore(max_depth=0)


def test_remove():
    store = GraphStore()
    assert store.remove(submit) is False
    store.insert(submit)
    assert store.remove(submit) is True
    assert len(store) == 0
    assert not store.contains(submit)

    other = Triple(CKG.Contractor, CKG.submit, CKG.PaymentApplication)
    store.insert_all([submit, other])
    store.remove(submit)
    assert store.match(TriplePattern(CKG.Contractor, None, None)) == [other]


def test_match_has_condition(context_store):
    found = context_store.match(TriplePattern(None, CKG.hasCondition, None))
    assert len(found) == 3
    assert {t.subject for t in found} == {CKG.commencement}
    assert found == sorted(found, key=triple_key)


def test_match_empty_store():
    assert GraphStore().match(TriplePattern()) == []


def test_match_inside_quoted_triples(context_store):
    pattern = TriplePattern(
        None, CKG.hasCondition, QuotedPattern(CKG.Employer, None, Variable("o"))
    )
    assert len(context_store.match(pattern)) == 3
    pattern = TriplePattern(QuotedPattern(None, CKG.make, None), None, None)
    (found,) = context_store.match(pattern)
    assert found.object == CKG.Payment


def test_match_bindings_respects_shared_variables():
    store = GraphStore()
    store.insert(Triple(CKG.a, CKG.p, CKG.a))
    store.insert(Triple(CKG.a, CKG.p, CKG.b))
    pattern = TriplePattern(Variable("x"), CKG.p, Variable("x"))
    assert [t for t, _ in store.match_bindings(pattern)] == [Triple(CKG.a, CKG.p, CKG.a)]


def test_stats_retrieved_context(context_store):
    stats = context_store.stats()
    assert stats.triples == 5
    assert stats.nested == 5
    assert stats.events == 3
    assert stats.to_dict() == {
        "triples": 5,
        "nested": 5,
        "entities": 7,
        "events": 3,
    }


def test_stats_empty_store():
    assert GraphStore().stats(clauses=0).to_dict() == {
        "triples": 0,
        "nested": 0,
        "entities": 0,
        "events": 0,
        "clauses": 0,
    }


def test_entity_iris_look_inside_quotes(context_store):
    assert CKG.advancePayment in context_store.entity_iris()
    assert CKG.make not in context_store.entity_iris()


NODES = [CKG["n%d" % i] for i in range(8)]
PREDICATES = [CKG["p%d" % i] for i in range(3)]


def random_term(rng, max_depth):
    if max_depth > 0 and rng.random() < 0.3:
        return random_triple(rng, max_depth - 1).quoted()
    return rng.choice(NODES)


def random_triple(rng, max_depth):
    obj = random_term(rng, max_depth)
    if rng.random() < 0.1:
        obj = Literal("v%d" % rng.randrange(3))
    return Triple(random_term(rng, max_depth), rng.choice(PREDICATES), obj)


def random_position(rng, pool, allow_quoted=True):
    roll = rng.random()
    if roll < 0.35:
        return None
    if roll < 0.5:
        return Variable(rng.choice("xyz"))
    if allow_quoted and roll < 0.6:
        return QuotedPattern(
            random_position(rng, NODES, False),
            random_position(rng, PREDICATES, False),
            random_position(rng, NODES, False),
        )
    return rng.choice(pool)


def random_pattern(rng, stored):
    if stored and rng.random() < 0.3:
        # Anchor on a stored term so that selective patterns also hit
        base = rng.choice(stored)
        return TriplePattern(base.subject, None, random_position(rng, NODES))
    return TriplePattern(
        random_position(rng, NODES),
        random_position(rng, PREDICATES, False),
        random_position(rng, NODES),
    )


def test_match_agrees_with_linear_scan():
    rng = random.Random(1729)
    store = GraphStore(max_depth=3)
    while len(store) < 500:
        store.insert(random_triple(rng, 3))
    stored = store.triples()
    for _ in range(1000):
        pattern = random_pattern(rng, stored)
        expected = [t for t in stored if unify_triple(pattern, t, {}) is not None]
        assert store.match(pattern) == expected, str(pattern)


def test_index_coherence_after_removals():
    rng = random.Random(7)
    store = GraphStore(max_depth=3)
    triples = [random_triple(rng, 2) for _ in range(200)]
    store.insert_all(triples)
    for triple in triples[::2]:
        store.remove(triple)
    remaining = set(triples[1::2]) - set(triples[::2])
    assert set(store.triples()) == remaining
    for triple in remaining:
        assert store.match(TriplePattern(*triple)) == [triple]
        assert store.match(TriplePattern(None, triple.predicate, triple.object))


def test_stats_bounds_on_serialized_store():
    rng = random.Random(11)
    store = GraphStore(max_depth=3)
    store.insert_all(random_triple(rng, 3) for _ in range(300))
    reparsed = GraphStore(max_depth=3)
    reparsed.insert_all(parse(serialize(store_document(store))).triples)
    stats = store.stats()
    assert reparsed.stats() == stats
    assert stats.nested <= stats.triples
    assert stats.events <= 2 * stats.triples
