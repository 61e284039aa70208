import random

import pytest

from nckg.exceptions import DepthExceeded, InvalidTerm, LiteralSubject
from nckg.terms import (
    check_triple,
    CKG,
    classify_kind,
    depth,
    iter_node_iris,
    iter_quoted,
    Iri,
    Literal,
    n3,
    QuotedPattern,
    QuotedTriple,
    RDF,
    Triple,
    TripleKind,
    TriplePattern,
    Variable,
)

make_payment = Triple(CKG.Employer, CKG.make, CKG.advancePayment)
insure = Triple(CKG.Contractor, CKG.insure, CKG.eventOrLiability)
does_not_submit = Triple(CKG.Client, CKG.doesNotSubmit, CKG.requiredCertificate)


def test_namespace_mints_iris():
    assert CKG.advancePayment == Iri("http://example.org/NCKG/advancePayment")
    assert CKG["ifNot-then"].local_name == "ifNot-then"
    assert CKG.Payment in CKG
    assert RDF.type not in CKG


@pytest.mark.parametrize(
    "value",
    ["", "has space", "<bracket>", "relative/path", "#frag", "1http://x.org/"]
    + ["http://example.org/a%sb" % c for c in '{}|^`\\"'],
)
def test_invalid_iri(value):
    with pytest.raises(InvalidTerm):
        Iri(value)


def test_literal_validation():
    assert str(Literal("fourteen days", lang="en")) == '"fourteen days"@en'
    assert str(Literal("")) == '""'
    with pytest.raises(InvalidTerm):
        Literal("x", datatype=CKG.Days, lang="en")
    with pytest.raises(InvalidTerm):
        Literal("", lang="en")


def test_predicate_must_be_iri():
    with pytest.raises(InvalidTerm):
        Triple(CKG.Contractor, Literal("submit"), CKG.Programme)


def test_quoted_triple_equality_is_structural():
    a = QuotedTriple(Triple(CKG.Employer, CKG.make, CKG.advancePayment))
    b = make_payment.quoted()
    assert a == b
    assert hash(a) == hash(b)
    assert len({a, b}) == 1


@pytest.mark.parametrize(
    "triple,expected",
    [
        (Triple(CKG.Contractor, CKG.submit, CKG.Programme), TripleKind.E2E),
        (Triple(insure.quoted(), CKG.hasCondition, does_not_submit.quoted()), TripleKind.EVT2EVT),
        (Triple(make_payment.quoted(), CKG.hasRiskLabel, CKG.Payment), TripleKind.E2EVT),
        (Triple(CKG.commencement, CKG.hasCondition, make_payment.quoted()), TripleKind.E2EVT),
    ],
)
def test_classify_kind(triple, expected):
    assert classify_kind(triple) is expected


def test_classify_kind_ignores_subject_object_swap():
    rng = random.Random(7)
    nodes = [CKG.Employer, CKG.advancePayment, CKG.Payment, Literal("14 days")]
    events = [make_payment.quoted(), insure.quoted(), does_not_submit.quoted()]
    for _ in range(500):
        s = rng.choice(nodes + events)
        o = rng.choice(nodes + events)
        p = rng.choice([CKG.hasCondition, CKG.make, CKG.hasRiskLabel])
        triple = Triple(s, p, o)
        assert classify_kind(Triple(o, p, s)) is classify_kind(triple)
        quoted = sum(isinstance(t, QuotedTriple) for t in (s, o))
        assert classify_kind(triple) is [
            TripleKind.E2E,
            TripleKind.E2EVT,
            TripleKind.EVT2EVT,
        ][quoted]


def test_depth():
    assert depth(CKG.Employer) == 0
    assert depth(make_payment.quoted()) == 1
    outer = Triple(CKG.commencement, CKG.hasCondition, make_payment.quoted())
    assert depth(outer.quoted()) == 2


def test_check_triple():
    check_triple(Triple(CKG.commencement, CKG.hasCondition, make_payment.quoted()), 1)
    with pytest.raises(LiteralSubject):
        check_triple(Triple(Literal("x"), CKG.p, CKG.o))
    nested = Triple(
        Triple(CKG.a, CKG.b, make_payment.quoted()).quoted(), CKG.c, CKG.d
    )
    with pytest.raises(DepthExceeded):
        check_triple(nested, 1)
    with pytest.raises(LiteralSubject):
        check_triple(Triple(Triple(Literal("x"), CKG.p, CKG.o).quoted(), CKG.q, CKG.r))


def test_n3():
    assert n3(make_payment.quoted()) == (
        "<< <http://example.org/NCKG/Employer> <http://example.org/NCKG/make>"
        " <http://example.org/NCKG/advancePayment> >>"
    )
    assert n3(Literal('say "hi"\n')) == '"say \\"hi\\"\\n"'


def test_iter_quoted_and_node_iris():
    outer = Triple(CKG.commencement, CKG.hasCondition, make_payment.quoted()).quoted()
    assert list(iter_quoted(outer)) == [outer, make_payment.quoted()]
    assert list(iter_node_iris(outer)) == [CKG.commencement, CKG.Employer, CKG.advancePayment]


def test_pattern_variables():
    pattern = TriplePattern(
        QuotedPattern(Variable("s"), CKG.make, Variable("o")),
        Variable("p"),
        Variable("s"),
    )
    assert pattern.variables() == ("s", "o", "p")
    assert str(pattern) == "<< ?s <http://example.org/NCKG/make> ?o >> ?p ?s"
