import random
from fractions import Fraction

import pytest

from lepage_kit import (
    Chart,
    Expr,
    Form,
    FormalDeriv,
    FormalFunctionDecl,
    MultiIndex,
    ParseError,
    parse_expression,
    parse_form,
    parse_problem,
    total_derivative,
    wedge,
)
from lepage_kit.render import expr_text, form_text, structured_dump, structured_load

from genval import random_expr, random_form

FORMALS = {
    "F": FormalFunctionDecl("F", 1, False, None),
    "K": FormalFunctionDecl("K", 1, True, None),
    "g": FormalFunctionDecl("g", 0, False, ()),
}


def test_parse_simple_problem():
    spec = parse_problem(
        """
        m = 2; n = 1;
        L: order=1 1/2*(u[1;1,0]^2 + u[1;0,1]^2);
        """
    )
    assert spec.chart == Chart(2, 1, 10)
    L = spec.lagrangians["L"]
    ch = spec.chart
    expected = ch.const(Fraction(1, 2)) * (
        ch.u(1, (1, 0)) * ch.u(1, (1, 0)) + ch.u(1, (0, 1)) * ch.u(1, (0, 1))
    )
    assert L.density == expected and L.order == 1


def test_parse_connection_flat_and_entries():
    spec = parse_problem(
        """
        m = 2; n = 1;
        Gamma = flat;
        """
    )
    assert spec.connections["Gamma"].is_flat()
    spec = parse_problem(
        """
        m = 2; n = 1;
        Gamma[1;1,2] = x[1];
        Gamma[2;2,2] = 3;
        """
    )
    conn = spec.connections["Gamma"]
    assert conn.entry(1, 2, 1) == spec.chart.x(1)
    assert conn.entry(2, 2, 2) == spec.chart.const(3)
    assert conn.entry(1, 1, 1).is_zero()


def test_parse_symbolic_connection_and_named():
    spec = parse_problem(
        """
        m = 2; n = 1;
        Gamma = symbolic;
        connection nabla = flat;
        """
    )
    assert not spec.connections["Gamma"].is_flat()
    assert spec.connections["nabla"].is_flat()


def test_parse_formal_and_forms():
    spec = parse_problem(
        """
        m = 2; n = 1;
        formal F order 2 nonvanishing;
        formal b order 0 base;
        form eps = 2*u[1;0,0]*theta[1;0,0]*w0;
        form mixed = F*theta[1;1,0]*w[2] + b*dx[1]*dx[2];
        """
    )
    assert spec.formals["F"].nonvanishing
    assert spec.formals["b"].jet_deps == ()
    eps = spec.forms["eps"]
    ch = spec.chart
    assert eps == wedge(Form.theta(ch, 1), Form.volume(ch)).scale(2 * ch.u(1))


def test_dimension_mismatch_position():
    with pytest.raises(ParseError) as err:
        parse_problem("m = 2; n = 1; L: order=1 u[1;1];")
    assert err.value.line == 1


def test_unknown_identifier():
    with pytest.raises(ParseError):
        parse_problem("m = 2; n = 1; L: order=1 Q;")


def test_duplicate_names_rejected():
    with pytest.raises(ParseError):
        parse_problem("m = 2; n = 1; formal F order 1; formal F order 2;")


def test_chart_must_come_first():
    with pytest.raises(ParseError):
        parse_problem("L: order=1 u[1;0,0]; m = 2; n = 1;")


def test_reserved_names_rejected():
    with pytest.raises(ParseError):
        parse_problem("m = 2; n = 1; formal dx order 1;")


def test_expression_operators():
    ch = Chart(2, 1)
    e = parse_expression("-x[1]^2*u[1;0,0] + 3/4", ch)
    assert e == -(ch.x(1) * ch.x(1)) * ch.u(1) + ch.const(Fraction(3, 4))
    f = parse_expression("K^-2", ch, FORMALS)
    K = Expr.atom(ch, FormalDeriv(FORMALS["K"], MultiIndex.zero(2), ()))
    assert f == K.inverse() * K.inverse()
    with pytest.raises(ParseError):
        parse_expression("u[1;0,0]^-1", ch)
    with pytest.raises(ParseError):
        parse_expression("theta[1;0,0]", ch)  # form in scalar position


def test_form_tokens():
    ch = Chart(2, 1)
    w = parse_form("theta[1;0,0]*w[1]", ch)
    assert w == wedge(Form.theta(ch, 1), Form.dx(ch, 2))
    w2 = parse_form("w[2]", ch)
    assert w2 == -Form.dx(ch, 1)
    w0 = parse_form("w0", ch)
    assert w0 == Form.volume(ch)
    with pytest.raises(ParseError):
        parse_form("theta[1;0,0] + dx[1]*dx[2]", ch)  # mixed degrees


def test_derivative_record_tokens():
    ch = Chart(2, 1)
    F = Expr.atom(ch, FormalDeriv(FORMALS["F"], MultiIndex.zero(2), ()))
    dF = total_derivative(F, 1)
    text = expr_text(dF)
    assert parse_expression(text, ch, FORMALS) == dF
    with pytest.raises(ParseError):
        parse_expression("D[F;0,0;u[1;2,0]]", ch, FORMALS)  # beyond declared order


def test_round_trip_randomized():
    rng = random.Random(99)
    checked = 0
    for _ in range(120):
        m, n = rng.choice([(1, 1), (2, 1), (2, 2), (3, 2)])
        ch = Chart(m, n, order_cap=10)
        if rng.random() < 0.5:
            value = random_expr(rng, ch, max_order=2, terms=3, formals=FORMALS.values())
            text = expr_text(value)
            assert parse_expression(text, ch, FORMALS) == value, text
            assert structured_load(structured_dump(value)) == value
        else:
            p, q = rng.randint(0, 2), rng.randint(0, m)
            value = random_form(rng, ch, p, q, formals=FORMALS.values())
            text = form_text(value)
            assert parse_form(text, ch, FORMALS) == value, text
            assert structured_load(structured_dump(value)) == value
        checked += 1
    assert checked >= 100


def test_structured_schema_guard():
    ch = Chart(2, 1)
    doc = structured_dump(ch.u(1))
    assert '"schema": "lepage-kit/1"' in doc
    with pytest.raises(ParseError):
        structured_load(doc.replace("lepage-kit/1", "lepage-kit/999"))


def test_rendering_determinism():
    ch = Chart(2, 1)
    rng = random.Random(5)
    e = random_expr(rng, ch, max_order=2, terms=4)
    assert expr_text(e) == expr_text(e)
    # rebuilding the same value from shuffled additions renders identically
    terms = [Expr(ch, {mono: coeff}) for mono, coeff in e.terms.items()]
    rng.shuffle(terms)
    rebuilt = ch.zero()
    for t in terms:
        rebuilt = rebuilt + t
    assert expr_text(rebuilt) == expr_text(e)
    assert structured_dump(rebuilt) == structured_dump(e)
