import random

import pytest
from hypothesis import given, settings, strategies as st

from lepage_kit import (
    Chart,
    ChartMismatchError,
    Form,
    contact_decompose,
    d_full,
    d_h,
    d_v,
    horizontalize,
    interior_jet,
    interior_total,
    omega_basis,
    wedge,
)
from lepage_kit.forms import lie_total

from genval import random_form

CH = Chart(2, 1)


def th(alpha=1, I=None):
    return Form.theta(CH, alpha, I)


def dx(i):
    return Form.dx(CH, i)


def test_wedge_annihilates_repeats():
    assert wedge(dx(1), dx(1)).is_zero()
    assert wedge(th(), th()).is_zero()


def test_wedge_graded_commutativity():
    assert wedge(th(), dx(1)) == -wedge(dx(1), th())
    a = wedge(th(), dx(1))
    b = wedge(th(1, (1, 0)), dx(2))
    assert wedge(a, b) == wedge(b, a)  # even degrees commute


def test_wedge_scalar_coefficients():
    u = CH.u(1)
    assert wedge(dx(1).scale(u), dx(2)) == wedge(dx(1), dx(2)).scale(u)


def test_chart_mismatch():
    other = Chart(2, 2)
    with pytest.raises(ChartMismatchError):
        wedge(dx(1), Form.dx(other, 1))


def test_contact_decompose_du():
    # du expanded in the contact basis splits into its two components
    du = d_full(Form.scalar(CH.u(1)))
    pieces = contact_decompose(du)
    assert set(pieces) == {(1, 0), (0, 1)}
    assert pieces[(1, 0)] == th()
    assert pieces[(0, 1)] == dx(1).scale(CH.u(1, (1, 0))) + dx(2).scale(CH.u(1, (0, 1)))
    assert sum(pieces.values(), Form.zero(CH)) == du


def test_contact_decompose_mixed():
    w = wedge(th() + dx(1), dx(2))
    pieces = contact_decompose(w)
    assert pieces[(1, 1)] == wedge(th(), dx(2))
    assert pieces[(0, 2)] == wedge(dx(1), dx(2))


def test_d_h_on_coefficient():
    lhs = d_h(dx(1).scale(CH.u(1)))
    assert lhs == wedge(dx(2), dx(1)).scale(CH.u(1, (0, 1)))


def test_d_v_of_theta_vanishes():
    assert d_v(th(1, (1, 0))).is_zero()
    assert d_v(dx(1)).is_zero()


def test_omega_basis_signs():
    assert omega_basis(CH, [1]) == dx(2)
    assert omega_basis(CH, [2]) == -dx(1)
    assert omega_basis(CH, [1, 2]) == Form.scalar(CH.one())
    assert omega_basis(CH, []) == Form.volume(CH)
    assert omega_basis(CH, [1, 1]).is_zero()


def test_interior_total():
    assert interior_total(1, wedge(dx(1), dx(2))) == dx(2)
    assert interior_total(1, wedge(th(), wedge(dx(1), dx(2)))) == -wedge(th(), dx(2))
    assert interior_total(1, th()).is_zero()


def test_interior_jet():
    w0 = Form.volume(CH)
    assert interior_jet(1, (0, 0), wedge(th(), w0)) == w0
    assert interior_jet(1, (1, 0), wedge(th(), w0)).is_zero()
    assert interior_jet(1, (0, 0), wedge(dx(1), th())) == -dx(1)


def test_horizontalize():
    # h(du wedge dx2) keeps only the horizontal part
    du = d_full(Form.scalar(CH.u(1)))
    h = horizontalize(wedge(du, dx(2)))
    assert h == wedge(dx(1), dx(2)).scale(CH.u(1, (1, 0)))
    assert horizontalize(wedge(th(), dx(1))).is_zero()
    assert horizontalize(Form.volume(CH)) == Form.volume(CH)


def test_lie_total_raises_theta():
    assert lie_total(1, th()) == th(1, (1, 0))
    assert lie_total(1, dx(2)).is_zero()


def test_degree_mixing_rejected():
    from lepage_kit.errors import DomainError

    with pytest.raises(DomainError):
        th() + Form.volume(CH)


# -- randomized laws --------------------------------------------------------------

CASES = []
_rng = random.Random(2024)
for m, n in ((1, 1), (2, 1), (2, 2), (3, 2)):
    chart = Chart(m, n, order_cap=9)
    for p in range(0, 3):
        for q in range(0, m + 1):
            if p + q == 0:
                continue
            CASES.append((chart, p, q))


@pytest.mark.parametrize("chart,p,q", CASES)
def test_bicomplex_laws_randomized(chart, p, q):
    for _ in range(2):
        omega = random_form(_rng, chart, p, q, theta_order=3, coeff_order=3)
        if omega.is_zero():
            continue
        assert d_h(d_h(omega)).is_zero()
        assert d_v(d_v(omega)).is_zero()
        assert (d_h(d_v(omega)) + d_v(d_h(omega))).is_zero()
        assert d_full(d_full(omega)).is_zero()


@pytest.mark.parametrize("chart,p,q", CASES[:10])
def test_bidegree_bookkeeping(chart, p, q):
    omega = random_form(_rng, chart, p, q, theta_order=2, coeff_order=2)
    if omega.is_zero():
        return
    dh = d_h(omega)
    for (pp, qq), piece in contact_decompose(dh).items():
        assert (pp, qq) == (p, q + 1)
    dv = d_v(omega)
    for (pp, qq), piece in contact_decompose(dv).items():
        assert (pp, qq) == (p + 1, q)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_wedge_associative_graded_commutative(seed):
    rng = random.Random(seed)
    chart = Chart(rng.randint(1, 3), rng.randint(1, 2), order_cap=9)
    degrees = [(rng.randint(0, 1), rng.randint(0, 1)) for _ in range(3)]
    forms = [random_form(rng, chart, p, q, 1, 1) for p, q in degrees]
    a, b, c = forms
    assert wedge(wedge(a, b), c) == wedge(a, wedge(b, c))
    if a.degree is not None and b.degree is not None:
        sign = -1 if (a.degree % 2) and (b.degree % 2) else 1
        ba = wedge(b, a)
        assert wedge(a, b) == (ba if sign > 0 else -ba)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_interiors_are_antiderivations(seed):
    rng = random.Random(seed)
    chart = Chart(2, 2, order_cap=9)
    a = random_form(rng, chart, rng.randint(0, 1), rng.randint(0, 1), 1, 1)
    b = random_form(rng, chart, rng.randint(0, 1), rng.randint(0, 1), 1, 1)
    if a.degree is None or b.degree is None:
        return
    sign = -1 if a.degree % 2 else 1
    lhs = interior_total(1, wedge(a, b))
    rhs = wedge(interior_total(1, a), b) + wedge(a, interior_total(1, b)).scale(sign)
    assert lhs == rhs
    lhs = interior_jet(1, (0, 0), wedge(a, b))
    rhs = wedge(interior_jet(1, (0, 0), a), b) + wedge(
        a, interior_jet(1, (0, 0), b)
    ).scale(sign)
    assert lhs == rhs
