import random
from fractions import Fraction

import pytest

from lepage_kit import (
    Chart,
    DomainError,
    Form,
    JetCoord,
    LagrangianSpec,
    MultiIndex,
    caratheodory,
    caratheodory2,
    closure_check,
    contact_part,
    d_full,
    d_v,
    euler_lagrange,
    extend,
    fundamental_first_order,
    horizontalize,
    lepage_difference_decompose,
    lepage_report,
    omega_basis,
    partial,
    principal_lepage,
    principal_lepage_via_homotopy,
    vainberg_tonti,
    wedge,
)
from lepage_kit.expressions import iterated_total
from lepage_kit.multiindex import indices_up_to_degree

CH = Chart(2, 1, order_cap=12)


def dirichlet():
    u10, u01 = CH.u(1, (1, 0)), CH.u(1, (0, 1))
    return LagrangianSpec(CH.const(Fraction(1, 2)) * (u10 * u10 + u01 * u01), 1)


def pc_display(spec):
    chart = spec.chart
    out = spec.lagrangian_form()
    for alpha in range(1, chart.n + 1):
        for j in range(1, chart.m + 1):
            c = partial(spec.density, JetCoord(alpha, chart.unit(j)))
            out = out + wedge(Form.theta(chart, alpha), omega_basis(chart, [j])).scale(c)
    return out


def test_principal_first_order_is_poincare_cartan():
    F = CH.formal("L1", 1)
    spec = LagrangianSpec(F, 1)
    assert principal_lepage(spec) == pc_display(spec)
    assert principal_lepage_via_homotopy(spec) == pc_display(spec)


def test_principal_second_order_display():
    F = CH.formal("L2", 2)
    spec = LagrangianSpec(F, 2)
    chart = spec.chart
    expected = spec.lagrangian_form()
    for j in (1, 2):
        wj = omega_basis(chart, [j])
        c0 = partial(F, JetCoord(1, chart.unit(j)))
        for i in (1, 2):
            pair = chart.unit(i) + chart.unit(j)
            second = partial(F, JetCoord(1, pair))
            weight = Fraction(pair.factorial(), 2)  # 1/#(ij)
            c0 = c0 - iterated_total(second, chart.unit(i)) * weight
            expected = expected + wedge(
                Form.theta(chart, 1, chart.unit(i)), wj
            ).scale(second * weight)
        expected = expected + wedge(Form.theta(chart, 1), wj).scale(c0)
    assert principal_lepage(spec) == expected


@pytest.mark.parametrize("order", [1, 2, 3])
def test_principal_equals_homotopy_route(order):
    F = CH.formal(f"Lk{order}", order)
    spec = LagrangianSpec(F, order)
    assert principal_lepage(spec) == principal_lepage_via_homotopy(spec)


def test_homotopy_route_constant_density():
    spec = LagrangianSpec(CH.const(3), 0)
    assert principal_lepage_via_homotopy(spec) == spec.lagrangian_form()


def test_dirichlet_principal_values():
    spec = dirichlet()
    u10, u01 = CH.u(1, (1, 0)), CH.u(1, (0, 1))
    expected = (
        spec.lagrangian_form()
        + wedge(Form.theta(CH, 1), omega_basis(CH, [1])).scale(u10)
        + wedge(Form.theta(CH, 1), omega_basis(CH, [2])).scale(u01)
    )
    assert principal_lepage(spec) == expected


def test_lepage_property_all_constructions():
    F = CH.formal("Lnv", 1, nonvanishing=True)
    spec = LagrangianSpec(F, 1)
    el = euler_lagrange(F, 1)
    for build in (principal_lepage, caratheodory, fundamental_first_order):
        theta = build(spec)
        assert horizontalize(theta) == spec.lagrangian_form(), build.__name__
        assert contact_part(d_full(theta), 1) == el, build.__name__
    report = lepage_report(spec, caratheodory(spec))
    assert report.one_contact_is_source
    assert report.horizontal_part_equals_lagrangian


def test_caratheodory_m1_no_inverse_factor():
    ch = Chart(1, 1)
    F = ch.formal("Lnv", 1, nonvanishing=True)
    spec = LagrangianSpec(F, 1)
    assert caratheodory(spec) == principal_lepage(spec)


def test_caratheodory_requires_nonvanishing():
    spec = dirichlet()
    with pytest.raises(DomainError):
        caratheodory(spec)
    with pytest.raises(DomainError):
        caratheodory2(LagrangianSpec(CH.formal("P2", 2), 2))


def test_caratheodory2_reduces_and_satisfies_lepage_property():
    deps = tuple((1, I) for I in indices_up_to_degree(2, 1))
    first = CH.formal("Knv", 2, nonvanishing=True, jet_deps=deps)
    spec2 = LagrangianSpec(first, 2)
    assert caratheodory2(spec2) == caratheodory(LagrangianSpec(first, 1))
    full = CH.formal("Knv2", 2, nonvanishing=True)
    spec = LagrangianSpec(full, 2)
    theta = caratheodory2(spec)
    assert horizontalize(theta) == spec.lagrangian_form()
    assert contact_part(d_full(theta), 1) == euler_lagrange(full, 2)


def test_caratheodory2_single_base_direction():
    ch = Chart(1, 1)
    F = ch.formal("Q", 2, nonvanishing=True)
    spec = LagrangianSpec(F, 2)
    theta = caratheodory2(spec)
    assert horizontalize(theta) == spec.lagrangian_form()
    assert contact_part(d_full(theta), 1) == euler_lagrange(F, 2)


def test_fundamental_single_dependent_variable_is_poincare_cartan():
    F = CH.formal("L1n", 1)
    spec = LagrangianSpec(F, 1)
    assert fundamental_first_order(spec) == pc_display(spec)


def test_fundamental_zero_contact_part_is_lagrangian():
    ch = Chart(2, 2)
    F = ch.formal("G", 1)
    spec = LagrangianSpec(F, 1)
    assert horizontalize(fundamental_first_order(spec)) == spec.lagrangian_form()


def test_fundamental_closed_on_null_lagrangian():
    ch = Chart(2, 2, order_cap=10)
    L = ch.u(1, (1, 0)) * ch.u(2, (0, 1)) - ch.u(1, (0, 1)) * ch.u(2, (1, 0))
    theta = fundamental_first_order(LagrangianSpec(L, 1))
    assert d_full(theta).is_zero()


@pytest.mark.parametrize("m,n", [(2, 2), (3, 2)])
def test_extension_recovers_fundamental(m, n):
    ch = Chart(m, n, order_cap=12)
    F = ch.formal("G", 1)
    spec = LagrangianSpec(F, 1)
    assert extend(principal_lepage(spec)) == fundamental_first_order(spec)


def test_extension_trivial_for_single_base_direction():
    ch = Chart(1, 1)
    F = ch.formal("G", 1)
    theta = principal_lepage(LagrangianSpec(F, 1))
    assert extend(theta) == theta


def test_extend_rejects_higher_contact_input():
    ch = Chart(2, 2)
    bad = wedge(wedge(Form.theta(ch, 1), Form.theta(ch, 2)), Form.volume(ch))
    with pytest.raises(DomainError):
        extend(bad + Form.volume(ch).scale(ch.u(1)))


def test_closure_both_directions():
    ch = Chart(2, 2, order_cap=12)
    jac = LagrangianSpec(
        ch.u(1, (1, 0)) * ch.u(2, (0, 1)) - ch.u(1, (0, 1)) * ch.u(2, (1, 0)), 1
    )
    report = closure_check(jac)
    assert report.is_null and report.d_theta_f.is_zero()

    total_div = LagrangianSpec(CH.u(1, (1, 0)), 1)
    report = closure_check(total_div)
    assert report.is_null and report.d_theta_f.is_zero()

    for spec in (
        LagrangianSpec(CH.u(1) * CH.u(1), 0),
        dirichlet(),
        LagrangianSpec(CH.formal("H2", 2), 2),
    ):
        report = closure_check(spec)
        assert not report.is_null
        assert not report.d_theta_f.is_zero()
        assert contact_part(report.d_theta_f, 1) == report.el_form


def test_el_agrees_across_constructions():
    F = CH.formal("Lnv3", 1, nonvanishing=True)
    spec = LagrangianSpec(F, 1)
    el = euler_lagrange(F, 1)
    thetas = [
        principal_lepage(spec),
        caratheodory(spec),
        fundamental_first_order(spec),
        extend(principal_lepage(spec)),
    ]
    for theta in thetas:
        assert contact_part(d_full(theta), 1) == el


def test_vainberg_tonti_values():
    u = CH.u(1)
    eps = wedge(Form.theta(CH, 1), Form.volume(CH)).scale(2 * u)
    assert vainberg_tonti(eps).density == u * u
    c = CH.x(1) * CH.x(2)
    eps2 = wedge(Form.theta(CH, 1), Form.volume(CH)).scale(c)
    assert vainberg_tonti(eps2).density == c * u
    zero = Form.zero(CH)
    assert vainberg_tonti(zero).density.is_zero()


def test_vainberg_tonti_rejects_formal_jets():
    F = CH.formal("Fj", 1)
    eps = wedge(Form.theta(CH, 1), Form.volume(CH)).scale(F)
    with pytest.raises(DomainError):
        vainberg_tonti(eps)


def test_vainberg_tonti_el_consistency():
    u = CH.u(1)
    lagrangians = [
        u * u,
        CH.u(1, (1, 0)) * CH.u(1, (1, 0)),
        CH.x(1) * u * CH.u(1, (0, 1)),
        CH.u(1, (2, 0)) * CH.u(1, (2, 0)),
        CH.u(1, (1, 1)) * u + CH.x(2) * u,
    ]
    for L in lagrangians:
        el = euler_lagrange(L)
        again = vainberg_tonti(el)
        assert euler_lagrange(again.density, again.order) == el


def test_difference_decomposition():
    ch = Chart(2, 2, order_cap=12)
    F = ch.formal("G", 1)
    spec = LagrangianSpec(F, 1)
    t1 = fundamental_first_order(spec)
    t2 = principal_lepage(spec)
    psi, remainder = lepage_difference_decompose(t1, t2)
    assert (t1 - t2) == d_full(psi) + remainder
    assert all(p >= 2 for p, _ in remainder.bidegrees())
    psi0, rem0 = lepage_difference_decompose(t2, t2)
    assert psi0.is_zero() and rem0.is_zero()


def test_difference_decomposition_with_exact_shift():
    rng = random.Random(3)
    from genval import random_form

    ch = Chart(2, 1, order_cap=12)
    F = ch.formal("G", 1)
    spec = LagrangianSpec(F, 1)
    t1 = principal_lepage(spec)
    shift = random_form(rng, ch, 1, 0, theta_order=1, coeff_order=1)
    t2 = t1 + d_full(shift)
    psi, remainder = lepage_difference_decompose(t1, t2)
    assert all(p >= 2 for p, _ in remainder.bidegrees())


def test_difference_decomposition_preconditions():
    spec = dirichlet()
    t1 = principal_lepage(spec)
    other = LagrangianSpec(CH.u(1) * CH.u(1), 0)
    t2 = principal_lepage(other)
    with pytest.raises(DomainError):
        lepage_difference_decompose(t1, t2)


def test_lagrangian_spec_order_validation():
    with pytest.raises(DomainError):
        LagrangianSpec(CH.u(1, (1, 0)), 0)
