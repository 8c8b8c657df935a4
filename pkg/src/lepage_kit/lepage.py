"""Lepage equivalents of Lagrangians.

Implements the principal (at most 1-contact) equivalent in closed form and
through the row homotopy operator, the two decomposable equivalents for
nonvanishing Lagrangians, the first-order equivalent with higher contact
terms, the scaling-homotopy Lagrangian of a source form, the extension of a
1-contact equivalent to one satisfying the closure property, and the
decomposition of the difference of two equivalents.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from .errors import DomainError, SubstitutionError
from .expressions import (
    BaseCoord,
    Chart,
    ConnGamma,
    Expr,
    FormalDeriv,
    JetCoord,
    iterated_total,
    partial,
)
from .forms import (
    Form,
    Theta,
    contact_decompose,
    contact_part,
    d_full,
    d_h,
    d_v,
    horizontalize,
    omega_basis,
    wedge,
    wedge_all,
)
from .multiindex import MultiIndex, indices_up_to_degree, multinomial
from .vertical import euler_lagrange, is_source_form, p_hat, p_tilde, source_coefficients

__all__ = [
    "LagrangianSpec",
    "LepageReport",
    "caratheodory",
    "caratheodory2",
    "closure_check",
    "extend",
    "fundamental_first_order",
    "lepage_difference_decompose",
    "lepage_report",
    "principal_lepage",
    "principal_lepage_via_homotopy",
    "vainberg_tonti",
]


@dataclass(frozen=True)
class LagrangianSpec:
    """A Lagrangian density with its declared jet order."""

    density: Expr
    order: int

    def __post_init__(self):
        if self.density.jet_order() > self.order:
            raise DomainError(
                f"density has jet order {self.density.jet_order()}, "
                f"above the declared order {self.order}"
            )

    @property
    def chart(self) -> Chart:
        return self.density.chart

    def lagrangian_form(self) -> Form:
        return Form.volume(self.chart).scale(self.density)


def _jet_partial(L: Expr, alpha: int, I: MultiIndex) -> Expr:
    return partial(L, JetCoord(alpha, I))


def principal_lepage(spec: LagrangianSpec) -> Form:
    """The at-most-1-contact local Lepage equivalent, in closed form.

    The double multi-index sum runs over |J| <= k-1 and |K| <= k-|J|-1 with
    the exact rational weight
    (-1)^|J| (J+K+1_j)! |J|! |K|! / ((|J|+|K|+1)! J! K!).
    """
    chart = spec.chart
    L, k = spec.density, spec.order
    out = spec.lagrangian_form()
    for J in indices_up_to_degree(chart.m, max(k - 1, 0)):
        for K in indices_up_to_degree(chart.m, k - J.degree - 1):
            for j in range(1, chart.m + 1):
                wj = omega_basis(chart, [j])
                M = J + K + chart.unit(j)
                weight = Fraction(
                    M.factorial()
                    * math.factorial(J.degree)
                    * math.factorial(K.degree),
                    math.factorial(J.degree + K.degree + 1)
                    * J.factorial()
                    * K.factorial(),
                )
                if J.degree % 2:
                    weight = -weight
                for alpha in range(1, chart.n + 1):
                    base = _jet_partial(L, alpha, M)
                    if base.is_zero():
                        continue
                    coeff = iterated_total(base, J) * weight
                    out = out + wedge(Form.theta(chart, alpha, K), wj).scale(coeff)
    return out


def principal_lepage_via_homotopy(spec: LagrangianSpec, hat: bool = False) -> Form:
    """The same equivalent produced by the row homotopy operator."""
    lam = spec.lagrangian_form()
    dv = d_v(lam)
    if dv.is_zero():
        return lam
    P = p_hat if hat else p_tilde
    return lam - P(dv)


def _require_invertible_density(spec: LagrangianSpec) -> Expr:
    try:
        spec.density.inverse()
    except SubstitutionError as exc:
        raise DomainError(
            "this construction needs a nonvanishing Lagrangian density "
            "(a single invertible term)"
        ) from exc
    return spec.density


def caratheodory(spec: LagrangianSpec) -> Form:
    """The decomposable equivalent of a nonvanishing first-order Lagrangian."""
    if spec.order != 1:
        raise DomainError("the decomposable construction is first order only")
    L = _require_invertible_density(spec)
    chart = spec.chart
    factors = []
    for j in range(1, chart.m + 1):
        f = Form.dx(chart, j).scale(L)
        for alpha in range(1, chart.n + 1):
            c = _jet_partial(L, alpha, chart.unit(j))
            if not c.is_zero():
                f = f + Form.theta(chart, alpha).scale(c)
        factors.append(f)
    scale = L.inverse() ** (chart.m - 1)
    return wedge_all(factors).scale(scale)


def caratheodory2(spec: LagrangianSpec) -> Form:
    """The decomposable equivalent of a nonvanishing second-order Lagrangian.

    Factor j carries, per ordered index pair (i, j), the weight 1/#(ij)
    written here as (1_i + 1_j)!/2.
    """
    if spec.order != 2:
        raise DomainError("this construction expects a second-order Lagrangian")
    L = _require_invertible_density(spec)
    chart = spec.chart
    factors = []
    for j in range(1, chart.m + 1):
        f = Form.dx(chart, j).scale(L)
        for alpha in range(1, chart.n + 1):
            coeff0 = _jet_partial(L, alpha, chart.unit(j))
            for i in range(1, chart.m + 1):
                pair = chart.unit(i) + chart.unit(j)
                second = _jet_partial(L, alpha, pair)
                if second.is_zero():
                    continue
                weight = Fraction(pair.factorial(), 2)
                coeff0 = coeff0 - iterated_total(second, chart.unit(i)) * weight
                f = f + Form.theta(chart, alpha, chart.unit(i)).scale(second * weight)
            if not coeff0.is_zero():
                f = f + Form.theta(chart, alpha).scale(coeff0)
        factors.append(f)
    scale = L.inverse() ** (chart.m - 1)
    return wedge_all(factors).scale(scale)


def fundamental_first_order(spec: LagrangianSpec) -> Form:
    """The first-order equivalent whose closure detects null Lagrangians.

    Sums, for each contact degree up to min(m, n), the iterated first-jet
    partials of the density against wedge products of zero-order contact
    forms and contracted volume forms, with weight 1/(p!)^2 over ordered
    index tuples.
    """
    if spec.order != 1:
        raise DomainError("the fundamental equivalent is defined for first order")
    chart = spec.chart
    L = spec.density
    out = spec.lagrangian_form()
    labels = [
        (alpha, j)
        for alpha in range(1, chart.n + 1)
        for j in range(1, chart.m + 1)
    ]
    for p in range(1, min(chart.m, chart.n) + 1):
        weight = Fraction(1, math.factorial(p) ** 2)
        for picks in itertools.product(labels, repeat=p):
            coeff = L
            for alpha, j in picks:
                coeff = _jet_partial(coeff, alpha, chart.unit(j))
                if coeff.is_zero():
                    break
            if coeff.is_zero():
                continue
            block = Form.scalar(chart.one())
            for alpha, _ in picks:
                block = wedge(block, Form.theta(chart, alpha))
            if block.is_zero():
                continue
            block = wedge(block, omega_basis(chart, [j for _, j in picks]))
            if block.is_zero():
                continue
            out = out + block.scale(coeff * weight)
    return out


def vainberg_tonti(epsilon: Form) -> LagrangianSpec:
    """The Lagrangian of a source form via the fibred scaling homotopy.

    Each coefficient is evaluated along the scaling of all jet coordinates
    and integrated exactly in the scale parameter, which for polynomial
    coefficients divides each monomial by one plus its jet degree.
    """
    chart = epsilon.chart
    if not is_source_form(epsilon):
        raise DomainError("input is not a source form")
    coeffs = source_coefficients(epsilon)
    density = chart.zero()
    for alpha, c in sorted(coeffs.items()):
        scaled = chart.zero()
        for mono, value in c.terms.items():
            jet_degree = 0
            for atom, power in mono:
                if isinstance(atom, JetCoord):
                    if power < 0:
                        raise DomainError("source coefficients must be polynomial")
                    jet_degree += power
                elif isinstance(atom, (BaseCoord, ConnGamma)):
                    continue
                elif isinstance(atom, FormalDeriv) and atom.decl.jet_deps == ():
                    continue
                else:
                    raise DomainError(
                        "source coefficients must be polynomial in the jet "
                        f"coordinates; found {atom!r}"
                    )
            scaled = scaled + Expr(chart, {mono: value * Fraction(1, jet_degree + 1)})
        density = density + chart.u(alpha) * scaled
    return LagrangianSpec(density, density.jet_order())


RowOperator = Callable[[Form], Form]


def _row_operator(choice) -> RowOperator:
    if choice is None or choice == "tilde":
        return p_tilde
    if choice == "hat":
        return p_hat
    if callable(choice):
        return choice
    raise DomainError(f"unknown row operator choice {choice!r}")


def extend(theta: Form, row_operators: Optional[Mapping[int, object]] = None) -> Form:
    """Extend an at-most-1-contact Lepage equivalent by higher contact terms.

    Starting from a form equal to its horizontal part plus a 1-contact part,
    repeatedly applies minus the row homotopy operator composed with the
    vertical differential; the result has one component in each contact
    degree and satisfies the closure property.  ``row_operators`` may choose
    the operator per contact row (keys are the row numbers 2..m, values
    "tilde", "hat", or a callable).
    """
    chart = theta.chart
    pieces = contact_decompose(theta)
    if any(p > 1 for (p, _) in pieces):
        raise DomainError("input must be at most 1-contact")
    if not theta.is_zero() and theta.degree != chart.m:
        raise DomainError("input must be a form of top horizontal degree")
    out = theta
    current = pieces.get((1, chart.m - 1), Form.zero(chart))
    for row in range(2, chart.m + 1):
        if current.is_zero():
            break
        dv = d_v(current)
        if dv.is_zero():
            break
        operator = _row_operator(None if row_operators is None else row_operators.get(row))
        current = -operator(dv)
        out = out + current
    return out


@dataclass(frozen=True)
class LepageReport:
    """Recomputed facts about a candidate Lepage form (never asserted)."""

    theta: Form
    one_contact_is_source: bool
    horizontal_part_equals_lagrangian: bool
    d_theta: Form


def lepage_report(spec: LagrangianSpec, theta: Form) -> LepageReport:
    d_theta = d_full(theta)
    return LepageReport(
        theta=theta,
        one_contact_is_source=is_source_form(contact_part(d_theta, 1)),
        horizontal_part_equals_lagrangian=(
            horizontalize(theta) == spec.lagrangian_form()
        ),
        d_theta=d_theta,
    )


@dataclass(frozen=True)
class ClosureReport:
    is_null: bool
    d_theta_f: Form
    el_form: Form
    theta_f: Form


_CONSTRUCTIONS = {
    "principal": principal_lepage,
    "pc": principal_lepage,
    "caratheodory": caratheodory,
    "caratheodory2": caratheodory2,
    "fundamental": fundamental_first_order,
}


def closure_check(spec: LagrangianSpec, construction: str = "extend") -> ClosureReport:
    """Build the extended equivalent and compare its closure with nullity."""
    if construction == "extend":
        theta = extend(principal_lepage(spec))
    elif construction in _CONSTRUCTIONS:
        theta = _CONSTRUCTIONS[construction](spec)
    else:
        raise DomainError(f"unknown construction {construction!r}")
    el = euler_lagrange(spec.density, spec.order)
    return ClosureReport(
        is_null=el.is_zero(),
        d_theta_f=d_full(theta),
        el_form=el,
        theta_f=theta,
    )


def lepage_difference_decompose(t1: Form, t2: Form) -> tuple[Form, Form]:
    """Split the difference of two equivalents of one Lagrangian.

    Returns (psi, remainder) with t1 - t2 = d(psi) + remainder where the
    remainder has no 0- or 1-contact component.
    """
    chart = t1.chart
    if horizontalize(t1) != horizontalize(t2):
        raise DomainError("forms have different horizontal parts")
    if contact_part(d_full(t1), 1) != contact_part(d_full(t2), 1):
        raise DomainError("forms do not induce the same source form")
    diff = t1 - t2
    one_contact = contact_part(diff, 1)
    if one_contact.is_zero():
        psi = Form.zero(chart)
    elif chart.m < 2:
        raise DomainError("no room for a horizontal homotopy below two dimensions")
    else:
        psi = p_tilde(one_contact)
    remainder = diff - d_full(psi)
    return psi, remainder
