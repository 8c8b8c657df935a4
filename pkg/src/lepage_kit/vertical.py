"""Vertical endomorphisms, local homotopy operators and source-form machinery.

The lowering endomorphisms act on contact basis one-forms by stepping jet
multi-indices down; extended to wedge words as degree-0 derivations they
build the two row-contracting homotopy operators for the horizontal
differential, from which the Euler-Lagrange form and the source-form residue
identity follow.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .errors import ChartMismatchError, DimensionError, DomainError
from .expressions import (
    BaseCoord,
    Chart,
    Expr,
    FormalDeriv,
    JetCoord,
    iterated_total,
    partial,
)
from .forms import (
    Dx,
    Form,
    Theta,
    Word,
    _sort_word,
    contact_decompose,
    d_h,
    interior_jet,
    interior_total,
    lie_total_iterated,
    omega_basis,
    wedge,
)
from .multiindex import MultiIndex, indices_of_degree, indices_up_to_degree, splittings

__all__ = [
    "LoweringEndo",
    "euler_lagrange",
    "is_source_form",
    "p_hat",
    "p_tilde",
    "s_eta",
    "s_hat",
    "s_i",
    "s_tilde",
    "source_residue",
]


class LoweringEndo:
    """A jet-lowering endomorphism of contact one-forms.

    The action preserves the dependent index and annihilates coordinate
    factors; ``rules`` maps a contact multi-index to the list of
    (coefficient, lowered multi-index) images.  Applied to a form it acts as
    a degree-0 derivation over wedge words.
    """

    def __init__(self, chart: Chart, rules: Callable[[MultiIndex], list[tuple[Expr, MultiIndex]]]):
        self.chart = chart
        self._rules = rules

    def on_index(self, J: MultiIndex) -> list[tuple[Expr, MultiIndex]]:
        return self._rules(J)

    def compose(self, other: "LoweringEndo") -> "LoweringEndo":
        """The composite endomorphism (self applied after other)."""
        if self.chart != other.chart:
            raise ChartMismatchError("endomorphisms live on different charts")

        def rules(J: MultiIndex):
            out: dict[MultiIndex, Expr] = {}
            for c1, J1 in other._rules(J):
                for c2, J2 in self._rules(J1):
                    coeff = c1 * c2
                    if J2 in out:
                        out[J2] = out[J2] + coeff
                    else:
                        out[J2] = coeff
            return [(c, J2) for J2, c in out.items() if not c.is_zero()]

        return LoweringEndo(self.chart, rules)

    def apply(self, omega: Form) -> Form:
        """Derivation extension to forms (the interior product i_S)."""
        if omega.chart != self.chart:
            raise ChartMismatchError("form lives on a different chart")
        out: dict[Word, Expr] = {}
        for word, coeff in omega.terms.items():
            for k, factor in enumerate(word):
                if not isinstance(factor, Theta):
                    continue
                for c, lowered in self._rules(factor.index):
                    rest = (
                        word[:k]
                        + (Theta(factor.alpha, lowered),)
                        + word[k + 1 :]
                    )
                    sorted_word = _sort_word(rest)
                    if sorted_word is None:
                        continue
                    new_word, sign = sorted_word
                    term = coeff * c
                    if sign < 0:
                        term = -term
                    if new_word in out:
                        total = out[new_word] + term
                        if total.is_zero():
                            del out[new_word]
                        else:
                            out[new_word] = total
                    else:
                        out[new_word] = term
        return Form(self.chart, out)


def s_i(chart: Chart, i: int) -> LoweringEndo:
    """The coordinate lowering endomorphism for direction i.

    On one-forms: theta^a_J goes to J(i) theta^a_{J - 1_i}, and to zero when
    direction i is absent from J.
    """
    if not 1 <= i <= chart.m:
        raise DimensionError(f"direction {i} out of range 1..{chart.m}")

    def rules(J: MultiIndex):
        c = J.count(i)
        if c == 0:
            return []
        return [(chart.const(c), J.checked_sub(chart.unit(i)))]

    return LoweringEndo(chart, rules)


def _base_coords_only(e: Expr) -> bool:
    for atom in e.atoms():
        if isinstance(atom, JetCoord):
            return False
        if isinstance(atom, FormalDeriv) and atom.decl.jet_deps != ():
            # only an explicitly empty dependency list marks a base-only function
            return False
    return True


def s_eta(chart: Chart, eta: Sequence[Expr], k: int) -> LoweringEndo:
    """The vertical endomorphism weighted by a one-form on the base.

    ``eta`` lists the m coefficient functions of the one-form, which must
    depend on base coordinates only; ``k`` is the jet order at which the
    endomorphism is truncated.  For constant coefficients this reduces to the
    matching combination of the coordinate lowering endomorphisms.
    """
    if len(eta) != chart.m:
        raise DimensionError(f"expected {chart.m} coefficient functions")
    coeffs = []
    for e in eta:
        if not isinstance(e, Expr):
            e = chart.const(e)
        if e.chart != chart:
            raise ChartMismatchError("coefficient lives on a different chart")
        if not _base_coords_only(e):
            raise DomainError("the weighting one-form must not depend on jet coordinates")
        coeffs.append(e)

    def deriv_x(e: Expr, K: MultiIndex) -> Expr:
        out = e
        for i in range(1, chart.m + 1):
            for _ in range(K.count(i)):
                out = partial(out, BaseCoord(i))
        return out

    def rules(L: MultiIndex):
        if L.degree > k or L.degree == 0:
            return []
        out: dict[MultiIndex, Expr] = {}
        for i in L.supports():
            base = L.checked_sub(chart.unit(i))
            for K, J in splittings(base):
                weight = Fraction(
                    L.factorial(), J.factorial() * K.factorial() * (K.degree + 1)
                )
                value = deriv_x(coeffs[i - 1], K)
                if value.is_zero():
                    continue
                term = value * weight
                if J in out:
                    out[J] = out[J] + term
                else:
                    out[J] = term
        return [(c, J) for J, c in out.items() if not c.is_zero()]

    return LoweringEndo(chart, rules)


def _factorize(J: MultiIndex) -> list[int]:
    return list(J.to_index_list())


def s_tilde(chart: Chart, J: MultiIndex, omega: Form) -> Form:
    """Apply the composite lowering endomorphism for J as a single derivation."""
    factors = _factorize(J)
    if not factors:
        return omega
    endo = s_i(chart, factors[0])
    for j in factors[1:]:
        endo = endo.compose(s_i(chart, j))
    return endo.apply(omega)


def s_hat(chart: Chart, J: MultiIndex, omega: Form) -> Form:
    """Apply the lowering derivations for J sequentially."""
    out = omega
    for j in _factorize(J):
        out = s_i(chart, j).apply(out)
    return out


# -- homotopy operators for the horizontal differential ---------------------------


def _require_homogeneous(omega: Form) -> tuple[int, int]:
    bd = omega.bidegree()
    if bd is None:
        raise DomainError("operator needs a homogeneous nonzero form")
    return bd


def _homotopy(omega: Form, hat: bool) -> Form:
    chart = omega.chart
    p, q = _require_homogeneous(omega)
    if p < 1:
        raise DomainError("homotopy operators act on contact degree at least one")
    if not 1 <= q <= chart.m:
        raise DomainError(f"horizontal degree {q} outside 1..{chart.m}")
    m = chart.m
    bound = p * omega.contact_order()
    result = Form.zero(chart)
    for i in range(1, m + 1):
        partial_i = Form.zero(chart)
        for ell in range(0, bound + 1):
            for I in indices_of_degree(m, ell):
                lowered = (
                    s_hat(chart, I.plus_unit(i), omega)
                    if hat
                    else s_tilde(chart, I.plus_unit(i), omega)
                )
                if lowered.is_zero():
                    continue
                if hat:
                    denom = p ** (ell + 1) * math.factorial(m - q + ell + 1) * I.factorial()
                else:
                    denom = p * math.factorial(m - q + ell + 1) * I.factorial()
                weight = Fraction(
                    math.factorial(m - q) * math.factorial(ell), denom
                )
                if ell % 2:
                    weight = -weight
                partial_i = partial_i + lie_total_iterated(I, lowered).scale(weight)
        result = result + interior_total(i, partial_i)
    return result


def p_tilde(omega: Form) -> Form:
    """Homotopy operator built from composite lowerings (the derivation form)."""
    return _homotopy(omega, hat=False)


def p_hat(omega: Form) -> Form:
    """Homotopy operator built from iterated lowering derivations."""
    return _homotopy(omega, hat=True)


# -- Euler-Lagrange and source forms -----------------------------------------------


def _vertical_support(e: Expr) -> set[tuple[int, MultiIndex]]:
    support: set[tuple[int, MultiIndex]] = set()
    for atom in e.atoms():
        if isinstance(atom, JetCoord):
            support.add((atom.alpha, atom.index))
        elif isinstance(atom, FormalDeriv):
            support.update(atom.decl.dependencies(e.chart))
    return support


def euler_lagrange(L: Expr, k: Optional[int] = None) -> Form:
    """The Euler-Lagrange form of the Lagrangian density L, as a source form."""
    chart = L.chart
    if k is None:
        k = L.jet_order()
    volume = Form.volume(chart)
    support = {
        (alpha, I)
        for alpha, I in _vertical_support(L)
        if I.degree <= k
    }
    out = Form.zero(chart)
    by_alpha: dict[int, Expr] = {}
    for alpha, I in sorted(support):
        term = partial(L, JetCoord(alpha, I))
        if term.is_zero():
            continue
        total = iterated_total(term, I)
        if I.degree % 2:
            total = -total
        by_alpha[alpha] = by_alpha.get(alpha, chart.zero()) + total
    for alpha in sorted(by_alpha):
        coeff = by_alpha[alpha]
        if coeff.is_zero():
            continue
        out = out + wedge(Form.theta(chart, alpha).scale(coeff), volume)
    return out


def is_source_form(omega: Form) -> bool:
    """True when every term is a coefficient times theta^alpha wedge volume."""
    chart = omega.chart
    volume_word = tuple(Dx(i) for i in range(1, chart.m + 1))
    for word in omega.terms:
        if len(word) != chart.m + 1:
            return False
        head, rest = word[0], word[1:]
        if not isinstance(head, Theta) or head.index.degree != 0:
            return False
        if rest != volume_word:
            return False
    return True


def source_coefficients(omega: Form) -> dict[int, Expr]:
    """The coefficient functions of a source form, keyed by dependent index."""
    if not is_source_form(omega):
        raise DomainError("not a source form")
    out: dict[int, Expr] = {}
    for word, coeff in omega.terms.items():
        out[word[0].alpha] = coeff
    return out


def source_residue(omega: Form) -> Form:
    """Project a maximally horizontal 1-contact form onto its source form.

    Equals omega - d_h P omega for the row homotopy operator P, so exact
    forms have zero residue.
    """
    chart = omega.chart
    bd = _require_homogeneous(omega) if not omega.is_zero() else (1, chart.m)
    if bd != (1, chart.m):
        raise DomainError(f"source residue needs bidegree (1, {chart.m}), got {bd}")
    out = Form.zero(chart)
    present: set[tuple[int, MultiIndex]] = set()
    for word in omega.terms:
        for f in word:
            if isinstance(f, Theta):
                present.add((f.alpha, f.index))
    for alpha, I in sorted(present):
        inner = interior_jet(alpha, I, omega)
        if inner.is_zero():
            continue
        term = lie_total_iterated(I, inner)
        if I.degree % 2:
            term = -term
        out = out + wedge(Form.theta(chart, alpha), term)
    return out
