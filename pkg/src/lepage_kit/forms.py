"""Contact-graded differential forms on a jet-coordinate chart.

Forms are stored exclusively in the theta/dx basis, with each wedge word in a
canonical order (contact factors first, sorted by dependent index and jet
multi-index, then coordinate factors sorted by direction; the sign picked up
while sorting is folded into the coefficient).  This makes the contact
bidegree decomposition structural and equality decidable term by term.

The module provides the exterior product, the bicomplex differentials d_h and
d_v, interior products with total-derivative and jet-coordinate directions,
and the horizontal basis forms obtained by contracting the volume form.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import ChartMismatchError, DimensionError, DomainError, OrderCapError
from .expressions import (
    BaseCoord,
    Chart,
    Expr,
    FormalDeriv,
    JetCoord,
    partial,
    total_derivative,
)
from .multiindex import MultiIndex

__all__ = [
    "Dx",
    "Form",
    "Theta",
    "contact_decompose",
    "d_full",
    "d_h",
    "d_v",
    "horizontalize",
    "interior_jet",
    "interior_total",
    "lie_total",
    "omega_basis",
    "wedge",
]


@dataclass(frozen=True, slots=True)
class Theta:
    """The contact basis one-form theta^alpha_I."""

    alpha: int
    index: MultiIndex

    def sort_key(self):
        return (0, self.alpha, self.index.degree, tuple(self.index))


@dataclass(frozen=True, slots=True)
class Dx:
    """The coordinate one-form dx^i."""

    index: int

    def sort_key(self):
        return (1, self.index)


BasisOneForm = Union[Theta, Dx]

Word = tuple[BasisOneForm, ...]


def _sort_word(word: Iterable[BasisOneForm]) -> Optional[tuple[Word, int]]:
    """Canonically sort a wedge word, tracking the permutation sign.

    Returns None when a factor repeats (the word annihilates).
    """
    factors = list(word)
    sign = 1
    # insertion sort keeps the sign bookkeeping obvious; words are short
    for i in range(1, len(factors)):
        j = i
        while j > 0 and factors[j].sort_key() < factors[j - 1].sort_key():
            factors[j], factors[j - 1] = factors[j - 1], factors[j]
            sign = -sign
            j -= 1
    for a, b in zip(factors, factors[1:]):
        if a == b:
            return None
    return tuple(factors), sign


def _word_bidegree(word: Word) -> tuple[int, int]:
    p = sum(1 for f in word if isinstance(f, Theta))
    return p, len(word) - p


def _word_key(word: Word):
    return tuple(f.sort_key() for f in word)


class Form:
    """A differential form, homogeneous in total degree.

    A form may mix contact bidegrees (p, q) with p + q fixed; q never exceeds
    the number of independent variables because coordinate factors cannot
    repeat.  A zero form is compatible with any degree.
    """

    __slots__ = ("chart", "_terms", "_degree", "_hash")

    def __init__(self, chart: Chart, terms: Mapping[Word, Expr]):
        self.chart = chart
        clean: dict[Word, Expr] = {}
        degree = None
        for word, coeff in terms.items():
            if coeff.is_zero():
                continue
            if degree is None:
                degree = len(word)
            elif len(word) != degree:
                raise DomainError("form terms mix total degrees")
            clean[word] = coeff
        self._terms = clean
        self._degree = degree
        self._hash = None

    # -- construction ---------------------------------------------------------

    @staticmethod
    def scalar(e: Expr) -> "Form":
        return Form(e.chart, {(): e})

    @staticmethod
    def zero(chart: Chart) -> "Form":
        return Form(chart, {})

    @staticmethod
    def theta(chart: Chart, alpha: int, index=None) -> "Form":
        I = MultiIndex.zero(chart.m) if index is None else MultiIndex(index)
        if not 1 <= alpha <= chart.n:
            raise DimensionError(f"dependent index {alpha} out of range 1..{chart.n}")
        if len(I) != chart.m:
            raise DimensionError("contact multi-index length does not match chart")
        return Form(chart, {(Theta(alpha, I),): chart.one()})

    @staticmethod
    def dx(chart: Chart, i: int) -> "Form":
        if not 1 <= i <= chart.m:
            raise DimensionError(f"direction {i} out of range 1..{chart.m}")
        return Form(chart, {(Dx(i),): chart.one()})

    @staticmethod
    def volume(chart: Chart) -> "Form":
        word = tuple(Dx(i) for i in range(1, chart.m + 1))
        return Form(chart, {word: chart.one()})

    # -- structure ------------------------------------------------------------

    @property
    def terms(self) -> Mapping[Word, Expr]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> Optional[int]:
        return self._degree

    def bidegrees(self) -> set[tuple[int, int]]:
        return {_word_bidegree(w) for w in self._terms}

    def bidegree(self) -> Optional[tuple[int, int]]:
        """The (p, q) bidegree if homogeneous, else None; None when zero."""
        bds = self.bidegrees()
        if len(bds) == 1:
            return next(iter(bds))
        return None

    def contact_order(self) -> int:
        """Largest |I| among the contact factors present."""
        order = 0
        for word in self._terms:
            for f in word:
                if isinstance(f, Theta):
                    order = max(order, f.index.degree)
        return order

    def form_order(self) -> int:
        """Jet order of the form: max over contact factors and coefficients."""
        order = self.contact_order()
        for coeff in self._terms.values():
            order = max(order, coeff.jet_order())
        return order

    # -- equality -------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Form):
            if other == 0:
                return self.is_zero()
            return NotImplemented
        return self.chart == other.chart and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            items = tuple(sorted(self._terms.items(), key=lambda kv: _word_key(kv[0])))
            self._hash = hash((self.chart, items))
        return self._hash

    # -- linear structure -------------------------------------------------------

    def _check_chart(self, other: "Form") -> None:
        if self.chart != other.chart:
            raise ChartMismatchError("forms live on different charts")

    def __add__(self, other: "Form") -> "Form":
        if not isinstance(other, Form):
            return NotImplemented
        self._check_chart(other)
        terms = dict(self._terms)
        for word, coeff in other._terms.items():
            new = terms[word] + coeff if word in terms else coeff
            if new.is_zero():
                terms.pop(word, None)
            else:
                terms[word] = new
        return Form(self.chart, terms)

    def __neg__(self) -> "Form":
        return Form(self.chart, {w: -c for w, c in self._terms.items()})

    def __sub__(self, other: "Form") -> "Form":
        if not isinstance(other, Form):
            return NotImplemented
        return self + (-other)

    def scale(self, factor) -> "Form":
        if not isinstance(factor, Expr):
            factor = self.chart.const(factor)
        return Form(self.chart, {w: factor * c for w, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, Form):
            return wedge(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __repr__(self) -> str:
        from .render import form_text

        return form_text(self)

    __str__ = __repr__


# -- exterior product ------------------------------------------------------------


def wedge(a: Form, b: Form) -> Form:
    """The exterior product, bilinear and graded-commutative."""
    a._check_chart(b)
    terms: dict[Word, Expr] = {}
    for w1, c1 in a._terms.items():
        for w2, c2 in b._terms.items():
            sorted_word = _sort_word(w1 + w2)
            if sorted_word is None:
                continue
            word, sign = sorted_word
            coeff = c1 * c2
            if sign < 0:
                coeff = -coeff
            if word in terms:
                total = terms[word] + coeff
                if total.is_zero():
                    del terms[word]
                else:
                    terms[word] = total
            else:
                terms[word] = coeff
    return Form(a.chart, terms)


def wedge_all(forms: Sequence[Form]) -> Form:
    if not forms:
        raise DomainError("empty wedge product has no chart")
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


# -- contact decomposition ---------------------------------------------------------


def contact_decompose(omega: Form) -> dict[tuple[int, int], Form]:
    """Split a form into its contact components, keyed by bidegree."""
    buckets: dict[tuple[int, int], dict[Word, Expr]] = {}
    for word, coeff in omega._terms.items():
        buckets.setdefault(_word_bidegree(word), {})[word] = coeff
    return {bd: Form(omega.chart, terms) for bd, terms in buckets.items()}


def contact_part(omega: Form, p: int) -> Form:
    """The p-contact component (summed over horizontal degrees)."""
    terms = {
        w: c for w, c in omega._terms.items() if _word_bidegree(w)[0] == p
    }
    return Form(omega.chart, terms)


def horizontalize(omega: Form) -> Form:
    """The purely horizontal (0-contact) component."""
    return contact_part(omega, 0)


# -- differentials -----------------------------------------------------------------


def _d_v_coefficient(coeff: Expr) -> list[tuple[Expr, Theta]]:
    """Vertical differential of a coefficient as (partial, theta) pairs."""
    chart = coeff.chart
    support: set[tuple[int, MultiIndex]] = set()
    for atom in coeff.atoms():
        if isinstance(atom, JetCoord):
            support.add((atom.alpha, atom.index))
        elif isinstance(atom, FormalDeriv):
            support.update(atom.decl.dependencies(chart))
    out = []
    for alpha, I in sorted(support):
        d = partial(coeff, JetCoord(alpha, I))
        if not d.is_zero():
            out.append((d, Theta(alpha, I)))
    return out


def _wedge_basis_front(basis: BasisOneForm, coeff: Expr, word: Word, out: dict) -> None:
    sorted_word = _sort_word((basis,) + word)
    if sorted_word is None:
        return
    new_word, sign = sorted_word
    if sign < 0:
        coeff = -coeff
    if new_word in out:
        total = out[new_word] + coeff
        if total.is_zero():
            del out[new_word]
        else:
            out[new_word] = total
    else:
        out[new_word] = coeff


def d_h(omega: Form) -> Form:
    """Horizontal differential: (p, q) -> (p, q + 1)."""
    chart = omega.chart
    out: dict[Word, Expr] = {}
    for word, coeff in omega._terms.items():
        for i in range(1, chart.m + 1):
            dcoeff = total_derivative(coeff, i)
            if not dcoeff.is_zero():
                _wedge_basis_front(Dx(i), dcoeff, word, out)
        # d_h theta^a_I = dx^j wedge theta^a_{I+1_j}; dx factors are closed.
        # Wedging the new dx^j at the front absorbs the antiderivation sign:
        # moving it over the k leading factors cancels the (-1)^k prefix.
        for k, factor in enumerate(word):
            if not isinstance(factor, Theta):
                continue
            for j in range(1, chart.m + 1):
                raised = factor.index.plus_unit(j)
                if raised.degree > chart.order_cap:
                    raise OrderCapError(
                        f"horizontal differential would reach jet order "
                        f"{raised.degree}, beyond the cap {chart.order_cap}"
                    )
                rest = word[:k] + (Theta(factor.alpha, raised),) + word[k + 1 :]
                sorted_word = _sort_word((Dx(j),) + rest)
                if sorted_word is None:
                    continue
                new_word, sign = sorted_word
                c = coeff if sign > 0 else -coeff
                if new_word in out:
                    total = out[new_word] + c
                    if total.is_zero():
                        del out[new_word]
                    else:
                        out[new_word] = total
                else:
                    out[new_word] = c
    return Form(chart, out)


def d_v(omega: Form) -> Form:
    """Vertical differential: (p, q) -> (p + 1, q)."""
    out: dict[Word, Expr] = {}
    for word, coeff in omega._terms.items():
        for dcoeff, theta in _d_v_coefficient(coeff):
            _wedge_basis_front(theta, dcoeff, word, out)
    return Form(omega.chart, out)


def d_full(omega: Form) -> Form:
    """The exterior derivative d = d_h + d_v in the contact basis."""
    return d_h(omega) + d_v(omega)


def lie_total(i: int, omega: Form) -> Form:
    """Lie derivative along the total derivative d_i, a degree-0 derivation.

    Coefficients are totally differentiated, contact factors are raised and
    coordinate factors are annihilated; iterating this over a multi-index
    realizes d_I acting on forms.
    """
    chart = omega.chart
    out: dict[Word, Expr] = {}

    def put(word: Word, coeff: Expr) -> None:
        if word in out:
            total = out[word] + coeff
            if total.is_zero():
                del out[word]
            else:
                out[word] = total
        else:
            out[word] = coeff

    for word, coeff in omega._terms.items():
        dcoeff = total_derivative(coeff, i)
        if not dcoeff.is_zero():
            put(word, dcoeff)
        for k, factor in enumerate(word):
            if not isinstance(factor, Theta):
                continue
            raised = factor.index.plus_unit(i)
            if raised.degree > chart.order_cap:
                raise OrderCapError(
                    f"total derivative of a contact factor would reach jet order "
                    f"{raised.degree}, beyond the cap {chart.order_cap}"
                )
            rest = word[:k] + (Theta(factor.alpha, raised),) + word[k + 1 :]
            sorted_word = _sort_word(rest)
            if sorted_word is None:
                continue
            new_word, sign = sorted_word
            put(new_word, coeff if sign > 0 else -coeff)
    return Form(chart, out)


def lie_total_iterated(I: MultiIndex, omega: Form) -> Form:
    out = omega
    for i in range(1, omega.chart.m + 1):
        for _ in range(I.count(i)):
            out = lie_total(i, out)
    return out


# -- interior products ---------------------------------------------------------------


def _interior(omega: Form, match) -> Form:
    out: dict[Word, Expr] = {}
    for word, coeff in omega._terms.items():
        for k, factor in enumerate(word):
            if not match(factor):
                continue
            sign = -1 if k % 2 else 1
            new_word = word[:k] + word[k + 1 :]
            c = coeff if sign > 0 else -coeff
            if new_word in out:
                total = out[new_word] + c
                if total.is_zero():
                    del out[new_word]
                else:
                    out[new_word] = total
            else:
                out[new_word] = c
    return Form(omega.chart, out)


def interior_total(i: int, omega: Form) -> Form:
    """Interior product with the total derivative d_i (kills contact factors)."""
    if not 1 <= i <= omega.chart.m:
        raise DimensionError(f"direction {i} out of range 1..{omega.chart.m}")
    return _interior(omega, lambda f: isinstance(f, Dx) and f.index == i)


def interior_jet(alpha: int, index, omega: Form) -> Form:
    """Interior product with the coordinate vector field along u^alpha_I."""
    I = MultiIndex(index)
    if not 1 <= alpha <= omega.chart.n:
        raise DimensionError(f"dependent index {alpha} out of range 1..{omega.chart.n}")
    return _interior(
        omega, lambda f: isinstance(f, Theta) and f.alpha == alpha and f.index == I
    )


def omega_basis(chart: Chart, indices: Sequence[int] = ()) -> Form:
    """The horizontal basis forms obtained by contracting the volume form.

    The empty list yields the volume form itself; each listed direction
    contracts the current form in order, so a repeated direction returns the
    zero form rather than raising.
    """
    out = Form.volume(chart)
    for i in indices:
        out = interior_total(i, out)
    return out
