"""Exact-rational expression kernel over jet-coordinate atoms.

Expressions are multivariate Laurent-restricted polynomials over four kinds of
atoms: base coordinates x^i, jet coordinates u^alpha_I, connection coefficients
Gamma^h_K (with an attached x-derivative record) and formal-function derivative
symbols.  Coefficients are exact rationals and every value is kept in a unique
canonical normal form, so equality is decidable by direct comparison.

All values are immutable; every operation is a pure function.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import (
    ChartMismatchError,
    DimensionError,
    OrderCapError,
    SubstitutionError,
)
from .multiindex import MultiIndex, indices_up_to_degree, multinomial, splittings

__all__ = [
    "Atom",
    "BaseCoord",
    "Chart",
    "ConnGamma",
    "Expr",
    "FormalDeriv",
    "FormalFunctionDecl",
    "JetCoord",
    "iterated_total",
    "leibniz_total",
    "partial",
    "substitute",
    "total_derivative",
]

Rational = Union[int, Fraction]


@dataclass(frozen=True, slots=True)
class Chart:
    """A single coordinate chart: m independent and n dependent variables.

    Every expression and form in one computation shares one chart.  The
    order cap bounds the jet order reachable by total derivatives; hitting
    it is a hard error, never a silent truncation.
    """

    m: int
    n: int
    order_cap: int = 10

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise DimensionError(f"chart needs m >= 1 and n >= 1, got ({self.m}, {self.n})")
        if self.order_cap < 1:
            raise DimensionError("order cap must be at least 1")

    # -- expression factories ------------------------------------------------

    def const(self, value: Rational) -> "Expr":
        value = Fraction(value)
        if value == 0:
            return Expr(self, {})
        return Expr(self, {(): value})

    def zero(self) -> "Expr":
        return Expr(self, {})

    def one(self) -> "Expr":
        return self.const(1)

    def x(self, i: int) -> "Expr":
        return Expr.atom(self, BaseCoord(i))

    def u(self, alpha: int, index=None) -> "Expr":
        I = MultiIndex.zero(self.m) if index is None else MultiIndex(index)
        return Expr.atom(self, JetCoord(alpha, I))

    def formal(
        self,
        name: str,
        order: int = 0,
        nonvanishing: bool = False,
        jet_deps=None,
    ) -> "Expr":
        decl = FormalFunctionDecl(name, order, nonvanishing, _normalize_deps(jet_deps))
        return Expr.atom(self, FormalDeriv(decl, MultiIndex.zero(self.m), ()))

    def mi(self, *entries) -> MultiIndex:
        if len(entries) == 1 and isinstance(entries[0], (tuple, list)):
            entries = tuple(entries[0])
        if len(entries) != self.m:
            raise DimensionError(f"expected {self.m} entries, got {len(entries)}")
        return MultiIndex(entries)

    def unit(self, i: int) -> MultiIndex:
        return MultiIndex.unit(self.m, i)


def _normalize_deps(jet_deps):
    if jet_deps is None:
        return None
    return tuple(sorted((int(a), MultiIndex(I)) for a, I in jet_deps))


@dataclass(frozen=True, slots=True)
class FormalFunctionDecl:
    """Declaration of a formal function of the chart coordinates.

    The function depends on all base coordinates and, unless an explicit
    dependency list is given, on every jet coordinate u^alpha_I with
    |I| <= max_jet_order.  Only nonvanishing-declared functions may appear
    with negative powers.
    """

    name: str
    max_jet_order: int
    nonvanishing: bool = False
    jet_deps: Optional[tuple[tuple[int, MultiIndex], ...]] = None

    def dependencies(self, chart: Chart) -> list[tuple[int, MultiIndex]]:
        if self.jet_deps is not None:
            return list(self.jet_deps)
        deps = []
        for alpha in range(1, chart.n + 1):
            for I in indices_up_to_degree(chart.m, self.max_jet_order):
                deps.append((alpha, I))
        return deps

    def depends_on(self, chart: Chart, alpha: int, I: MultiIndex) -> bool:
        if self.jet_deps is not None:
            return (alpha, I) in self.jet_deps
        return 1 <= alpha <= chart.n and I.degree <= self.max_jet_order


@dataclass(frozen=True, slots=True)
class BaseCoord:
    """The base coordinate x^i."""

    index: int

    def sort_key(self):
        return (0, self.index)


@dataclass(frozen=True, slots=True)
class JetCoord:
    """The jet coordinate u^alpha_I."""

    alpha: int
    index: MultiIndex

    def sort_key(self):
        return (1, self.alpha, self.index.degree, tuple(self.index))


@dataclass(frozen=True, slots=True)
class ConnGamma:
    """A connection coefficient Gamma^h_K with |K| >= 2, under d^|D|/dx^D.

    The lower multi-index is symmetrized by construction; |K| = 1 is never
    stored since it denotes the Kronecker delta.  The derivative record D
    makes these atoms closed under total derivatives, which the recursive
    prolongation of a symbolic connection requires.
    """

    upper: int
    lower: MultiIndex
    deriv: MultiIndex

    def __post_init__(self):
        if self.lower.degree < 2:
            raise DimensionError("connection atoms require |K| >= 2")
        if len(self.lower) != len(self.deriv):
            raise DimensionError("lower and derivative multi-indices differ in length")

    def sort_key(self):
        return (2, self.upper, tuple(self.lower), tuple(self.deriv))


@dataclass(frozen=True, slots=True)
class FormalDeriv:
    """A derivative record of a formal function.

    ``deriv`` counts partial x-derivatives; ``jet_deps`` is the sorted
    multiset of jet-coordinate partials applied (mixed partials commute, so
    the sorted tuple is canonical).  The bare function is the record with
    ``deriv`` zero and no jet partials.
    """

    decl: FormalFunctionDecl
    deriv: MultiIndex
    jet_deps: tuple[tuple[int, MultiIndex], ...]

    def sort_key(self):
        return (
            3,
            self.decl.name,
            tuple(self.deriv),
            tuple((a, tuple(I)) for a, I in self.jet_deps),
        )

    def is_bare(self) -> bool:
        return self.deriv.degree == 0 and not self.jet_deps

    def with_x_partial(self, i: int) -> "FormalDeriv":
        return FormalDeriv(self.decl, self.deriv.plus_unit(i), self.jet_deps)

    def with_jet_partial(self, alpha: int, I: MultiIndex) -> "FormalDeriv":
        deps = tuple(sorted(self.jet_deps + ((alpha, I),)))
        return FormalDeriv(self.decl, self.deriv, deps)


Atom = Union[BaseCoord, JetCoord, ConnGamma, FormalDeriv]

Monomial = tuple[tuple[Atom, int], ...]


def _atom_invertible(atom: Atom) -> bool:
    return isinstance(atom, FormalDeriv) and atom.is_bare() and atom.decl.nonvanishing


def _validate_atom(chart: Chart, atom: Atom) -> None:
    if isinstance(atom, BaseCoord):
        if not 1 <= atom.index <= chart.m:
            raise DimensionError(f"x index {atom.index} out of range 1..{chart.m}")
    elif isinstance(atom, JetCoord):
        if not 1 <= atom.alpha <= chart.n:
            raise DimensionError(f"dependent index {atom.alpha} out of range 1..{chart.n}")
        if len(atom.index) != chart.m:
            raise DimensionError(
                f"jet multi-index length {len(atom.index)} does not match m={chart.m}"
            )
        if atom.index.degree > chart.order_cap:
            raise OrderCapError(
                f"jet order {atom.index.degree} exceeds cap {chart.order_cap}"
            )
    elif isinstance(atom, ConnGamma):
        if not 1 <= atom.upper <= chart.m:
            raise DimensionError(f"Gamma upper index {atom.upper} out of range 1..{chart.m}")
        if len(atom.lower) != chart.m:
            raise DimensionError("Gamma lower multi-index length does not match chart")
    elif isinstance(atom, FormalDeriv):
        if len(atom.deriv) != chart.m:
            raise DimensionError("formal derivative record length does not match chart")
        for alpha, I in atom.jet_deps:
            if len(I) != chart.m:
                raise DimensionError("formal jet dependency length does not match chart")
    else:
        raise TypeError(f"not an atom: {atom!r}")


class Expr:
    """A canonical exact-rational expression.

    Stored as a map from monomials (sorted atom-power tuples) to nonzero
    Fraction coefficients.  Two expressions are equal exactly when their
    charts and term maps coincide.
    """

    __slots__ = ("chart", "_terms", "_hash")

    def __init__(self, chart: Chart, terms: Mapping[Monomial, Fraction]):
        self.chart = chart
        self._terms = {k: v for k, v in terms.items() if v != 0}
        self._hash = None

    # -- construction ---------------------------------------------------------

    @staticmethod
    def atom(chart: Chart, atom: Atom, power: int = 1) -> "Expr":
        _validate_atom(chart, atom)
        if power == 0:
            return chart.one()
        if power < 0 and not _atom_invertible(atom):
            raise SubstitutionError(
                f"negative powers are allowed only for nonvanishing formal functions: {atom!r}"
            )
        return Expr(chart, {((atom, power),): Fraction(1)})

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def atoms(self) -> set:
        out = set()
        for mono in self._terms:
            for atom, _ in mono:
                out.add(atom)
        return out

    def jet_order(self) -> int:
        """Highest jet order this expression involves, through formal deps too."""
        order = 0
        for atom in self.atoms():
            if isinstance(atom, JetCoord):
                order = max(order, atom.index.degree)
            elif isinstance(atom, FormalDeriv):
                if atom.decl.jet_deps is not None:
                    for _, I in atom.decl.jet_deps:
                        order = max(order, I.degree)
                else:
                    order = max(order, atom.decl.max_jet_order)
        return order

    def constant_value(self) -> Optional[Fraction]:
        """The rational value if the expression is constant, else None."""
        if not self._terms:
            return Fraction(0)
        if len(self._terms) == 1 and () in self._terms:
            return self._terms[()]
        return None

    # -- equality and hashing ---------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expr):
            value = self.constant_value()
            if value is not None and isinstance(other, (int, Fraction)):
                return value == other
            return NotImplemented
        return self.chart == other.chart and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            items = tuple(sorted(self._terms.items(), key=lambda kv: _mono_key(kv[0])))
            self._hash = hash((self.chart, items))
        return self._hash

    # -- arithmetic ---------------------------------------------------------

    def _check_chart(self, other: "Expr") -> None:
        if self.chart != other.chart:
            raise ChartMismatchError("expressions live on different charts")

    def _coerce(self, other) -> "Expr":
        if isinstance(other, Expr):
            return other
        if isinstance(other, (int, Fraction)):
            return self.chart.const(other)
        raise TypeError(f"cannot combine Expr with {type(other).__name__}")

    def __add__(self, other) -> "Expr":
        other = self._coerce(other)
        self._check_chart(other)
        terms = dict(self._terms)
        for mono, coeff in other._terms.items():
            new = terms.get(mono, Fraction(0)) + coeff
            if new == 0:
                terms.pop(mono, None)
            else:
                terms[mono] = new
        return Expr(self.chart, terms)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr(self.chart, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Expr":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Expr":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "Expr":
        other = self._coerce(other)
        self._check_chart(other)
        terms: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                mono = _mono_mul(m1, m2)
                new = terms.get(mono, Fraction(0)) + c1 * c2
                if new == 0:
                    terms.pop(mono, None)
                else:
                    terms[mono] = new
        return Expr(self.chart, terms)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "Expr":
        if not isinstance(exponent, int):
            raise TypeError("expression powers must be integers")
        if exponent == 0:
            return self.chart.one()
        if exponent < 0:
            return self.inverse() ** (-exponent)
        out = self
        for _ in range(exponent - 1):
            out = out * self
        return out

    def inverse(self) -> "Expr":
        """Reciprocal of a single-term expression in invertible atoms."""
        if len(self._terms) != 1:
            raise SubstitutionError("only single-term expressions are invertible")
        ((mono, coeff),) = self._terms.items()
        for atom, _ in mono:
            if not _atom_invertible(atom):
                raise SubstitutionError(
                    f"cannot invert a term containing {atom!r}; only nonvanishing "
                    "formal functions are invertible"
                )
        inv = tuple((atom, -p) for atom, p in mono)
        return Expr(self.chart, {inv: Fraction(1) / coeff})

    def __truediv__(self, other) -> "Expr":
        other = self._coerce(other)
        return self * other.inverse()

    def __rtruediv__(self, other) -> "Expr":
        return self._coerce(other) * self.inverse()

    def __repr__(self) -> str:
        from .render import expr_text

        return expr_text(self)

    __str__ = __repr__


def _mono_key(mono: Monomial):
    return tuple((atom.sort_key(), power) for atom, power in mono)


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    powers: dict = {}
    order: list = []
    for atom, p in itertools.chain(m1, m2):
        if atom in powers:
            powers[atom] += p
        else:
            powers[atom] = p
            order.append(atom)
    out = [(atom, powers[atom]) for atom in order if powers[atom] != 0]
    out.sort(key=lambda ap: ap[0].sort_key())
    return tuple(out)


def _mono_expr(chart: Chart, mono: Monomial, coeff: Fraction) -> Expr:
    return Expr(chart, {mono: coeff})


# -- differentiation -----------------------------------------------------------


def _atom_partial(chart: Chart, atom: Atom, wrt: Atom) -> Expr:
    """Derivative of a single atom with respect to another atom.

    Identical atoms differentiate to one; formal-function records also carry
    functional dependence on base and jet coordinates, and connection atoms
    on base coordinates.
    """
    if atom == wrt:
        return chart.one()
    if isinstance(atom, FormalDeriv):
        if isinstance(wrt, BaseCoord):
            return Expr.atom(chart, atom.with_x_partial(wrt.index))
        if isinstance(wrt, JetCoord) and atom.decl.depends_on(chart, wrt.alpha, wrt.index):
            return Expr.atom(chart, atom.with_jet_partial(wrt.alpha, wrt.index))
        return chart.zero()
    if isinstance(atom, ConnGamma) and isinstance(wrt, BaseCoord):
        return Expr.atom(
            chart, ConnGamma(atom.upper, atom.lower, atom.deriv.plus_unit(wrt.index))
        )
    return chart.zero()


def partial(e: Expr, wrt: Atom) -> Expr:
    """Exact partial derivative of an expression with respect to an atom."""
    chart = e.chart
    _validate_atom(chart, wrt)
    out = chart.zero()
    for mono, coeff in e._terms.items():
        for k, (atom, power) in enumerate(mono):
            datom = _atom_partial(chart, atom, wrt)
            if datom.is_zero():
                continue
            rest = mono[:k] + ((atom, power - 1),) if power != 1 else mono[:k]
            rest = rest + mono[k + 1 :]
            rest = tuple(ap for ap in rest if ap[1] != 0)
            out = out + _mono_expr(chart, rest, coeff * power) * datom
    return out


def _atom_total(chart: Chart, atom: Atom, i: int) -> Expr:
    """Total derivative d_i of a single atom."""
    if isinstance(atom, BaseCoord):
        return chart.one() if atom.index == i else chart.zero()
    if isinstance(atom, JetCoord):
        raised = atom.index.plus_unit(i)
        if raised.degree > chart.order_cap:
            raise OrderCapError(
                f"total derivative would reach jet order {raised.degree}, "
                f"beyond the cap {chart.order_cap}"
            )
        return Expr.atom(chart, JetCoord(atom.alpha, raised))
    if isinstance(atom, ConnGamma):
        return Expr.atom(chart, ConnGamma(atom.upper, atom.lower, atom.deriv.plus_unit(i)))
    if isinstance(atom, FormalDeriv):
        out = Expr.atom(chart, atom.with_x_partial(i))
        for alpha, I in atom.decl.dependencies(chart):
            raised = I.plus_unit(i)
            if raised.degree > chart.order_cap:
                raise OrderCapError(
                    f"total derivative would reach jet order {raised.degree}, "
                    f"beyond the cap {chart.order_cap}"
                )
            out = out + Expr.atom(chart, JetCoord(alpha, raised)) * Expr.atom(
                chart, atom.with_jet_partial(alpha, I)
            )
        return out
    raise TypeError(f"not an atom: {atom!r}")


def total_derivative(e: Expr, i: int) -> Expr:
    """The total derivative d_i, raising jet order by at most one."""
    chart = e.chart
    if not 1 <= i <= chart.m:
        raise DimensionError(f"direction {i} out of range 1..{chart.m}")
    out = chart.zero()
    cache: dict[Atom, Expr] = {}
    for mono, coeff in e._terms.items():
        for k, (atom, power) in enumerate(mono):
            datom = cache.get(atom)
            if datom is None:
                datom = _atom_total(chart, atom, i)
                cache[atom] = datom
            if datom.is_zero():
                continue
            rest = mono[:k] + ((atom, power - 1),) if power != 1 else mono[:k]
            rest = rest + mono[k + 1 :]
            rest = tuple(ap for ap in rest if ap[1] != 0)
            out = out + _mono_expr(chart, rest, coeff * power) * datom
    return out


def iterated_total(e: Expr, I: MultiIndex) -> Expr:
    """d_I, the composition of total derivatives prescribed by I."""
    if len(I) != e.chart.m:
        raise DimensionError("multi-index length does not match chart")
    out = e
    for i in range(1, e.chart.m + 1):
        for _ in range(I.count(i)):
            out = total_derivative(out, i)
    return out


def leibniz_total(f: Expr, g: Expr, I: MultiIndex) -> Expr:
    """d_I(f g) expanded by the multi-index Leibniz rule."""
    f._check_chart(g)
    if len(I) != f.chart.m:
        raise DimensionError("multi-index length does not match chart")
    out = f.chart.zero()
    for K, rest in splittings(I):
        out = out + f.chart.const(multinomial(I, K)) * iterated_total(f, K) * iterated_total(
            g, rest
        )
    return out


# -- substitution ---------------------------------------------------------------


def _derive_replacement(chart: Chart, value: Expr, atom) -> Expr:
    """Apply an atom's derivative record to the replacement of its base symbol."""
    out = value
    if isinstance(atom, FormalDeriv):
        for alpha, I in atom.jet_deps:
            out = partial(out, JetCoord(alpha, I))
        deriv = atom.deriv
    else:
        deriv = atom.deriv
    for i in range(1, chart.m + 1):
        for _ in range(deriv.count(i)):
            out = partial(out, BaseCoord(i))
    return out


def substitute(e: Expr, bindings: Mapping[Atom, Expr]) -> Expr:
    """Simultaneous substitution of atoms by expressions, then renormalization.

    Binding the bare record of a formal function (or an underived connection
    coefficient) also rewrites its derived records, by chaining the recorded
    partial derivatives through the replacement.
    """
    chart = e.chart
    heads: dict = {}
    direct: dict = {}
    for atom, value in bindings.items():
        _validate_atom(chart, atom)
        if not isinstance(value, Expr):
            value = chart.const(value)
        if value.chart != chart:
            raise ChartMismatchError("binding value lives on a different chart")
        if atom in value.atoms():
            raise SubstitutionError(f"cyclic binding for {atom!r}")
        direct[atom] = value
        if isinstance(atom, FormalDeriv) and atom.is_bare():
            heads[("formal", atom.decl)] = value
        elif isinstance(atom, ConnGamma) and atom.deriv.degree == 0:
            heads[("gamma", atom.upper, atom.lower)] = value

    def replacement(atom: Atom) -> Optional[Expr]:
        if atom in direct:
            return direct[atom]
        if isinstance(atom, FormalDeriv):
            value = heads.get(("formal", atom.decl))
            if value is not None:
                return _derive_replacement(chart, value, atom)
        if isinstance(atom, ConnGamma) and atom.deriv.degree > 0:
            value = heads.get(("gamma", atom.upper, atom.lower))
            if value is not None:
                return _derive_replacement(chart, value, atom)
        return None

    out = chart.zero()
    for mono, coeff in e._terms.items():
        term = chart.const(coeff)
        for atom, power in mono:
            value = replacement(atom)
            if value is None:
                factor = Expr(chart, {((atom, power),): Fraction(1)})
            elif power >= 0:
                factor = value**power
            else:
                factor = value.inverse() ** (-power)
            term = term * factor
            if term.is_zero():
                break
        out = out + term
    return out
