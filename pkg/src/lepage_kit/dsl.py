"""Problem-definition DSL: a small declarative language for charts,
Lagrangians, formal functions, connections and named forms.

Statements end with semicolons; ``#`` starts a comment.  A minimal problem::

    m = 2; n = 1;
    L: order=1 1/2*(u[1;1,0]^2 + u[1;0,1]^2);

Jet coordinates are written ``u[alpha; c1,...,cm]`` with the multi-index as
explicit counts; connection entries use index pairs, ``Gamma[i; j,k]``.
Expressions admit ``+ - * / ^``, exact integer and rational literals, the
form tokens ``dx[i]``, ``theta[alpha; I]``, ``w0`` and ``w[i]``, declared
formal-function names, and derivative records ``D[F; I]`` or
``D[F; I; u[a;J],...]``.  Parse errors carry the source position and the
token kinds that would have been accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

from .connections import Connection
from .errors import DimensionError, DomainError, OrderCapError, ParseError
from .expressions import (
    BaseCoord,
    Chart,
    ConnGamma,
    Expr,
    FormalDeriv,
    FormalFunctionDecl,
    JetCoord,
)
from .forms import Form, omega_basis, wedge
from .lepage import LagrangianSpec
from .multiindex import MultiIndex

__all__ = ["ProblemSpec", "parse_expression", "parse_form", "parse_problem"]

_RESERVED = {"x", "u", "dx", "theta", "w", "w0", "D", "Gamma"}

_PUNCT = {
    "[": "LBRACK",
    "]": "RBRACK",
    "(": "LPAREN",
    ")": "RPAREN",
    ";": "SEMI",
    ":": "COLON",
    ",": "COMMA",
    "=": "EQ",
    "+": "PLUS",
    "-": "MINUS",
    "*": "STAR",
    "/": "SLASH",
    "^": "CARET",
}


@dataclass(frozen=True)
class _Token:
    kind: str
    value: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            start = i
            while i < len(text) and text[i].isdigit():
                i += 1
            tokens.append(_Token("NUM", text[start:i], line, col))
            col += i - start
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < len(text) and (text[i].isalnum() or text[i] == "_"):
                i += 1
            tokens.append(_Token("NAME", text[start:i], line, col))
            col += i - start
            continue
        if ch in _PUNCT:
            tokens.append(_Token(_PUNCT[ch], ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


Value = Union[Expr, Form]


class _Parser:
    def __init__(self, text: str, chart: Optional[Chart] = None,
                 formals: Optional[Mapping[str, FormalFunctionDecl]] = None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.chart = chart
        self.formals: dict[str, FormalFunctionDecl] = dict(formals or {})

    # -- token plumbing -------------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def check(self, kind: str, value: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def accept(self, kind: str, value: Optional[str] = None) -> Optional[_Token]:
        if self.check(kind, value):
            return self.advance()
        return None

    def expect(self, kind: str, value: Optional[str] = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            raise ParseError(
                f"found {tok.value!r}", tok.line, tok.column, expected=(want,)
            )
        return self.advance()

    def fail(self, message: str, expected=()) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.column, expected=expected)

    # -- shared helpers ---------------------------------------------------------

    def need_chart(self) -> Chart:
        if self.chart is None:
            tok = self.peek()
            raise ParseError(
                "the chart dimensions m and n must be declared first",
                tok.line,
                tok.column,
            )
        return self.chart

    def int_value(self) -> int:
        return int(self.expect("NUM").value)

    def int_list(self) -> list[int]:
        out = [self.int_value()]
        while self.accept("COMMA"):
            out.append(self.int_value())
        return out

    def counts_vector(self) -> MultiIndex:
        chart = self.need_chart()
        tok = self.peek()
        counts = self.int_list()
        if len(counts) != chart.m:
            raise ParseError(
                f"multi-index has {len(counts)} entries, chart has m={chart.m}",
                tok.line,
                tok.column,
            )
        return MultiIndex(counts)

    def base_index(self) -> int:
        chart = self.need_chart()
        tok = self.peek()
        i = self.int_value()
        if not 1 <= i <= chart.m:
            raise ParseError(f"direction {i} out of range 1..{chart.m}", tok.line, tok.column)
        return i

    def dependent_index(self) -> int:
        chart = self.need_chart()
        tok = self.peek()
        a = self.int_value()
        if not 1 <= a <= chart.n:
            raise ParseError(
                f"dependent index {a} out of range 1..{chart.n}", tok.line, tok.column
            )
        return a

    # -- expression grammar -------------------------------------------------------

    def expression(self) -> Value:
        tok = self.peek()
        negate = bool(self.accept("MINUS"))
        value = self.term()
        if negate:
            value = -value
        while True:
            if self.accept("PLUS"):
                value = self._add(value, self.term(), tok)
            elif self.accept("MINUS"):
                value = self._add(value, -self.term(), tok)
            else:
                return value

    def _add(self, a: Value, b: Value, tok: _Token) -> Value:
        try:
            if isinstance(a, Expr) and isinstance(b, Expr):
                return a + b
            if isinstance(a, Form) and isinstance(b, Form):
                return a + b
            expr, form = (a, b) if isinstance(a, Expr) else (b, a)
            if form.is_zero() or form.degree == 0:
                return Form.scalar(expr) + form
            if expr.is_zero():
                return form
        except (DomainError, DimensionError, OrderCapError) as exc:
            raise ParseError(str(exc), tok.line, tok.column)
        raise ParseError(
            "cannot add a scalar to a form of positive degree", tok.line, tok.column
        )

    def term(self) -> Value:
        value = self.factor()
        while True:
            tok = self.peek()
            if self.accept("STAR"):
                rhs = self.factor()
                value = self._mul(value, rhs, tok)
            elif self.accept("SLASH"):
                rhs = self.factor()
                if not isinstance(rhs, Expr):
                    raise ParseError("cannot divide by a form", tok.line, tok.column)
                try:
                    inv = rhs.inverse()
                except Exception as exc:
                    raise ParseError(f"cannot invert divisor: {exc}", tok.line, tok.column)
                value = self._mul(value, inv, tok)
            else:
                return value

    def _mul(self, a: Value, b: Value, tok: _Token) -> Value:
        if isinstance(a, Expr) and isinstance(b, Expr):
            return a * b
        if isinstance(a, Form) and isinstance(b, Form):
            return wedge(a, b)
        if isinstance(a, Expr):
            return b.scale(a)
        return a.scale(b)

    def factor(self) -> Value:
        value = self.primary()
        if self.accept("CARET"):
            sign = -1 if self.accept("MINUS") else 1
            tok = self.peek()
            power = sign * self.int_value()
            if isinstance(value, Form):
                raise ParseError("forms cannot be raised to powers", tok.line, tok.column)
            try:
                return value**power
            except Exception as exc:
                raise ParseError(f"cannot raise to {power}: {exc}", tok.line, tok.column)
        return value

    def primary(self) -> Value:
        tok = self.peek()
        if self.accept("LPAREN"):
            value = self.expression()
            self.expect("RPAREN")
            return value
        if tok.kind == "NUM":
            self.advance()
            return self.need_chart().const(int(tok.value))
        if tok.kind == "NAME":
            return self.atomref()
        raise self.fail(
            f"found {tok.value!r}", expected=("number", "name", "(")
        )

    def atomref(self) -> Value:
        chart = self.need_chart()
        tok = self.expect("NAME")
        name = tok.value
        if name == "x":
            self.expect("LBRACK")
            i = self.base_index()
            self.expect("RBRACK")
            return chart.x(i)
        if name == "u":
            self.expect("LBRACK")
            a = self.dependent_index()
            self.expect("SEMI")
            I = self.counts_vector()
            self.expect("RBRACK")
            if I.degree > chart.order_cap:
                raise ParseError(
                    f"jet order {I.degree} beyond the cap {chart.order_cap}",
                    tok.line,
                    tok.column,
                )
            return chart.u(a, I)
        if name == "dx":
            self.expect("LBRACK")
            i = self.base_index()
            self.expect("RBRACK")
            return Form.dx(chart, i)
        if name == "theta":
            self.expect("LBRACK")
            a = self.dependent_index()
            self.expect("SEMI")
            I = self.counts_vector()
            self.expect("RBRACK")
            return Form.theta(chart, a, I)
        if name == "w0":
            return Form.volume(chart)
        if name == "w":
            self.expect("LBRACK")
            indices = self.int_list()
            self.expect("RBRACK")
            for i in indices:
                if not 1 <= i <= chart.m:
                    raise ParseError(
                        f"direction {i} out of range 1..{chart.m}", tok.line, tok.column
                    )
            return omega_basis(chart, indices)
        if name == "Gamma":
            upper, lower = self.gamma_indices()
            return Expr.atom(
                chart, ConnGamma(upper, lower, MultiIndex.zero(chart.m))
            )
        if name == "D":
            return self.derivative_record(tok)
        decl = self.formals.get(name)
        if decl is None:
            raise ParseError(f"unknown identifier {name!r}", tok.line, tok.column)
        return Expr.atom(chart, FormalDeriv(decl, MultiIndex.zero(chart.m), ()))

    def gamma_indices(self) -> tuple[int, MultiIndex]:
        chart = self.need_chart()
        self.expect("LBRACK")
        tok = self.peek()
        upper = self.base_index()
        self.expect("SEMI")
        labels = self.int_list()
        if len(labels) < 2:
            raise ParseError(
                "connection coefficients need at least two lower indices",
                tok.line,
                tok.column,
            )
        for i in labels:
            if not 1 <= i <= chart.m:
                raise ParseError(f"direction {i} out of range 1..{chart.m}", tok.line, tok.column)
        self.expect("RBRACK")
        return upper, MultiIndex.from_index_list(chart.m, labels)

    def derivative_record(self, tok: _Token) -> Expr:
        chart = self.need_chart()
        self.expect("LBRACK")
        head = self.expect("NAME")
        if head.value == "Gamma":
            upper, lower = self.gamma_indices()
            self.expect("SEMI")
            D = self.counts_vector()
            self.expect("RBRACK")
            return Expr.atom(chart, ConnGamma(upper, lower, D))
        decl = self.formals.get(head.value)
        if decl is None:
            raise ParseError(f"unknown formal function {head.value!r}", head.line, head.column)
        self.expect("SEMI")
        D = self.counts_vector()
        deps: list[tuple[int, MultiIndex]] = []
        if self.accept("SEMI"):
            while True:
                utok = self.expect("NAME")
                if utok.value != "u":
                    raise ParseError(
                        "expected a jet coordinate in the derivative record",
                        utok.line,
                        utok.column,
                        expected=("u",),
                    )
                self.expect("LBRACK")
                a = self.dependent_index()
                self.expect("SEMI")
                I = self.counts_vector()
                self.expect("RBRACK")
                if not decl.depends_on(chart, a, I):
                    raise ParseError(
                        f"{decl.name} does not depend on that jet coordinate",
                        utok.line,
                        utok.column,
                    )
                deps.append((a, I))
                if not self.accept("COMMA"):
                    break
        self.expect("RBRACK")
        atom = FormalDeriv(decl, D, tuple(sorted(deps)))
        return Expr.atom(chart, atom)


@dataclass
class ProblemSpec:
    """A parsed problem file: one chart plus named objects."""

    chart: Chart
    lagrangians: dict[str, LagrangianSpec] = field(default_factory=dict)
    connections: dict[str, Connection] = field(default_factory=dict)
    formals: dict[str, FormalFunctionDecl] = field(default_factory=dict)
    forms: dict[str, Form] = field(default_factory=dict)


class _ProblemParser(_Parser):
    def __init__(self, text: str, order_cap: Optional[int] = None):
        super().__init__(text)
        self.m: Optional[int] = None
        self.n: Optional[int] = None
        self.order_cap = order_cap
        self.cap_declared: Optional[int] = None
        self.lagrangians: dict[str, LagrangianSpec] = {}
        self.forms: dict[str, Form] = {}
        self.connection_entries: dict[str, dict[tuple[int, int, int], Expr]] = {}
        self.connection_mode: dict[str, str] = {}
        self.used_names: set[str] = set()

    def ensure_chart(self, tok: _Token) -> None:
        if self.chart is None:
            if self.m is None or self.n is None:
                raise ParseError(
                    "declare m and n before other statements", tok.line, tok.column
                )
            cap = self.order_cap if self.order_cap is not None else (
                self.cap_declared if self.cap_declared is not None else 10
            )
            self.chart = Chart(self.m, self.n, cap)

    def unique_name(self, tok: _Token) -> None:
        if tok.value in self.used_names:
            raise ParseError(f"name {tok.value!r} already defined", tok.line, tok.column)
        self.used_names.add(tok.value)

    def parse(self) -> ProblemSpec:
        while not self.check("EOF"):
            self.statement()
        tok = self.peek()
        self.ensure_chart(tok)
        connections = {}
        for name, mode in self.connection_mode.items():
            if mode == "symbolic":
                connections[name] = Connection.symbolic(self.chart)
            else:
                connections[name] = Connection.from_entries(
                    self.chart, self.connection_entries.get(name, {})
                )
        return ProblemSpec(
            chart=self.chart,
            lagrangians=self.lagrangians,
            connections=connections,
            formals=self.formals,
            forms=self.forms,
        )

    def statement(self) -> None:
        tok = self.peek()
        if tok.kind != "NAME":
            raise self.fail(f"found {tok.value!r}", expected=("statement",))
        name = tok.value
        if name == "m" or name == "n":
            self.advance()
            self.expect("EQ")
            value = self.int_value()
            if name == "m":
                self.m = value
            else:
                self.n = value
            self.expect("SEMI")
            return
        if name == "order_cap":
            self.advance()
            self.expect("EQ")
            self.cap_declared = self.int_value()
            self.expect("SEMI")
            return
        if name == "formal":
            self.advance()
            self.formal_statement()
            return
        if name == "form":
            self.advance()
            self.ensure_chart(tok)
            fname = self.expect("NAME")
            self.check_fresh_name(fname)
            self.unique_name(fname)
            self.expect("EQ")
            value = self.expression()
            self.expect("SEMI")
            if isinstance(value, Expr):
                value = Form.scalar(value)
            self.forms[fname.value] = value
            return
        if name == "connection":
            self.advance()
            self.ensure_chart(tok)
            cname = self.expect("NAME")
            self.unique_name(cname)
            self.expect("EQ")
            mode = self.expect("NAME")
            if mode.value not in ("flat", "symbolic"):
                raise ParseError(
                    f"unknown connection mode {mode.value!r}",
                    mode.line,
                    mode.column,
                    expected=("flat", "symbolic"),
                )
            self.connection_mode[cname.value] = mode.value
            self.connection_entries.setdefault(cname.value, {})
            self.expect("SEMI")
            return
        # remaining statement shapes: 'Gamma = flat;', 'NAME[h;j,k] = expr;',
        # 'NAME: order=K expr;'
        self.advance()
        self.ensure_chart(tok)
        if self.check("EQ") and name == "Gamma":
            self.advance()
            mode = self.expect("NAME")
            if mode.value not in ("flat", "symbolic"):
                raise ParseError(
                    f"unknown connection mode {mode.value!r}",
                    mode.line,
                    mode.column,
                    expected=("flat", "symbolic"),
                )
            if "Gamma" not in self.connection_mode:
                self.used_names.add("Gamma")
            self.connection_mode["Gamma"] = mode.value
            self.connection_entries.setdefault("Gamma", {})
            self.expect("SEMI")
            return
        if self.check("LBRACK"):
            if name != "Gamma" and name not in self.connection_mode:
                raise ParseError(
                    f"{name!r} is not a declared connection", tok.line, tok.column
                )
            if self.connection_mode.get(name) == "symbolic":
                raise ParseError(
                    "cannot assign entries of a symbolic connection",
                    tok.line,
                    tok.column,
                )
            self.expect("LBRACK")
            upper = self.base_index()
            self.expect("SEMI")
            labels = self.int_list()
            if len(labels) != 2:
                raise ParseError(
                    "connection entries take exactly two lower indices",
                    tok.line,
                    tok.column,
                )
            self.expect("RBRACK")
            self.expect("EQ")
            value = self.expression()
            self.expect("SEMI")
            if isinstance(value, Form):
                raise ParseError("connection entries must be scalar", tok.line, tok.column)
            if name not in self.connection_mode:
                self.used_names.add(name)
                self.connection_mode[name] = "flat"
            table = self.connection_entries.setdefault(name, {})
            table[(upper, labels[0], labels[1])] = value
            return
        if self.check("COLON"):
            self.advance()
            self.check_fresh_name(tok)
            self.unique_name(tok)
            self.expect("NAME", "order")
            self.expect("EQ")
            order = self.int_value()
            value = self.expression()
            self.expect("SEMI")
            if isinstance(value, Form):
                raise ParseError("a Lagrangian density must be scalar", tok.line, tok.column)
            try:
                self.lagrangians[name] = LagrangianSpec(value, order)
            except DomainError as exc:
                raise ParseError(str(exc), tok.line, tok.column)
            return
        raise self.fail(
            f"cannot parse statement starting with {name!r}",
            expected=("=", ":", "["),
        )

    def check_fresh_name(self, tok: _Token) -> None:
        if tok.value in _RESERVED:
            raise ParseError(f"{tok.value!r} is a reserved name", tok.line, tok.column)

    def formal_statement(self) -> None:
        fname = self.expect("NAME")
        self.check_fresh_name(fname)
        self.unique_name(fname)
        self.expect("NAME", "order")
        order = self.int_value()
        nonvanishing = False
        base_only = False
        while self.check("NAME"):
            flag = self.advance()
            if flag.value == "nonvanishing":
                nonvanishing = True
            elif flag.value == "base":
                base_only = True
            else:
                raise ParseError(
                    f"unknown modifier {flag.value!r}",
                    flag.line,
                    flag.column,
                    expected=("nonvanishing", "base"),
                )
        self.expect("SEMI")
        decl = FormalFunctionDecl(
            fname.value, order, nonvanishing, () if base_only else None
        )
        self.formals[fname.value] = decl


def parse_problem(text: str, order_cap: Optional[int] = None) -> ProblemSpec:
    """Parse a problem file into its chart and named objects."""
    return _ProblemParser(text, order_cap).parse()


def _parse_value(
    text: str, chart: Chart, formals: Optional[Mapping[str, FormalFunctionDecl]] = None
) -> Value:
    parser = _Parser(text, chart, formals)
    value = parser.expression()
    parser.expect("EOF")
    return value


def parse_expression(
    text: str, chart: Chart, formals: Optional[Mapping[str, FormalFunctionDecl]] = None
) -> Expr:
    value = _parse_value(text, chart, formals)
    if isinstance(value, Form):
        if value.is_zero():
            return chart.zero()
        raise ParseError("expected a scalar expression, found a form")
    return value


def parse_form(
    text: str, chart: Chart, formals: Optional[Mapping[str, FormalFunctionDecl]] = None
) -> Form:
    value = _parse_value(text, chart, formals)
    if isinstance(value, Expr):
        return Form.scalar(value)
    return value
