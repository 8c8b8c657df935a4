"""Renderers for expressions and forms: plain text, LaTeX, structured JSON.

The text format uses the same tokens the problem DSL accepts, so rendered
values parse back to themselves.  The structured format is a versioned,
schema-stable JSON tree with exact rationals as numerator/denominator pairs
and embedded formal-function declarations, making it self-contained; it has
a loader for the reverse direction.  LaTeX output follows the usual jet
notation and is write-only.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Union

from .errors import DomainError, ParseError
from .expressions import (
    BaseCoord,
    Chart,
    ConnGamma,
    Expr,
    FormalDeriv,
    FormalFunctionDecl,
    JetCoord,
)
from .forms import Dx, Form, Theta
from .multiindex import MultiIndex

__all__ = [
    "SCHEMA",
    "expr_latex",
    "expr_text",
    "form_latex",
    "form_text",
    "render",
    "structured_dump",
    "structured_load",
    "vform_text",
]

SCHEMA = "lepage-kit/1"


# -- text ------------------------------------------------------------------------


def _mi_counts(I: MultiIndex) -> str:
    return ",".join(str(c) for c in I)


def _atom_text(atom) -> str:
    if isinstance(atom, BaseCoord):
        return f"x[{atom.index}]"
    if isinstance(atom, JetCoord):
        return f"u[{atom.alpha};{_mi_counts(atom.index)}]"
    if isinstance(atom, ConnGamma):
        core = f"Gamma[{atom.upper};{','.join(str(i) for i in atom.lower.to_index_list())}]"
        if atom.deriv.degree:
            return f"D[{core};{_mi_counts(atom.deriv)}]"
        return core
    if isinstance(atom, FormalDeriv):
        if atom.is_bare():
            return atom.decl.name
        parts = [atom.decl.name, _mi_counts(atom.deriv)]
        if atom.jet_deps:
            parts.append(
                ",".join(f"u[{a};{_mi_counts(I)}]" for a, I in atom.jet_deps)
            )
        return f"D[{';'.join(parts)}]"
    raise TypeError(f"not an atom: {atom!r}")


def _frac_text(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _mono_text(mono) -> str:
    factors = []
    for atom, power in mono:
        base = _atom_text(atom)
        factors.append(base if power == 1 else f"{base}^{power}")
    return "*".join(factors)


def expr_text(e: Expr) -> str:
    if e.is_zero():
        return "0"
    parts = []
    ordered = sorted(e.terms.items(), key=lambda kv: _mono_sort_key(kv[0]))
    for mono, coeff in ordered:
        sign = "-" if coeff < 0 else "+"
        mag = abs(coeff)
        if not mono:
            body = _frac_text(mag)
        elif mag == 1:
            body = _mono_text(mono)
        else:
            body = f"{_frac_text(mag)}*{_mono_text(mono)}"
        parts.append((sign, body))
    first_sign, first_body = parts[0]
    out = ("-" if first_sign == "-" else "") + first_body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def _mono_sort_key(mono):
    return tuple((atom.sort_key(), power) for atom, power in mono)


def _word_sort_key(word):
    return tuple(f.sort_key() for f in word)


def _word_text_and_sign(word, m: int) -> tuple[str, int]:
    """Token string for a wedge word with the volume-contraction shorthand.

    Returns the text plus a sign to fold into the coefficient, accounting
    for the alternating sign in the single-direction contracted volume.
    """
    thetas = [f for f in word if isinstance(f, Theta)]
    dxs = [f.index for f in word if isinstance(f, Dx)]
    parts = [
        f"theta[{f.alpha};{_mi_counts(f.index)}]" for f in thetas
    ]
    sign = 1
    if len(dxs) == m and dxs == list(range(1, m + 1)):
        parts.append("w0")
    elif len(dxs) == m - 1 and m >= 1:
        missing = sorted(set(range(1, m + 1)) - set(dxs))
        if len(missing) == 1 and dxs == [i for i in range(1, m + 1) if i != missing[0]]:
            parts.append(f"w[{missing[0]}]")
            if (missing[0] - 1) % 2:
                sign = -1
        else:
            parts.extend(f"dx[{i}]" for i in dxs)
    else:
        parts.extend(f"dx[{i}]" for i in dxs)
    return "*".join(parts) if parts else "1", sign


def form_text(omega: Form) -> str:
    if omega.is_zero():
        return "0"
    m = omega.chart.m
    parts = []
    for word, coeff in sorted(omega.terms.items(), key=lambda kv: _word_sort_key(kv[0])):
        word_text, sign = _word_text_and_sign(word, m)
        if sign < 0:
            coeff = -coeff
        terms = coeff.terms
        if len(terms) == 1:
            ((mono, value),) = terms.items()
            neg = value < 0
            mag = abs(value)
            if not mono:
                body = _frac_text(mag) if (mag != 1 or word_text == "1") else ""
            elif mag == 1:
                body = _mono_text(mono)
            else:
                body = f"{_frac_text(mag)}*{_mono_text(mono)}"
            if word_text == "1":
                piece = body or "1"
            elif body:
                piece = f"{body}*{word_text}"
            else:
                piece = word_text
            parts.append(("-" if neg else "+", piece))
        else:
            piece = f"({expr_text(coeff)})*{word_text}" if word_text != "1" else f"({expr_text(coeff)})"
            parts.append(("+", piece))
    first_sign, first_body = parts[0]
    out = ("-" if first_sign == "-" else "") + first_body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def vform_text(v) -> str:
    if v.is_zero():
        return "0"
    chart = v.chart
    pieces = []
    for (slots, word), coeff in sorted(
        v.terms.items(), key=lambda kv: (kv[0][0], _word_sort_key(kv[0][1]))
    ):
        slot_text = "@".join(f"e[{i}]" for i in slots)
        body = form_text(Form(chart, {word: coeff}))
        pieces.append(f"{slot_text} (x) ({body})" if slots else f"({body})")
    return "  +  ".join(pieces)


# -- LaTeX -----------------------------------------------------------------------


def _mi_latex(I: MultiIndex) -> str:
    return "(" + ",".join(str(c) for c in I) + ")"


def _atom_latex(atom) -> str:
    if isinstance(atom, BaseCoord):
        return f"x^{{{atom.index}}}"
    if isinstance(atom, JetCoord):
        if atom.index.degree == 0:
            return f"u^{{{atom.alpha}}}"
        return f"u^{{{atom.alpha}}}_{{{_mi_latex(atom.index)}}}"
    if isinstance(atom, ConnGamma):
        lower = "".join(str(i) for i in atom.lower.to_index_list())
        core = f"\\Gamma^{{{atom.upper}}}_{{{lower}}}"
        if atom.deriv.degree:
            return f"\\partial_{{{_mi_latex(atom.deriv)}}}{core}"
        return core
    if isinstance(atom, FormalDeriv):
        out = atom.decl.name
        subs = []
        if atom.deriv.degree:
            subs.append(f",{_mi_latex(atom.deriv)}")
        for a, I in atom.jet_deps:
            inner = f"u^{{{a}}}" if I.degree == 0 else f"u^{{{a}}}_{{{_mi_latex(I)}}}"
            subs.append(f";{inner}")
        if subs:
            out += "_{" + "".join(subs) + "}"
        return out
    raise TypeError(f"not an atom: {atom!r}")


def _frac_latex(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    sign = "-" if q < 0 else ""
    return f"{sign}\\tfrac{{{abs(q.numerator)}}}{{{q.denominator}}}"


def expr_latex(e: Expr) -> str:
    if e.is_zero():
        return "0"
    parts = []
    for mono, coeff in sorted(e.terms.items(), key=lambda kv: _mono_sort_key(kv[0])):
        body = ""
        for atom, power in mono:
            base = _atom_latex(atom)
            body += base if power == 1 else f"({base})^{{{power}}}"
        mag = abs(coeff)
        if not mono:
            text = _frac_latex(mag)
        elif mag == 1:
            text = body
        else:
            text = f"{_frac_latex(mag)}{body}"
        parts.append(("-" if coeff < 0 else "+", text))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, text in parts[1:]:
        out += f" {sign} {text}"
    return out


def _word_latex_and_sign(word, m: int) -> tuple[str, int]:
    thetas = [f for f in word if isinstance(f, Theta)]
    dxs = [f.index for f in word if isinstance(f, Dx)]
    parts = []
    for f in thetas:
        if f.index.degree == 0:
            parts.append(f"\\theta^{{{f.alpha}}}")
        else:
            parts.append(f"\\theta^{{{f.alpha}}}_{{{_mi_latex(f.index)}}}")
    sign = 1
    if len(dxs) == m and dxs == list(range(1, m + 1)):
        parts.append("\\omega_{0}")
    elif len(dxs) == m - 1:
        missing = sorted(set(range(1, m + 1)) - set(dxs))
        if len(missing) == 1:
            parts.append(f"\\omega_{{{missing[0]}}}")
            if (missing[0] - 1) % 2:
                sign = -1
        else:
            parts.extend(f"\\mathrm{{d}}x^{{{i}}}" for i in dxs)
    else:
        parts.extend(f"\\mathrm{{d}}x^{{{i}}}" for i in dxs)
    return "\\wedge".join(parts), sign


def form_latex(omega: Form) -> str:
    if omega.is_zero():
        return "0"
    m = omega.chart.m
    parts = []
    for word, coeff in sorted(omega.terms.items(), key=lambda kv: _word_sort_key(kv[0])):
        word_text, sign = _word_latex_and_sign(word, m)
        if sign < 0:
            coeff = -coeff
        terms = coeff.terms
        if len(terms) == 1:
            ((mono, value),) = terms.items()
            mag = abs(value)
            body = ""
            for atom, power in mono:
                base = _atom_latex(atom)
                body += base if power == 1 else f"({base})^{{{power}}}"
            if mag != 1:
                body = _frac_latex(mag) + body
            if word_text and body:
                text = f"{body}\\,{word_text}"
            else:
                text = body or word_text or "1"
            parts.append(("-" if value < 0 else "+", text))
        else:
            text = (
                f"\\bigl({expr_latex(coeff)}\\bigr)\\,{word_text}"
                if word_text
                else f"\\bigl({expr_latex(coeff)}\\bigr)"
            )
            parts.append(("+", text))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, text in parts[1:]:
        out += f" {sign} {text}"
    return out


# -- structured ---------------------------------------------------------------------


def _decl_json(decl: FormalFunctionDecl):
    return {
        "name": decl.name,
        "order": decl.max_jet_order,
        "nonvanishing": decl.nonvanishing,
        "deps": None
        if decl.jet_deps is None
        else [[a, list(I)] for a, I in decl.jet_deps],
    }


def _atom_json(atom):
    if isinstance(atom, BaseCoord):
        return ["x", atom.index]
    if isinstance(atom, JetCoord):
        return ["u", atom.alpha, list(atom.index)]
    if isinstance(atom, ConnGamma):
        return ["gamma", atom.upper, list(atom.lower), list(atom.deriv)]
    if isinstance(atom, FormalDeriv):
        return [
            "formal",
            _decl_json(atom.decl),
            list(atom.deriv),
            [[a, list(I)] for a, I in atom.jet_deps],
        ]
    raise TypeError(f"not an atom: {atom!r}")


def _expr_terms_json(e: Expr):
    out = []
    for mono, coeff in sorted(e.terms.items(), key=lambda kv: _mono_sort_key(kv[0])):
        out.append(
            {
                "monomial": [[_atom_json(a), p] for a, p in mono],
                "coeff": [coeff.numerator, coeff.denominator],
            }
        )
    return out


def _chart_json(chart: Chart):
    return {"m": chart.m, "n": chart.n, "order_cap": chart.order_cap}


def structured_dump(value: Union[Expr, Form]) -> str:
    if isinstance(value, Expr):
        doc = {
            "schema": SCHEMA,
            "kind": "expr",
            "chart": _chart_json(value.chart),
            "terms": _expr_terms_json(value),
        }
    elif isinstance(value, Form):
        terms = []
        for word, coeff in sorted(
            value.terms.items(), key=lambda kv: _word_sort_key(kv[0])
        ):
            factors = []
            for f in word:
                if isinstance(f, Theta):
                    factors.append(["theta", f.alpha, list(f.index)])
                else:
                    factors.append(["dx", f.index])
            terms.append({"word": factors, "coeff": _expr_terms_json(coeff)})
        doc = {
            "schema": SCHEMA,
            "kind": "form",
            "chart": _chart_json(value.chart),
            "terms": terms,
        }
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")
    return json.dumps(doc, separators=(", ", ": "))


def _decl_from_json(doc) -> FormalFunctionDecl:
    deps = doc.get("deps")
    return FormalFunctionDecl(
        doc["name"],
        doc["order"],
        bool(doc.get("nonvanishing", False)),
        None if deps is None else tuple((a, MultiIndex(I)) for a, I in deps),
    )


def _atom_from_json(doc):
    kind = doc[0]
    if kind == "x":
        return BaseCoord(doc[1])
    if kind == "u":
        return JetCoord(doc[1], MultiIndex(doc[2]))
    if kind == "gamma":
        return ConnGamma(doc[1], MultiIndex(doc[2]), MultiIndex(doc[3]))
    if kind == "formal":
        return FormalDeriv(
            _decl_from_json(doc[1]),
            MultiIndex(doc[2]),
            tuple(sorted((a, MultiIndex(I)) for a, I in doc[3])),
        )
    raise ParseError(f"unknown atom kind {kind!r} in structured input")


def _expr_from_terms(chart: Chart, terms) -> Expr:
    out = {}
    for term in terms:
        mono = tuple(
            sorted(
                ((_atom_from_json(a), p) for a, p in term["monomial"]),
                key=lambda ap: ap[0].sort_key(),
            )
        )
        num, den = term["coeff"]
        out[mono] = out.get(mono, Fraction(0)) + Fraction(num, den)
    return Expr(chart, out)


def structured_load(text: str) -> Union[Expr, Form]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if doc.get("schema") != SCHEMA:
        raise ParseError(
            f"unsupported schema {doc.get('schema')!r}; expected {SCHEMA!r}"
        )
    chart = Chart(**doc["chart"])
    if doc["kind"] == "expr":
        return _expr_from_terms(chart, doc["terms"])
    if doc["kind"] == "form":
        from .forms import _sort_word

        terms = {}
        for term in doc["terms"]:
            factors = []
            for f in term["word"]:
                if f[0] == "theta":
                    factors.append(Theta(f[1], MultiIndex(f[2])))
                elif f[0] == "dx":
                    factors.append(Dx(f[1]))
                else:
                    raise ParseError(f"unknown word factor {f[0]!r}")
            sorted_word = _sort_word(factors)
            if sorted_word is None:
                continue
            word, sign = sorted_word
            coeff = _expr_from_terms(chart, term["coeff"])
            if sign < 0:
                coeff = -coeff
            terms[word] = terms[word] + coeff if word in terms else coeff
        return Form(chart, terms)
    raise ParseError(f"unknown kind {doc['kind']!r}")


def render(value, fmt: str = "text") -> str:
    """Render an expression or form in the requested format."""
    if fmt == "text":
        return expr_text(value) if isinstance(value, Expr) else form_text(value)
    if fmt == "latex":
        return expr_latex(value) if isinstance(value, Expr) else form_latex(value)
    if fmt == "structured":
        return structured_dump(value)
    raise DomainError(f"unknown format {fmt!r}")
