"""Command-line interface.

Reads a problem file in the DSL, runs one verification or construction
command, and renders the result as text, LaTeX or structured JSON.  Exit
status is 0 on success, 2 when a verification fails under --assert-zero,
and 64 for usage errors.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Optional

from .connections import (
    Connection,
    appendix_scheme,
    fit_coefficients,
    gamma_prolong,
    homotopy_defect,
    printed_scheme,
    projection_composed_with_inclusion,
    projection_p_nabla,
    semiholonomic_restriction_table,
    symmetrization_table,
    verify_appendix_a,
)
from .dsl import ProblemSpec, parse_problem
from .errors import LepageKitError
from .expressions import Expr
from .forms import Form, d_full, d_h, d_v
from .lepage import (
    LagrangianSpec,
    caratheodory,
    caratheodory2,
    closure_check,
    extend,
    fundamental_first_order,
    principal_lepage,
    principal_lepage_via_homotopy,
    vainberg_tonti,
)
from .multiindex import MultiIndex
from .render import expr_text, render
from .vertical import p_hat, p_tilde

USAGE_ERROR = 64
VERIFICATION_FAILED = 2


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="lepage-kit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="problem file in the DSL")
    common.add_argument(
        "--format", choices=("text", "latex", "structured"), default="text"
    )
    common.add_argument("--order-cap", type=int, default=None)
    common.add_argument("--assert-zero", action="store_true")
    common.add_argument("--out", help="write output to this file instead of stdout")

    sub = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)

    p = sub.add_parser("el", parents=[common])
    p.add_argument("--lagrangian", required=True)

    p = sub.add_parser("lepage", parents=[common])
    p.add_argument("--lagrangian", required=True)
    p.add_argument(
        "--variant",
        choices=(
            "principal",
            "pc",
            "caratheodory",
            "caratheodory2",
            "fundamental",
            "extend",
        ),
        default="principal",
    )

    p = sub.add_parser("vainberg-tonti", parents=[common])
    p.add_argument("--form", required=True)

    p = sub.add_parser("closure", parents=[common])
    p.add_argument("--lagrangian", required=True)
    p.add_argument("--construction", default="extend")

    p = sub.add_parser("homotopy-check", parents=[common])
    p.add_argument("--form", required=True)
    p.add_argument("--operator", choices=("tilde", "hat"), default="tilde")

    p = sub.add_parser("bicomplex-check", parents=[common])
    p.add_argument("--form", required=True)

    p = sub.add_parser("gamma-prolong", parents=[common])
    p.add_argument("--connection", default="Gamma")
    p.add_argument("--level", type=int, required=True)

    p = sub.add_parser("p-nabla", parents=[common])
    p.add_argument("--connection", default="Gamma")
    p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("conjecture", parents=[common])
    p.add_argument("mode", choices=("defect", "fit"))
    p.add_argument("--form", help="named form (defect) ")
    p.add_argument("--forms", help="comma-separated named forms (fit)")
    p.add_argument("--connection", default="Gamma")
    p.add_argument("--scheme", choices=("printed", "factorial"), default="printed")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--R", type=int, default=1)

    p = sub.add_parser("appendix-a", parents=[common])
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--flat", action="store_true")

    return parser


def _load_spec(args) -> ProblemSpec:
    if not args.spec:
        raise LepageKitError("this command needs --spec FILE")
    with open(args.spec, "r", encoding="utf-8") as handle:
        return parse_problem(handle.read(), order_cap=args.order_cap)


def _named_lagrangian(spec: ProblemSpec, name: str) -> LagrangianSpec:
    if name not in spec.lagrangians:
        raise LepageKitError(f"no Lagrangian named {name!r} in the problem file")
    return spec.lagrangians[name]


def _named_form(spec: ProblemSpec, name: str) -> Form:
    if name not in spec.forms:
        raise LepageKitError(f"no form named {name!r} in the problem file")
    return spec.forms[name]


def _named_connection(spec: ProblemSpec, name: str) -> Connection:
    if name in spec.connections:
        return spec.connections[name]
    if name == "Gamma":
        return Connection.flat(spec.chart)
    raise LepageKitError(f"no connection named {name!r} in the problem file")


def _cmd_el(args, out) -> int:
    spec = _load_spec(args)
    lag = _named_lagrangian(spec, args.lagrangian)
    from .vertical import euler_lagrange

    el = euler_lagrange(lag.density, lag.order)
    out.write(render(el, args.format) + "\n")
    return 0


_VARIANTS = {
    "principal": principal_lepage,
    "pc": principal_lepage_via_homotopy,
    "caratheodory": caratheodory,
    "caratheodory2": caratheodory2,
    "fundamental": fundamental_first_order,
}


def _cmd_lepage(args, out) -> int:
    spec = _load_spec(args)
    lag = _named_lagrangian(spec, args.lagrangian)
    if args.variant == "extend":
        theta = extend(principal_lepage(lag))
    else:
        theta = _VARIANTS[args.variant](lag)
    out.write(render(theta, args.format) + "\n")
    return 0


def _cmd_vainberg_tonti(args, out) -> int:
    spec = _load_spec(args)
    eps = _named_form(spec, args.form)
    lag = vainberg_tonti(eps)
    out.write(f"order = {lag.order}\n")
    out.write(render(lag.density, args.format) + "\n")
    return 0


def _cmd_closure(args, out) -> int:
    spec = _load_spec(args)
    lag = _named_lagrangian(spec, args.lagrangian)
    report = closure_check(lag, args.construction)
    if report.d_theta_f.is_zero():
        out.write("NULL: d(thetaF) = 0\n")
    else:
        out.write("NOT NULL: d(thetaF) != 0\n")
    consistent = report.is_null == report.d_theta_f.is_zero()
    out.write(f"closure matches nullity: {'yes' if consistent else 'NO'}\n")
    if args.assert_zero and not report.d_theta_f.is_zero():
        return VERIFICATION_FAILED
    return 0


def _cmd_homotopy_check(args, out) -> int:
    spec = _load_spec(args)
    omega = _named_form(spec, args.form)
    operator = p_tilde if args.operator == "tilde" else p_hat
    lhs = d_h(operator(omega))
    dh = d_h(omega)
    if not dh.is_zero():
        lhs = lhs + operator(dh)
    defect = lhs - omega
    if defect.is_zero():
        out.write("PASS: d_h P + P d_h = id on this form\n")
        return 0
    out.write("FAIL: defect = " + render(defect, args.format) + "\n")
    return VERIFICATION_FAILED if args.assert_zero else 0


def _cmd_bicomplex_check(args, out) -> int:
    spec = _load_spec(args)
    omega = _named_form(spec, args.form)
    checks = [
        ("d_h d_h", d_h(d_h(omega)).is_zero()),
        ("d_v d_v", d_v(d_v(omega)).is_zero()),
        ("d_h d_v + d_v d_h", (d_h(d_v(omega)) + d_v(d_h(omega))).is_zero()),
        ("d d", d_full(d_full(omega)).is_zero()),
    ]
    failed = False
    for label, ok in checks:
        out.write(f"[{'PASS' if ok else 'FAIL'}] {label} = 0\n")
        failed = failed or not ok
    return VERIFICATION_FAILED if (failed and args.assert_zero) else 0


def _cmd_gamma_prolong(args, out) -> int:
    spec = _load_spec(args)
    conn = _named_connection(spec, args.connection)
    table = gamma_prolong(conn, args.level).table()
    for (h, K), value in sorted(table.items(), key=lambda kv: (kv[0][1].degree, kv[0][1], kv[0][0])):
        labels = ",".join(str(i) for i in K.to_index_list())
        out.write(f"Gamma[{h};{labels}] = {expr_text(value)}\n")
    return 0


def _cmd_p_nabla(args, out) -> int:
    spec = _load_spec(args)
    conn = _named_connection(spec, args.connection)
    table = projection_p_nabla(conn, args.k)
    for key in sorted(table.actions, key=str):
        entries = table.actions[key]
        if key[0] == "x":
            label = f"d/dx[{key[1]}]"
        elif key[0] == "u_dot":
            label = f"d/du[{','.join(map(str, key[1].to_index_list())) or '0'};.]"
        else:
            label = f"d/du[{','.join(map(str, key[1].to_index_list())) or '0'};{key[2]}]"
        rendered = " + ".join(
            f"({expr_text(c)})*d/d{'x' if t[0] == 'x' else 'u'}[{t[1] if t[0] == 'x' else ','.join(map(str, t[1].to_index_list())) or '0'}]"
            for c, t in entries
        )
        out.write(f"{label} -> {rendered or '0'}\n")
    comp = projection_composed_with_inclusion(conn, args.k)
    identity = all(
        images == {source: conn.chart.one()} for source, images in comp.items()
    )
    out.write(f"p o Ti = id: {'yes' if identity else 'NO'}\n")
    if args.k == 2:
        sym_ok = semiholonomic_restriction_table(conn) == symmetrization_table(conn.chart)
        out.write(f"semiholonomic restriction = symmetrization: {'yes' if sym_ok else 'NO'}\n")
    return 0


def _cmd_conjecture(args, out) -> int:
    spec = _load_spec(args)
    conn = _named_connection(spec, args.connection)
    scheme = printed_scheme if args.scheme == "printed" else appendix_scheme
    if args.mode == "defect":
        if not args.form:
            raise LepageKitError("conjecture defect needs --form NAME")
        omega = _named_form(spec, args.form)
        defect = homotopy_defect(conn, omega, scheme)
        if defect.is_zero():
            out.write("defect = 0\n")
            return 0
        out.write("defect = " + render(defect, args.format) + "\n")
        return VERIFICATION_FAILED if args.assert_zero else 0
    if not args.forms:
        raise LepageKitError("conjecture fit needs --forms NAME,NAME,...")
    generators = [_named_form(spec, name) for name in args.forms.split(",")]
    result = fit_coefficients(conn, args.p, args.q, args.R, generators, scheme)
    out.write(f"status = {result.status}\n")
    if result.coefficients is not None:
        rendered = ", ".join(str(c) for c in result.coefficients)
        out.write(f"coefficients = [{rendered}]\n")
    return 0


def _cmd_appendix_a(args, out) -> int:
    connection = None
    if args.flat:
        from .expressions import Chart

        connection = Connection.flat(Chart(args.m, args.n, order_cap=10))
    report = verify_appendix_a(args.m, n=args.n, connection=connection)
    for line in report.lines:
        out.write(f"[{'PASS' if line.passed else 'FAIL'}] {line.label}\n")
    out.write(
        f"{'ALL LINES PASS' if report.all_passed else 'SOME LINES FAIL'} (m = {args.m})\n"
    )
    if args.assert_zero and not report.all_passed:
        return VERIFICATION_FAILED
    return 0


_COMMANDS = {
    "el": _cmd_el,
    "lepage": _cmd_lepage,
    "vainberg-tonti": _cmd_vainberg_tonti,
    "closure": _cmd_closure,
    "homotopy-check": _cmd_homotopy_check,
    "bicomplex-check": _cmd_bicomplex_check,
    "gamma-prolong": _cmd_gamma_prolong,
    "p-nabla": _cmd_p_nabla,
    "conjecture": _cmd_conjecture,
    "appendix-a": _cmd_appendix_a,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    handler = _COMMANDS[args.command]
    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8") as handle:
                status = handler(args, handle)
        else:
            status = handler(args, sys.stdout)
    except LepageKitError as exc:
        sys.stderr.write(f"lepage-kit: error: {exc}\n")
        return USAGE_ERROR
    return status


if __name__ == "__main__":
    sys.exit(main())
