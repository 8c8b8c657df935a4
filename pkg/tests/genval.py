"""Seeded random generators for expressions and forms used across tests."""

from __future__ import annotations

import random
from fractions import Fraction

from lepage_kit import Chart, Expr, Form, FormalDeriv, MultiIndex, wedge
from lepage_kit.multiindex import indices_up_to_degree


def atom_pool(chart: Chart, max_order: int, formals=()):
    pool = [chart.x(i) for i in range(1, chart.m + 1)]
    for alpha in range(1, chart.n + 1):
        for I in indices_up_to_degree(chart.m, max_order):
            pool.append(chart.u(alpha, I))
    for decl in formals:
        pool.append(Expr.atom(chart, FormalDeriv(decl, MultiIndex.zero(chart.m), ())))
    return pool


def random_expr(rng: random.Random, chart: Chart, max_order: int = 2,
                terms: int = 2, formals=()) -> Expr:
    pool = atom_pool(chart, max_order, formals)
    out = chart.zero()
    for _ in range(rng.randint(1, terms)):
        t = chart.const(Fraction(rng.randint(-4, 4), rng.randint(1, 3)))
        for _ in range(rng.randint(0, 2)):
            t = t * rng.choice(pool)
        out = out + t
    return out


def random_form(rng: random.Random, chart: Chart, p: int, q: int,
                theta_order: int = 2, coeff_order: int = 2, terms: int = 2,
                formals=()) -> Form:
    thetas = [
        (alpha, I)
        for alpha in range(1, chart.n + 1)
        for I in indices_up_to_degree(chart.m, theta_order)
    ]
    out = Form.zero(chart)
    for _ in range(terms):
        if p > len(thetas) or q > chart.m:
            break
        w = Form.scalar(random_expr(rng, chart, coeff_order, formals=formals))
        for alpha, I in rng.sample(thetas, p):
            w = wedge(w, Form.theta(chart, alpha, I))
        for i in rng.sample(range(1, chart.m + 1), q):
            w = wedge(w, Form.dx(chart, i))
        out = out + w
    return out
