"""Exact symbolic calculus for the variational bicomplex on a jet chart.

The package provides, over exact rational arithmetic: jet-coordinate
expressions with total and partial derivatives, contact-graded differential
forms with the horizontal and vertical differentials, row homotopy operators
built from vertical endomorphisms, every standard Lepage-equivalent
construction together with a closure-property extension, and the
connection-dependent covariant calculus with its conjectured global homotopy
operator and verification harness.
"""

from .errors import (
    ChartMismatchError,
    DimensionError,
    DomainError,
    LepageKitError,
    OrderCapError,
    ParseError,
    SubstitutionError,
)
from .multiindex import (
    MultiIndex,
    indices_of_degree,
    indices_up_to_degree,
    multinomial,
    splittings,
    weighted_binomial_check,
)
from .expressions import (
    Atom,
    BaseCoord,
    Chart,
    ConnGamma,
    Expr,
    FormalDeriv,
    FormalFunctionDecl,
    JetCoord,
    iterated_total,
    leibniz_total,
    partial,
    substitute,
    total_derivative,
)
from .forms import (
    Dx,
    Form,
    Theta,
    contact_decompose,
    contact_part,
    d_full,
    d_h,
    d_v,
    horizontalize,
    interior_jet,
    interior_total,
    lie_total,
    lie_total_iterated,
    omega_basis,
    wedge,
    wedge_all,
)
from .vertical import (
    LoweringEndo,
    euler_lagrange,
    is_source_form,
    p_hat,
    p_tilde,
    s_eta,
    s_hat,
    s_i,
    s_tilde,
    source_coefficients,
    source_residue,
)
from .lepage import (
    ClosureReport,
    LagrangianSpec,
    LepageReport,
    caratheodory,
    caratheodory2,
    closure_check,
    extend,
    fundamental_first_order,
    lepage_difference_decompose,
    lepage_report,
    principal_lepage,
    principal_lepage_via_homotopy,
    vainberg_tonti,
)
from .connections import (
    AppendixReport,
    Connection,
    FitResult,
    GammaProlongation,
    VForm,
    appendix_scheme,
    contract_C,
    d_h_nabla,
    fit_coefficients,
    gamma_prolong,
    homotopy_defect,
    p_nabla_conjecture,
    printed_scheme,
    projection_composed_with_inclusion,
    projection_p_nabla,
    s_nabla,
    semiholonomic_restriction_table,
    symmetrization_table,
    ti_inclusion_table,
    verify_appendix_a,
)
from .render import (
    expr_latex,
    expr_text,
    form_latex,
    form_text,
    render,
    structured_dump,
    structured_load,
)
from .dsl import ProblemSpec, parse_expression, parse_form, parse_problem

__version__ = "0.1.0"
