"""Hypothesis strategies shared by the test modules."""
from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from wnl.jetalg import ONE, ZERO, JetExpression, const, u
from wnl.varcalc import DiffOp
from wnl.wnlop import Tail, WeaklyNonlocalOperator

small_int = st.integers(-3, 3)
rationals = st.fractions(min_value=-3, max_value=3, max_denominator=4)
nonzero_rationals = rationals.filter(lambda q: q != 0)


@st.composite
def jet_monomials(draw, components=2, max_order=2, max_degree=3):
    deg = draw(st.integers(0, max_degree))
    m = ONE
    for _ in range(deg):
        m = m * u(draw(st.integers(1, components)), draw(st.integers(0, max_order)))
    return m


@st.composite
def polynomials(draw, components=2, max_order=2, max_degree=3, max_terms=4):
    n = draw(st.integers(1, max_terms))
    acc = ZERO
    for _ in range(n):
        c = draw(rationals)
        acc = acc + const(Fraction(c)) * draw(jet_monomials(components, max_order, max_degree))
    return acc


@st.composite
def expressions(draw, components=2, max_order=2):
    """Rational functions; the denominator is a nonzero polynomial."""
    num = draw(polynomials(components, max_order))
    if draw(st.booleans()):
        return num
    den = draw(polynomials(components, max_order, max_degree=2, max_terms=2))
    if not den:
        den = ONE
    return num / den


@st.composite
def diff_ops(draw, components=1, max_order=2, max_degree=2, coeff_order=1):
    k = draw(st.integers(0, max_order))
    return DiffOp(
        draw(polynomials(components, coeff_order, max_degree, max_terms=3)) for _ in range(k + 1)
    )


def _poly_u_ux(draw, degree):
    """Polynomial of total degree <= degree in u1, u1_x."""
    acc = ZERO
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            if draw(st.integers(0, 2)) == 0:
                acc = acc + const(Fraction(draw(small_int))) * u(1) ** i * u(1, 1) ** j
    return acc


def symmetrized(a: JetExpression, k: int) -> DiffOp:
    """``(a d^k + (-1)^{k+1} (d^k a)) / 2``: skew for odd ``k``."""
    A = DiffOp([0] * k + [a])
    return DiffOp.scale(A - A.adjoint(), Fraction(1, 2))


@st.composite
def scalar_skew_operators(draw, with_tail=True):
    """Random scalar skew operators: local order <= 3 with generating
    coefficients of degree <= 2 in u, u_x; tail columns of degree <= 1."""
    kind = draw(st.sampled_from(["random", "random", "hydro", "mkdv", "kdv"]))
    if kind == "hydro":
        a = sum((const(Fraction(draw(small_int))) * u(1) ** i for i in range(3)), ZERO)
        local = symmetrized(a, 1)
        return WeaklyNonlocalOperator("H", [[local]])
    if kind in ("mkdv", "kdv"):
        k = Fraction(draw(nonzero_rationals))
        c3 = Fraction(draw(nonzero_rationals))
        if kind == "kdv":
            local = DiffOp([0, 0, 0, c3]) + symmetrized(k * u(1) + Fraction(draw(small_int)), 1)
            return WeaklyNonlocalOperator("K", [[local]])
        # c3 d^3 + k (u^2 d + u u_x) - k u_x d^-1 u_x, rescaled by c3
        local = DiffOp([0, 0, 0, c3]) + symmetrized(2 * c3 * k * u(1) ** 2, 1)
        return WeaklyNonlocalOperator("M", [[local]], Tail([[-k * c3]], [[u(1, 1)]]))
    local = DiffOp()
    for order in (1, 3):
        if draw(st.booleans()):
            local = local + symmetrized(_poly_u_ux(draw, 2), order)
    if not local:
        local = DiffOp([0, 1])
    tail = None
    if with_tail and draw(st.booleans()):
        N = draw(st.integers(1, 2))
        c = [[ZERO] * N for _ in range(N)]
        for a in range(N):
            for b in range(a, N):
                c[a][b] = c[b][a] = const(Fraction(draw(small_int)))
        w = [[_poly_u_ux(draw, 1) for _ in range(N)]]
        tail = Tail(c, w)
    return WeaklyNonlocalOperator("R", [[local]], tail)


@st.composite
def local_matrix_operators(draw, n=1, max_order=2):
    """Random local operators (not necessarily skew)."""
    return WeaklyNonlocalOperator(
        "A", [[draw(diff_ops(n, max_order)) for _ in range(n)] for _ in range(n)]
    )


@st.composite
def local_skew_operators(draw, n=1):
    """Skew local matrix operators ``(A - A^dagger)/2``."""
    from wnl.varcalc import formal_adjoint

    A = [[draw(diff_ops(n, 2, max_degree=2)) for _ in range(n)] for _ in range(n)]
    Ad = formal_adjoint(A)
    return WeaklyNonlocalOperator(
        "S", [[DiffOp.scale(A[i][j] - Ad[i][j], Fraction(1, 2)) for j in range(n)] for i in range(n)]
    )
