import warnings

import pytest
from hypothesis import given

from strategies import local_matrix_operators, local_skew_operators, scalar_skew_operators
from wnl.frontend import load_problem
from wnl.jetalg import ZERO, const, u
from wnl.multivector import MultiVector
from wnl.varcalc import D, DiffOp, formal_adjoint
from wnl.wnlop import (
    DependentTailWarning,
    Tail,
    ValidationError,
    WeaklyNonlocalOperator,
    apply,
    check_skew_adjoint,
    tail_rank,
    unify_tails,
)

u1, ux = u(1), u(1, 1)


def test_skew_examples():
    assert check_skew_adjoint(load_problem("mkdv.wnl").operator("P")).is_skew
    assert check_skew_adjoint(load_problem("heisenberg.wnl").operator("Q")).is_skew
    v = check_skew_adjoint(WeaklyNonlocalOperator("E", [[DiffOp((0, 0, 1))]]))
    assert not v.is_skew and v.witness == ("local", 1, 1)


def test_asymmetric_c_witness():
    P = WeaklyNonlocalOperator("A", [[D]], Tail([[1, 2], [3, 1]], [[ux, u1]]))
    v = check_skew_adjoint(P)
    assert not v and v.witness == ("c", 1, 2)
    with pytest.raises(ValidationError) as e:
        P.validate()
    assert e.value.witness == ("c", 1, 2)


def test_nonconstant_c_rejected():
    P = WeaklyNonlocalOperator("A", [[D]], Tail([[u1]], [[ux]]))
    with pytest.raises(ValidationError):
        P.validate()


def test_apply_examples():
    P = WeaklyNonlocalOperator("D", [[D]])
    reg = unify_tails(P)
    assert apply(P, 2, reg)[0] == MultiVector.psi(2, 1, 1, reg)

    P = load_problem("mkdv.wnl").operator("P")
    reg = unify_tails(P)
    t = const("2/3")
    expected = (
        MultiVector.psi(1, 1, 3, reg)
        + MultiVector.psi(1, 1, 1, reg).scale(t * u1**2)
        + MultiVector.psi(1, 1, 0, reg).scale(t * u1 * ux)
        + MultiVector.tilde(1, 0, reg).scale(-t * ux)
    )
    assert apply(P, 1, reg)[0] == expected

    Q = load_problem("heisenberg.wnl").operator("Q")
    img = apply(Q, 1)
    assert all(f[1] == 0 for v in img for k in v for f in k)


def test_unify_tails_examples():
    P = load_problem("mkdv.wnl").operator("P")
    reg = unify_tails(P, P)
    assert len(reg) == 1 and reg.families(P) == (0,)

    h = load_problem("heisenberg.wnl")
    reg = unify_tails(h.operator("P"), h.operator("Q"))
    assert len(reg) == 1
    assert reg.families(h.operator("Q")) == ()

    A = WeaklyNonlocalOperator("A", [[D]], Tail([[1]], [[ux]]))
    B = WeaklyNonlocalOperator("B", [[D]], Tail([[1]], [[u1]]))
    reg = unify_tails(A, B)
    assert reg.families(A) == (0,) and reg.families(B) == (1,)


def test_equal_columns_share_a_family():
    A = WeaklyNonlocalOperator("A", [[D]], Tail([[1]], [[ux]]))
    B = WeaklyNonlocalOperator("B", [[D]], Tail([[1, 0], [0, 2]], [[u1, ux]]))
    reg = unify_tails(A, B)
    assert reg.families(A) == (0,) and reg.families(B) == (1, 0)


def test_scalar_multiple_not_unified():
    A = WeaklyNonlocalOperator("A", [[D]], Tail([[1]], [[ux]]))
    B = WeaklyNonlocalOperator("B", [[D]], Tail([[1]], [[2 * ux]]))
    assert len(unify_tails(A, B)) == 2


def test_dependent_tail_warning():
    P = WeaklyNonlocalOperator("P", [[D]], Tail([[1, 0], [0, 1]], [[ux, 2 * ux]]))
    assert tail_rank(P.tail) == 1
    with pytest.warns(DependentTailWarning):
        P.validate()


def test_independent_tail_no_warning():
    P = load_problem("wdvv.wnl", validate=False).operator("P")
    assert tail_rank(P.tail) == 2
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        P.validate()


def test_degenerate_c_accepted():
    P = WeaklyNonlocalOperator("P", [[D]], Tail([[1, 1], [1, 1]], [[ux, u1]]))
    P.validate()


def test_zero_tail_has_no_columns():
    P = WeaklyNonlocalOperator("P", [[D]])
    assert P.tail.size == 0 and P.is_local()


@given(local_skew_operators(n=2))
def test_skew_round_trip(P):
    assert check_skew_adjoint(P).is_skew
    adj = formal_adjoint(P.local)
    assert [[-e for e in row] for row in adj] == [list(r) for r in P.local]


@given(local_matrix_operators(n=1), local_matrix_operators(n=1))
def test_apply_is_linear(P, Q):
    S = P + Q
    reg = unify_tails(P, Q, S)
    lhs = apply(S, 1, reg)
    rhs = [a + b for a, b in zip(apply(P, 1, reg), apply(Q, 1, reg))]
    assert lhs == rhs


@given(scalar_skew_operators(), scalar_skew_operators())
def test_unify_tails_idempotent_and_symmetric(P, Q):
    r1 = unify_tails(P, Q)
    r2 = unify_tails(Q, P)
    assert set(r1.columns) == set(r2.columns)
    r3 = unify_tails(P, Q, P, Q)
    assert r3.columns == r1.columns
    for op in (P, Q):
        m1 = [r1.columns[f] if f is not None else None for f in r1.families(op)]
        m2 = [r2.columns[f] if f is not None else None for f in r2.families(op)]
        assert m1 == m2
