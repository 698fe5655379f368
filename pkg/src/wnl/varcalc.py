"""Variational calculus on the jet algebra.

Scalar local differential operators (:class:`DiffOp`), their formal adjoints
and compositions, the Euler operator, linearization of weakly nonlocal
operators, integration of exact total derivatives and Hamiltonian flows.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

from .jetalg import ONE, ZERO, JetExpression, JetVariable
from .multivector import MultiVector

__all__ = [
    "DiffOp",
    "D",
    "formal_adjoint",
    "compose_matrices",
    "variational_derivative",
    "Linearization",
    "linearize",
    "integrate_total_derivative",
    "NonlocalTerm",
    "Flow",
    "hamiltonian_flow",
    "NotExactWarning",
]


class DiffOp:
    """Scalar local operator ``sum_k coeffs[k] * d^k`` (coefficients on the left).

    Trailing zero coefficients are trimmed, so ``degree`` is well defined and
    the zero operator has no coefficients at all.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence = ()):
        cs = [JetExpression.coerce(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs: tuple[JetExpression, ...] = tuple(cs)

    @classmethod
    def multiplication(cls, a) -> "DiffOp":
        return cls((a,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, k: int) -> JetExpression:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else ZERO

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other: "DiffOp") -> "DiffOp":
        if not isinstance(other, DiffOp):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        return DiffOp(self.coefficient(k) + other.coefficient(k) for k in range(n))

    def __neg__(self) -> "DiffOp":
        return DiffOp(-c for c in self.coeffs)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def scale(self, a) -> "DiffOp":
        """Left multiplication by a function."""
        a = JetExpression.coerce(a)
        return DiffOp(a * c for c in self.coeffs)

    def __matmul__(self, other: "DiffOp") -> "DiffOp":
        return self.compose(other)

    def compose(self, other: "DiffOp") -> "DiffOp":
        """``self o other``, re-expanded with coefficients left of powers of d."""
        if not self.coeffs or not other.coeffs:
            return DiffOp()
        out = [ZERO] * (self.degree + other.degree + 1)
        for n, b in enumerate(other.coeffs):
            if not b:
                continue
            derivs = [b]
            for m, a in enumerate(self.coeffs):
                if not a:
                    continue
                while len(derivs) <= m:
                    derivs.append(derivs[-1].total_derivative())
                for k in range(m + 1):
                    if derivs[k]:
                        out[m - k + n] = out[m - k + n] + comb(m, k) * a * derivs[k]
        return DiffOp(out)

    def adjoint(self) -> "DiffOp":
        """Formal adjoint ``sum_m (-d)^m o a_m``."""
        out = [ZERO] * len(self.coeffs)
        for m, a in enumerate(self.coeffs):
            if not a:
                continue
            sign = -1 if m % 2 else 1
            # (-d)^m o a = (-1)^m sum_k C(m,k) a^{(m-k)} d^k
            ders = [a]
            for _ in range(m):
                ders.append(ders[-1].total_derivative())
            for k in range(m + 1):
                t = ders[m - k]
                if t:
                    out[k] = out[k] + sign * comb(m, k) * t
        return DiffOp(out)

    def apply(self, f):
        """Apply to a jet expression or a multivector."""
        if isinstance(f, MultiVector):
            acc = MultiVector(registry=f.registry)
            cur = f
            for k, a in enumerate(self.coeffs):
                if k:
                    cur = cur.total_derivative()
                if a:
                    acc = acc + cur.scale(a)
            return acc
        f = JetExpression.coerce(f)
        acc = ZERO
        cur = f
        for k, a in enumerate(self.coeffs):
            if k:
                cur = cur.total_derivative()
            if a:
                acc = acc + a * cur
        return acc

    def jet_order(self) -> int:
        return max((c.jet_order() for c in self.coeffs), default=-1)

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        out = ""
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if not c:
                continue
            dk = "" if k == 0 else ("D" if k == 1 else f"D^{k}")
            neg = len(c.num) == 1 and str(c).startswith("-")
            a = -c if neg else c
            if not dk:
                part = _paren(a)
            elif a == ONE:
                part = dk
            else:
                part = f"{_paren(a)}*{dk}"
            if not out:
                out = "-" + part if neg else part
            else:
                out += (" - " if neg else " + ") + part
        return out

    def __repr__(self) -> str:
        return f"DiffOp({str(self)!r})"


def _paren(c: JetExpression) -> str:
    s = str(c)
    if len(c.num) > 1 or not c.is_polynomial():
        return f"({s})"
    return s


D = DiffOp((0, 1))

Matrix = Sequence[Sequence[DiffOp]]


def formal_adjoint(A: Matrix) -> list[list[DiffOp]]:
    """Adjoint of a square matrix operator: ``(A^dagger)^{ij} = (A^{ji})^dagger``."""
    n = len(A)
    if any(len(row) != n for row in A):
        raise ValueError("formal_adjoint needs a square matrix")
    return [[A[j][i].adjoint() for j in range(n)] for i in range(n)]


def compose_matrices(A: Matrix, B: Matrix) -> list[list[DiffOp]]:
    n = len(A)
    out = []
    for i in range(n):
        row = []
        for j in range(len(B[0])):
            acc = DiffOp()
            for k in range(len(B)):
                acc = acc + A[i][k].compose(B[k][j])
            row.append(acc)
        out.append(row)
    return out


def variational_derivative(f, i: int) -> JetExpression:
    """Euler operator ``sum_sigma (-d)^sigma df/du^i_sigma``."""
    f = JetExpression.coerce(f)
    top = max((v.order for v in f.jet_variables() if v.component == i and not v.point), default=-1)
    acc = ZERO
    for sigma in range(top, -1, -1):
        # Horner: acc = df/du_sigma - d(acc)
        acc = f.diff(JetVariable(i, sigma)) - acc.total_derivative()
    return acc


# ---------------------------------------------------------------------------
# linearization


@dataclass
class Linearization:
    """``l_{P,psi}(phi)`` split into its local part and its ``d^{-1}`` part.

    ``local[i]`` collects the local-coefficient and tail-coefficient summands.
    Each entry ``(family, c, inner)`` of ``inverse`` stands for the vector
    ``c * w_family * d^{-1}(inner)``, with ``w_family`` the registry column.
    """

    local: list[MultiVector]
    inverse: list[tuple[int, JetExpression, MultiVector]]

    def component_inverse(self, i: int, registry) -> list[tuple[JetExpression, MultiVector]]:
        """Entries of component ``i`` (0-based) as ``(outer, inner)`` pairs."""
        out = []
        for fam, c, inner in self.inverse:
            w = registry.columns[fam][i]
            if w:
                out.append((c * w, inner))
        return out


def _coefficient_partials(expr: JetExpression) -> list[tuple[JetVariable, JetExpression]]:
    out = []
    for v in sorted(expr.jet_variables()):
        d = expr.diff(v)
        if d:
            out.append((v, d))
    return out


class _DerivCache:
    def __init__(self, phi: Sequence[MultiVector]):
        self.phi = phi
        self.cache: dict[tuple[int, int], MultiVector] = {}

    def __call__(self, k: int, tau: int) -> MultiVector:
        key = (k, tau)
        got = self.cache.get(key)
        if got is None:
            got = self.phi[k - 1] if tau == 0 else self(k, tau - 1).total_derivative()
            self.cache[key] = got
        return got


def linear_part(expr: JetExpression, dphi: _DerivCache) -> MultiVector:
    """``sum_{k,tau} d expr / d u^k_tau * d^tau phi^k``."""
    acc = None
    for v, d in _coefficient_partials(expr):
        term = dphi(v.component, v.order).scale(d)
        acc = term if acc is None else acc + term
    return acc if acc is not None else MultiVector()


def linearize(P, slot: int, phi: Sequence[MultiVector], registry=None) -> Linearization:
    """Linearization of the weakly nonlocal operator ``P`` applied to the
    covector of argument ``slot``, in the direction ``phi`` (a vector of
    multivectors not involving ``slot``)."""
    from .wnlop import unify_tails

    if registry is None:
        registry = unify_tails(P)
    fams = registry.families(P)
    n = P.n
    dphi = _DerivCache(phi)
    local = [MultiVector(registry=registry) for _ in range(n)]
    inverse: list[tuple[int, JetExpression, MultiVector]] = []
    for i in range(n):
        acc = local[i]
        for j in range(n):
            for sigma, b in enumerate(P.local[i][j].coeffs):
                if not b:
                    continue
                lin = linear_part(b, dphi)
                if lin:
                    acc = acc + lin * MultiVector.psi(slot, j + 1, sigma, registry)
        local[i] = acc
    c = P.tail.c
    w = P.tail.w
    for alpha in range(P.tail.size):
        for beta in range(P.tail.size):
            cab = c[alpha][beta]
            if not cab or fams[beta] is None or fams[alpha] is None:
                continue
            for i in range(n):
                lin = linear_part(w[i][alpha], dphi)
                if lin:
                    local[i] = local[i] + (lin * MultiVector.tilde(slot, fams[beta], registry)).scale(cab)
            inner = MultiVector(registry=registry)
            for j in range(n):
                lin = linear_part(w[j][beta], dphi)
                if lin:
                    inner = inner + lin * MultiVector.psi(slot, j + 1, 0, registry)
            if inner:
                inverse.append((fams[alpha], cab, inner))
    for i in range(n):
        local[i].registry = registry
    return Linearization(local, inverse)


# ---------------------------------------------------------------------------
# integration of exact derivatives and Hamiltonian flows


class NotExactWarning(UserWarning):
    """A tail argument of a flow is not a total derivative; the flow stays nonlocal."""


def _to_sympy(f: JetExpression):
    import sympy

    syms = {}

    def conv(terms):
        acc = sympy.Integer(0)
        for c, vs in terms:
            t = sympy.Rational(int(c.numerator), int(c.denominator))
            for v, e in vs:
                s = syms.get(v)
                if s is None:
                    s = syms[v] = sympy.Symbol(f"v{len(syms)}")
                t *= s**e
            acc += t
        return acc

    return conv(f.numerator_terms()) / conv(f.denominator_terms()), syms


def _from_sympy(expr, syms) -> JetExpression:
    import sympy

    back = {s: JetExpression.coerce(v) for v, s in syms.items()}
    num, den = sympy.fraction(sympy.together(expr))

    def conv(p):
        poly = sympy.Poly(sympy.expand(p), *back) if back else None
        if poly is None:
            return JetExpression.coerce(sympy.Rational(p).p) / sympy.Rational(p).q
        acc = ZERO
        gens = list(back)
        for monom, c in poly.terms():
            c = sympy.Rational(c)
            t = JetExpression.coerce(int(c.p)) / int(c.q)
            for g, e in zip(gens, monom):
                if e:
                    t = t * back[g] ** e
            acc = acc + t
        return acc

    return conv(num) / conv(den)


def _antiderivative(a: JetExpression, t: JetVariable) -> JetExpression | None:
    """A rational antiderivative of ``a`` in the variable ``t``, or None."""
    if not _den_has(a, t):
        acc = ZERO
        tt = JetExpression.coerce(t)
        for c, vs in a.numerator_terms():
            term = JetExpression.coerce(c)
            e_t = 0
            for v, e in vs:
                if v == t:
                    e_t = e
                else:
                    term = term * JetExpression.coerce(v) ** e
            acc = acc + term * tt ** (e_t + 1) / (e_t + 1)
        return acc / a.denominator()
    import sympy
    from sympy.integrals.rationaltools import ratint

    expr, syms = _to_sympy(a)
    if t not in syms:
        return None
    res = ratint(expr, syms[t])
    if res.has(sympy.log, sympy.atan, sympy.RootSum):
        return None
    return _from_sympy(res, syms)


def _den_has(a: JetExpression, t: JetVariable) -> bool:
    return a.denominator().degree_in(t) > 0


def integrate_total_derivative(f) -> JetExpression | None:
    """Return ``g`` with ``d/dx g == f`` (integration constant zero), or
    ``None`` when ``f`` is not the total derivative of a rational function."""
    f = JetExpression.coerce(f)
    if not f:
        return ZERO
    if any(v.point for v in f.jet_variables()):
        raise ValueError("integrate_total_derivative expects unpointed jet expressions")
    comps = {v.component for v in f.jet_variables()}
    if not comps:
        return None
    if any(variational_derivative(f, i) for i in comps):
        return None
    g = ZERO
    rest = f
    while rest:
        top = rest.jet_order()
        if top <= 0:
            return None
        tops = sorted((v for v in rest.jet_variables() if v.order == top), key=lambda v: -v.component)
        v = tops[0]
        a = rest.diff(v)
        if a.jet_order() >= top:
            return None
        h = _antiderivative(a, JetVariable(v.component, top - 1))
        if h is None:
            return None
        g = g + h
        rest = rest - h.total_derivative()
        if rest.degree_in(v) > 0 or rest.denominator().degree_in(v) > 0:
            return None
    if g.total_derivative() != f:
        return None
    return g


@dataclass(frozen=True)
class NonlocalTerm:
    """``coefficient * d^{-1}(argument)`` in component ``component`` of a flow."""

    component: int
    coefficient: JetExpression
    argument: JetExpression

    def __str__(self) -> str:
        return f"({self.coefficient})*D^-1({self.argument})"


@dataclass
class Flow:
    """Right-hand side ``f^i = P^{ij} dH/du^j`` of a Hamiltonian system."""

    local: tuple[JetExpression, ...]
    nonlocal_terms: tuple[NonlocalTerm, ...] = field(default=())

    @property
    def is_local(self) -> bool:
        return not self.nonlocal_terms

    def component_str(self, i: int) -> str:
        parts = [str(self.local[i - 1])]
        parts += [str(t) for t in self.nonlocal_terms if t.component == i]
        return " + ".join(parts)


def hamiltonian_flow(P, h) -> Flow:
    """Apply ``P`` to the variational derivative of the density ``h``.

    Tail terms ``w_alpha d^{-1}(w_beta . dh/du)`` are integrated when their
    argument is exact and kept as :class:`NonlocalTerm` otherwise (with a
    :class:`NotExactWarning`)."""
    h = JetExpression.coerce(h)
    n = P.n
    grad = [variational_derivative(h, j) for j in range(1, n + 1)]
    out = [ZERO] * n
    for i in range(n):
        acc = ZERO
        for j in range(n):
            acc = acc + P.local[i][j].apply(grad[j])
        out[i] = acc
    pending: list[NonlocalTerm] = []
    c, w = P.tail.c, P.tail.w
    for beta in range(P.tail.size):
        arg = ZERO
        for j in range(n):
            arg = arg + w[j][beta] * grad[j]
        if not arg:
            continue
        prim = integrate_total_derivative(arg)
        for alpha in range(P.tail.size):
            cab = c[alpha][beta]
            if not cab:
                continue
            for i in range(n):
                coef = cab * w[i][alpha]
                if not coef:
                    continue
                if prim is not None:
                    out[i] = out[i] + coef * prim
                else:
                    pending.append(NonlocalTerm(i + 1, coef, arg))
    if pending:
        warnings.warn(
            f"{len(pending)} tail term(s) have non-exact arguments; flow left nonlocal",
            NotExactWarning,
            stacklevel=2,
        )
    return Flow(tuple(out), tuple(pending))
