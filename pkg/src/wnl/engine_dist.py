"""Schouten bracket in the language of distributions.

A bivector is the two-point kernel
``P^{ij}_{p,q} = sum_k B^{ij}_k(p) delta^(k)(p-q) + c^{ab} w^i_a(p) nu(p-q) w^j_b(q)``
with ``nu = sgn/2``.  The bracket is a three-point kernel in ``x, y, z``; it is
assembled from twelve summands and reduced to a basis in which vanishing is
decided coefficient by coefficient.

Every basis symbol is a product of two kernels sharing a base point ``p``:

* ``("dd", p, q, m, r, n)`` is ``delta^(m)(p-q) delta^(n)(p-r)``;
* ``("nd", p, q, r, n)`` is ``nu(p-q) delta^(n)(p-r)``;
* ``("nn", p, q, r)`` is ``nu(p-q) nu(p-r)``.

For a base ``p`` the partners are listed as ``(nxt(p), prv(p))`` with the
cyclic order ``x -> y -> z -> x``, except that ``nd`` may carry its ``nu``
partner on either side until reduction.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Iterator

from .jetalg import ONE, ZERO, JetExpression, JetVariable
from .multivector import accumulate
from .wnlop import WeaklyNonlocalOperator

__all__ = [
    "TriDistribution",
    "DistVerdict",
    "bivector_of",
    "two_point_normal_form",
    "check_bivector_skew",
    "raw_bracket",
    "reduce_step1",
    "reduce_step2",
    "reduce_step3",
    "reduce",
    "verdict",
    "schouten_bracket",
    "schouten_bracket_timed",
    "symbol_str",
]

POINTS = ("x", "y", "z")
NXT = {"x": "y", "y": "z", "z": "x"}
PRV = {"x": "z", "y": "x", "z": "y"}

Symbol = tuple
Key = tuple  # ((i, j, k), symbol)


def symbol_str(s: Symbol) -> str:
    def d(m, a, b):
        return f"delta({a}-{b})" if m == 0 else f"delta^({m})({a}-{b})"

    kind = s[0]
    if kind == "dd":
        _, p, q, m, r, n = s
        return f"{d(m, p, q)}*{d(n, p, r)}"
    if kind == "nd":
        _, p, q, r, n = s
        return f"nu({p}-{q})*{d(n, p, r)}"
    _, p, q, r = s
    return f"nu({p}-{q})*nu({p}-{r})"


# ---------------------------------------------------------------------------
# two-point kernels

# A two-point term is (kind, order, coefficient) with kind "d" (order = k of
# delta^(k)) or "n" (order unused), based at the first point of the pair.


def bivector_of(P: WeaklyNonlocalOperator, points: tuple[str, str] = ("x", "y")) -> dict:
    """``{(i, j): [(kind, order, coefficient), ...]}`` with 1-based components."""
    p, q = points
    out: dict = {}
    for i in range(P.n):
        for j in range(P.n):
            terms = []
            for k, b in enumerate(P.local[i][j].coeffs):
                if b:
                    terms.append(("d", k, b.at(p)))
            for a in range(P.tail.size):
                wa = P.tail.w[i][a]
                if not wa:
                    continue
                for bb in range(P.tail.size):
                    cab = P.tail.c[a][bb]
                    wb = P.tail.w[j][bb]
                    if cab and wb:
                        terms.append(("n", 0, cab * wa.at(p) * wb.at(q)))
            if terms:
                out[(i + 1, j + 1)] = terms
    return out


def two_point_normal_form(terms: Iterable[tuple[str, int, JetExpression]], p: str, q: str) -> dict:
    """Collapse ``delta`` coefficients onto ``p``; ``nu`` coefficients are kept."""
    out: dict = {}
    for kind, k, c in terms:
        if kind == "n":
            accumulate(out, ((("n", 0), c),))
        else:
            accumulate(out, ((("d", m), cc) for m, cc in _collapse(c, q, p, k)))
    return out


def _reorient2(terms, p: str, q: str):
    """Rewrite kernels based at ``q`` (in ``q - p``) as kernels based at ``p``."""
    for kind, k, c in terms:
        if kind == "n":
            yield kind, k, -c
        else:
            yield kind, k, c if k % 2 == 0 else -c


def check_bivector_skew(P: WeaklyNonlocalOperator) -> tuple | None:
    """``None`` if ``P^{ij}_{x,y} = -P^{ji}_{y,x}``, else the first offending ``(i, j)``."""
    fwd = bivector_of(P, ("x", "y"))
    bwd = bivector_of(P, ("y", "x"))
    for i in range(1, P.n + 1):
        for j in range(1, P.n + 1):
            a = two_point_normal_form(fwd.get((i, j), ()), "x", "y")
            b = two_point_normal_form(_reorient2(bwd.get((j, i), ()), "x", "y"), "x", "y")
            accumulate(a, b.items())
            if a:
                return (i, j)
    return None


def _collapse(c: JetExpression, src: str, dst: str, n: int) -> Iterator[tuple[int, JetExpression]]:
    """``c * delta^(n)(dst - src) = sum_k C(n,k) [d_src^k c]_{src->dst} delta^(n-k)(dst - src)``."""
    if src not in c.points():
        yield n, c
        return
    cur = c
    for k in range(n + 1):
        if k:
            cur = cur.total_derivative(point=src)
            if not cur:
                break
        yield n - k, comb(n, k) * cur.move_point(src, dst)


class _Kernels:
    """Per-run caches of bivectors and their derivatives."""

    def __init__(self):
        self.biv: dict = {}
        self.diff: dict = {}

    def bivector(self, P: WeaklyNonlocalOperator, p: str, q: str) -> dict:
        key = (id(P), p, q)
        got = self.biv.get(key)
        if got is None:
            got = self.biv[key] = bivector_of(P, (p, q))
        return got

    def ddiff(self, P: WeaklyNonlocalOperator, l: int, c: int, sigma: int, s: str, r: str) -> tuple:
        """``d_s^sigma P^{lc}_{s,r}`` as two-point terms based at ``s``.

        ``d_s nu(s-r) = delta(s-r)``, so ``nu`` terms spill into deltas."""
        key = (id(P), l, c, sigma, s, r)
        got = self.diff.get(key)
        if got is not None:
            return got
        out: dict = {}
        for kind, k, coef in self.bivector(P, s, r).get((l, c), ()):
            ders = [coef]
            for _ in range(sigma):
                ders.append(ders[-1].total_derivative(point=s))
            for t in range(sigma + 1):
                d = ders[sigma - t]
                if not d:
                    continue
                w = comb(sigma, t) * d
                if kind == "d":
                    accumulate(out, ((("d", k + t), w),))
                elif t == 0:
                    accumulate(out, ((("n", 0), w),))
                else:
                    accumulate(out, ((("d", t - 1), w),))
        got = self.diff[key] = tuple((kind, k, v) for (kind, k), v in sorted(out.items(), key=lambda kv: kv[0]))
        return got


# ---------------------------------------------------------------------------
# three-point distributions


def _dd(p: str, q: str, m: int, r: str, n: int) -> Symbol:
    if q == NXT[p]:
        return ("dd", p, q, m, r, n)
    return ("dd", p, r, n, q, m)


def _nn(p: str) -> Symbol:
    return ("nn", p, NXT[p], PRV[p])


def _product(base: str, k1: tuple[str, int], q1: str, k2: tuple[str, int], q2: str) -> Symbol:
    """Symbol of ``K1(base - q1) * K2(base - q2)``."""
    (a, m), (b, n) = k1, k2
    if a == "d" and b == "d":
        return _dd(base, q1, m, q2, n)
    if a == "n" and b == "d":
        return ("nd", base, q1, q2, n)
    if a == "d" and b == "n":
        return ("nd", base, q2, q1, m)
    return _nn(base)


@dataclass
class DistVerdict:
    zero: bool
    index: tuple | None = None
    symbol: Symbol | None = None
    coefficient: JetExpression | None = None

    def __bool__(self) -> bool:
        return self.zero

    def __str__(self) -> str:
        if self.zero:
            return "ZERO"
        return f"NONZERO [{','.join(map(str, self.index))}] {symbol_str(self.symbol)} = {self.coefficient}"


_KIND_ORDER = {"dd": 0, "nd": 1, "nn": 2}


def _sort_key(key: Key):
    idx, s = key
    return (_KIND_ORDER[s[0]], idx, s[1:])


@dataclass
class TriDistribution:
    """``sum T[(i,j,k), symbol] * symbol`` with coefficients at points x, y, z."""

    terms: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TriDistribution):
            return NotImplemented
        return self.terms == other.terms

    def items(self):
        return self.terms.items()

    def add(self, idx: tuple, sym: Symbol, c: JetExpression) -> None:
        accumulate(self.terms, (((idx, sym), c),))

    def sorted_items(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: _sort_key(kv[0]))

    def max_delta_order(self) -> int:
        m = 0
        for (_, s) in self.terms:
            if s[0] == "dd":
                m = max(m, s[3] + s[5])
            elif s[0] == "nd":
                m = max(m, s[4])
        return m

    def max_jet_order(self) -> int:
        return max((c.jet_order() for c in self.terms.values()), default=-1)

    def canonical_violations(self) -> list[str]:
        """Structural checks on a reduced distribution; empty when canonical."""
        bad = []
        for (idx, s), c in self.terms.items():
            pts = c.points()
            kind = s[0]
            if kind == "dd":
                if s[1] != "x" or s[2] != "y" or s[4] != "z":
                    bad.append(f"local term not based at x: {symbol_str(s)}")
                elif pts - {"x"}:
                    bad.append(f"local coefficient depends on {sorted(pts - {'x'})}: {symbol_str(s)}")
            elif kind == "nd":
                p, q, r, _ = s[1:]
                if q != NXT[p] or r != PRV[p]:
                    bad.append(f"forbidden orientation {symbol_str(s)}")
                elif r in pts:
                    bad.append(f"coefficient of {symbol_str(s)} depends on {r}")
            elif kind == "nn":
                if s[2] != NXT[s[1]] or s[3] != PRV[s[1]]:
                    bad.append(f"unsorted nu product {symbol_str(s)}")
            else:
                bad.append(f"unknown symbol {s!r}")
        return bad

    def verdict(self) -> DistVerdict:
        for (idx, s), c in self.sorted_items():
            if c:
                return DistVerdict(False, idx, s, c)
        return DistVerdict(True)

    def to_json(self) -> dict:
        local, nd, nn = [], [], []
        for (idx, s), c in self.sorted_items():
            i, j, k = idx
            if s[0] == "dd":
                local.append({"i": i, "j": j, "k": k, "m": s[3], "n": s[5], "coeff": str(c)})
            elif s[0] == "nd":
                nd.append({"i": i, "j": j, "k": k, "base": s[1], "nu": s[2], "delta": s[3], "n": s[4], "coeff": str(c)})
            else:
                nn.append({"i": i, "j": j, "k": k, "base": s[1], "coeff": str(c)})
        return {"local_terms": local, "nu_delta_terms": nd, "nu_nu_terms": nn}

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return "\n".join(
            f"[{c}] * {symbol_str(s)}  (i,j,k)={idx}" for (idx, s), c in self.sorted_items()
        )


# ---------------------------------------------------------------------------
# step 0


_GROUPS = (("x", "y", "z"), ("z", "x", "y"), ("y", "z", "x"))


def raw_bracket(P: WeaklyNonlocalOperator, Q: WeaklyNonlocalOperator) -> TriDistribution:
    """The twelve summands ``dX^{ab}_{p,q}/du^l_s(t) * d_t^s Y^{lc}_{t,r}`` for
    ``(X, Y)`` in ``(P, Q), (Q, P)``, ``(p, q, r)`` cyclic and ``t`` in ``{p, q}``."""
    out = TriDistribution()
    n = P.n
    kern = _Kernels()
    for X, Y in ((P, Q), (Q, P)):
        for p, q, r in _GROUPS:
            biv = kern.bivector(X, p, q)
            for (a, b), terms in biv.items():
                for kind, k, coef in terms:
                    for v in sorted(coef.jet_variables()):
                        if v.point not in (p, q):
                            continue
                        dcoef = coef.diff(v)
                        t = v.point
                        # kernel of X, based at t
                        if t == p:
                            k1, sign = (kind, k), 1
                        else:
                            k1 = (kind, k)
                            sign = -1 if (kind == "n" or k % 2) else 1
                        other = q if t == p else p
                        for c in range(1, n + 1):
                            for kind2, k2, c2 in kern.ddiff(Y, v.component, c, v.order, t, r):
                                sym = _product(t, k1, other, (kind2, k2), r)
                                idx = _index(p, a, q, b, r, c)
                                w = dcoef * c2
                                out.add(idx, sym, w if sign == 1 else -w)
    return out


def _index(p: str, a: int, q: str, b: int, r: str, c: int) -> tuple[int, int, int]:
    d = {p: a, q: b, r: c}
    return (d["x"], d["y"], d["z"])


# ---------------------------------------------------------------------------
# step 1


@lru_cache(maxsize=None)
def _step1_rule(n: int) -> tuple:
    """``nu(p-r) delta^(n)(p-q)`` for ``r = prv(p)``, ``q = nxt(p)``, rebased at ``q``:
    ``(-1)^n [nu(q-r) delta^(n)(q-p) + sum_{k=1}^n C(n,k) delta^(k-1)(q-r) delta^(n-k)(q-p)]``.

    Returned as ``(kind, factor, orders)`` entries relative to the roles."""
    s = -1 if n % 2 else 1
    out = [("nd", s, n)]
    for k in range(1, n + 1):
        out.append(("dd", s * comb(n, k), (k - 1, n - k)))
    return tuple(out)


def reduce_step1(t: TriDistribution) -> TriDistribution:
    """Rewrite ``nu(p - prv p) delta^(n)(p - nxt p)`` into the allowed orientation."""
    out = TriDistribution()
    for (idx, s), c in t.items():
        if s[0] == "nd" and s[2] == PRV[s[1]]:
            p, r, q, n = s[1], s[2], s[3], s[4]
            for kind, f, o in _step1_rule(n):
                if kind == "nd":
                    out.add(idx, ("nd", q, r, p, o), f * c)
                else:
                    out.add(idx, _dd(q, r, o[0], p, o[1]), f * c)
        else:
            out.add(idx, s, c)
    return out


# ---------------------------------------------------------------------------
# step 2


def reduce_step2(t: TriDistribution) -> TriDistribution:
    """Remove the ``delta`` partner's point from ``nu delta`` coefficients."""
    out = TriDistribution()
    for (idx, s), c in t.items():
        if s[0] == "nd":
            p, q, r, n = s[1:]
            for m, cc in _collapse(c, r, p, n):
                out.add(idx, ("nd", p, q, r, m), cc)
        else:
            out.add(idx, s, c)
    return out


# ---------------------------------------------------------------------------
# step 3


@lru_cache(maxsize=None)
def _multinomials(a: int) -> tuple:
    fa = factorial(a)
    return tuple(
        (i, j, a - i - j, fa // (factorial(i) * factorial(j) * factorial(a - i - j)))
        for i in range(a + 1)
        for j in range(a + 1 - i)
    )


def reduce_step3(t: TriDistribution) -> TriDistribution:
    """Bring local terms to ``f(x) delta^(m)(x-y) delta^(n)(x-z)``."""
    out = TriDistribution()
    for (idx, s), c in t.items():
        if s[0] != "dd":
            out.add(idx, s, c)
            continue
        _, p, q, m, r, n = s
        for m2, c1 in _collapse(c, q, p, m):
            for n2, c2 in _collapse(c1, r, p, n):
                if p == "x":
                    out.add(idx, ("dd", "x", "y", m2, "z", n2), c2)
                    continue
                # g(p) delta^(a)(p-x) delta^(b)(p-s)
                #   = (-1)^a d_x^a [g(x) delta(x-p) delta^(b)(x-s)]
                if q == "x":
                    a, b, other = m2, n2, r
                else:
                    a, b, other = n2, m2, q
                g = c2.move_point(p, "x")
                ders = [g]
                sign = -1 if a % 2 else 1
                for i, j, k, w in _multinomials(a):
                    while len(ders) <= i:
                        ders.append(ders[-1].total_derivative(point="x"))
                    if not ders[i]:
                        continue
                    orders = {p: j, other: k + b}
                    out.add(idx, ("dd", "x", "y", orders["y"], "z", orders["z"]), sign * w * ders[i])
    return out


def reduce(t: TriDistribution) -> TriDistribution:
    return reduce_step3(reduce_step2(reduce_step1(t)))


def verdict(t: TriDistribution) -> DistVerdict:
    return t.verdict()


# ---------------------------------------------------------------------------


@dataclass
class DistResult:
    reduced: TriDistribution
    raw_terms: int
    timing_ms: float
    bound: int


def schouten_bracket(P: WeaklyNonlocalOperator, Q: WeaklyNonlocalOperator | None = None, check_bound: bool = True) -> TriDistribution:
    return schouten_bracket_timed(P, Q, check_bound).reduced


def schouten_bracket_timed(
    P: WeaklyNonlocalOperator, Q: WeaklyNonlocalOperator | None = None, check_bound: bool = True
) -> DistResult:
    from .engine_op import OrderBoundError, order_bound

    t0 = time.perf_counter()
    if Q is None:
        Q = P
    raw = raw_bracket(P, Q)
    red = reduce(raw)
    bound = order_bound(P, Q)
    if check_bound:
        worst = max(red.max_delta_order(), red.max_jet_order())
        if worst > bound:
            raise OrderBoundError(f"derivative order {worst} exceeds working bound {bound}")
    return DistResult(red, len(raw), (time.perf_counter() - t0) * 1000.0, bound)
