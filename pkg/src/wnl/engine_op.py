"""Schouten bracket in the operator formalism with nonlocal variables.

``[P,Q]`` is the sum over cyclic ``(a,b,c)`` of
``l_{P,psi^a}(Q psi^b)(psi^c) + l_{Q,psi^a}(P psi^b)(psi^c)``, each summand
split into three blocks (local-coefficient part, tail-coefficient part and
the integrated-by-parts inverse part).  The result is reduced modulo total
derivatives to a :class:`CanonicalThreeVector`.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterator

from .jetalg import ZERO, JetExpression
from .multivector import PSI, TILDE, Key, MultiVector, accumulate, derivative_terms, factor_str
from .varcalc import linearize
from .wnlop import TailRegistry, WeaklyNonlocalOperator, apply, unify_tails

__all__ = [
    "CYCLIC",
    "CanonicalThreeVector",
    "ZeroVerdict",
    "OrderBoundError",
    "single_summand",
    "schouten_bracket",
    "normalize",
    "is_zero",
    "order_bound",
    "schouten_bracket_timed",
    "raw_bracket",
    "BracketResult",
]

CYCLIC = ((1, 2, 3), (2, 3, 1), (3, 1, 2))
_NEXT = {1: 2, 2: 3, 3: 1}


class OrderBoundError(AssertionError):
    """A derivative order exceeded the working bound computed from the inputs."""


def order_bound(P: WeaklyNonlocalOperator, Q: WeaklyNonlocalOperator) -> int:
    """``M = M1 + D1 + M2 + D2`` (jet orders and d-orders of both operators)."""
    return (
        max(P.jet_order(), 0)
        + max(P.local_order(), 0)
        + max(Q.jet_order(), 0)
        + max(Q.local_order(), 0)
    )


# ---------------------------------------------------------------------------
# canonical three-vectors


@dataclass(frozen=True)
class ZeroVerdict:
    zero: bool
    family: str | None = None
    index: tuple | None = None
    coefficient: JetExpression | None = None

    def __bool__(self) -> bool:
        return self.zero

    def __str__(self) -> str:
        if self.zero:
            return "ZERO"
        return f"NONZERO {self.family}{list(self.index)} = {self.coefficient}"


@dataclass
class CanonicalThreeVector:
    """Divergence-free normal form of a three-vector.

    * ``local[(i, j, k, m, n)]`` multiplies ``d^m psi1_i * d^n psi2_j * psi3_k``;
    * ``single[(a, alpha, p, h, i)]`` multiplies ``tpsi^a_alpha * d^h psi^b_p * psi^c_i``
      for cyclic ``(a, b, c)``;
    * ``double[(a, b, alpha, beta, i)]`` multiplies ``tpsi^a_alpha * tpsi^b_beta * psi^c_i``
      with ``a < b``.

    Component indices are 1-based, families index ``registry.columns``.
    """

    local: dict = field(default_factory=dict)
    single: dict = field(default_factory=dict)
    double: dict = field(default_factory=dict)
    registry: TailRegistry | None = None

    def families(self) -> Iterator[tuple[str, dict]]:
        yield "local", self.local
        yield "single", self.single
        yield "double", self.double

    def is_zero(self) -> ZeroVerdict:
        for name, fam in self.families():
            for idx in sorted(fam):
                c = fam[idx]
                if c:
                    return ZeroVerdict(False, name, idx, c)
        return ZeroVerdict(True)

    def __bool__(self) -> bool:
        return not self.is_zero().zero

    def __eq__(self, other) -> bool:
        if not isinstance(other, CanonicalThreeVector):
            return NotImplemented
        return self._labelled() == other._labelled()

    def _labelled(self) -> tuple[dict, dict, dict]:
        """Families keyed by tail column rather than by registry index, so that
        vectors built over differently ordered registries compare equal."""
        if self.registry is None:
            return self.local, self.single, self.double
        col = self.registry.columns
        single = {(a, col[al], p, h, i): c for (a, al, p, h, i), c in self.single.items()}
        double: dict = {}
        for (a, b, al, be, i), c in self.double.items():
            accumulate(double, (((a, b, col[al], col[be], i), c),))
        return self.local, single, double

    def __len__(self) -> int:
        return len(self.local) + len(self.single) + len(self.double)

    def scale(self, c) -> "CanonicalThreeVector":
        c = JetExpression.coerce(c)
        out = CanonicalThreeVector(registry=self.registry)
        for (name, src), (_, dst) in zip(self.families(), out.families()):
            for k, v in src.items():
                p = v * c
                if p:
                    dst[k] = p
        return out

    def __add__(self, other: "CanonicalThreeVector") -> "CanonicalThreeVector":
        out = CanonicalThreeVector(registry=self.registry or other.registry)
        for (_, a), (_, b), (_, dst) in zip(self.families(), other.families(), out.families()):
            dst.update(a)
            accumulate(dst, b.items())
        return out

    def __neg__(self) -> "CanonicalThreeVector":
        return self.scale(-1)

    def __sub__(self, other: "CanonicalThreeVector") -> "CanonicalThreeVector":
        return self + (-other)

    def terms(self) -> Iterator[tuple[str, tuple, JetExpression]]:
        for name, fam in self.families():
            for idx in sorted(fam):
                yield name, idx, fam[idx]

    def max_psi_order(self) -> int:
        m = 0
        for (i, j, k, a, b) in self.local:
            m = max(m, a, b)
        for (a, alpha, p, h, i) in self.single:
            m = max(m, h)
        return m

    def max_jet_order(self) -> int:
        return max((c.jet_order() for _, _, c in self.terms()), default=-1)

    def check_invariants(self) -> None:
        """Raise AssertionError unless every key has the canonical shape."""
        for (i, j, k, m, n), c in self.local.items():
            assert m >= 0 and n >= 0 and c, "bad local term"
        for (a, alpha, p, h, i), c in self.single.items():
            assert a in (1, 2, 3) and h >= 0 and c, "bad single term"
        for (a, b, alpha, beta, i), c in self.double.items():
            assert 1 <= a < b <= 3 and c, "bad double term"

    def to_json(self) -> dict:
        def s(c):
            return str(c)

        return {
            "local_terms": [
                {"i": i, "j": j, "k": k, "m": m, "n": n, "coeff": s(c)}
                for (i, j, k, m, n), c in sorted(self.local.items())
            ],
            "single_nonlocal_terms": [
                {"slot": a, "family": alpha + 1, "p": p, "h": h, "i": i, "coeff": s(c)}
                for (a, alpha, p, h, i), c in sorted(self.single.items())
            ],
            "double_nonlocal_terms": [
                {"slots": [a, b], "families": [alpha + 1, beta + 1], "i": i, "coeff": s(c)}
                for (a, b, alpha, beta, i), c in sorted(self.double.items())
            ],
        }

    def __str__(self) -> str:
        if not len(self):
            return "0"
        lines = []
        for (i, j, k, m, n), c in sorted(self.local.items()):
            lines.append(f"[{c}] * {_d(1, i, m)} * {_d(2, j, n)} * psi3_{k}")
        for (a, alpha, p, h, i), c in sorted(self.single.items()):
            b, cc = _NEXT[a], _NEXT[_NEXT[a]]
            lines.append(f"[{c}] * tpsi{a}[{alpha + 1}] * {_d(b, p, h)} * psi{cc}_{i}")
        for (a, b, alpha, beta, i), c in sorted(self.double.items()):
            cc = 6 - a - b
            lines.append(f"[{c}] * tpsi{a}[{alpha + 1}] * tpsi{b}[{beta + 1}] * psi{cc}_{i}")
        return "\n".join(lines)


def _d(slot: int, comp: int, order: int) -> str:
    return factor_str((slot, PSI, comp, order))


def is_zero(t: CanonicalThreeVector) -> ZeroVerdict:
    return t.is_zero()


# ---------------------------------------------------------------------------
# summands


def _pair(vec: list[MultiVector], slot: int, registry) -> MultiVector:
    """``sum_i vec[i] * psi^slot_i``."""
    acc = MultiVector(registry=registry)
    for i, v in enumerate(vec):
        if v:
            acc = acc + v * MultiVector.psi(slot, i + 1, 0, registry)
    return acc


def single_summand(
    P: WeaklyNonlocalOperator,
    Q: WeaklyNonlocalOperator,
    slots: tuple[int, int, int],
    registry: TailRegistry | None = None,
    image: list[MultiVector] | None = None,
) -> MultiVector:
    """``l_{P,psi^a}(Q psi^b)(psi^c)`` modulo total derivatives.

    The ``d^{-1}`` part is integrated by parts:
    ``psi^c . c w_alpha d^{-1}(inner) ~ -c tpsi^c_alpha inner``."""
    a, b, c = slots
    if registry is None:
        registry = unify_tails(P, Q)
    if image is None:
        image = apply(Q, b, registry)
    lin = linearize(P, a, image, registry)
    out = _pair(lin.local, c, registry)
    for fam, coef, inner in lin.inverse:
        out = out - (MultiVector.tilde(c, fam, registry) * inner).scale(coef)
    out.registry = registry
    return out


def raw_bracket(P: WeaklyNonlocalOperator, Q: WeaklyNonlocalOperator, registry: TailRegistry | None = None) -> MultiVector:
    """The six summands added up, before normalization."""
    if registry is None:
        registry = unify_tails(P, Q)
    images = {}
    total: dict = {}
    pairs = [(P, Q)] if P is Q else [(P, Q), (Q, P)]
    for X, Y in pairs:
        for slots in CYCLIC:
            key = (id(Y), slots[1])
            if key not in images:
                images[key] = apply(Y, slots[1], registry)
            s = single_summand(X, Y, slots, registry, images[key])
            accumulate(total, s.items())
    out = MultiVector._wrap(total, registry)
    if P is Q:
        out = out.scale(2)
    return out


# ---------------------------------------------------------------------------
# normalization


def _target(key: Key) -> int:
    nl = [f[0] for f in key if f[1] == TILDE]
    if not nl:
        return 3
    if len(nl) == 1:
        return _NEXT[_NEXT[nl[0]]]
    if len(nl) == 2:
        return 6 - nl[0] - nl[1]
    raise AssertionError(f"term with {len(nl)} nonlocal factors")


def _check_trilinear(key: Key) -> None:
    if len(key) != 3 or tuple(f[0] for f in key) != (1, 2, 3):
        raise AssertionError(f"malformed term: {' * '.join(factor_str(f) for f in key)}")


def normalize(m: MultiVector, registry: TailRegistry | None = None) -> CanonicalThreeVector:
    """Integrate by parts until the target slot carries no derivative.

    Buckets are processed by (number of nonlocal factors, target order) in
    decreasing order; every rewrite lands in a strictly smaller bucket, so a
    processed bucket never refills."""
    registry = registry if registry is not None else m.registry
    buckets: dict[tuple[int, int], dict] = {}
    for key, c in m.items():
        _check_trilinear(key)
        _place(buckets, key, c)
    done: dict = {}
    while True:
        live = [b for b, terms in buckets.items() if terms and b[1] > 0]
        if not live:
            break
        top = max(live)
        terms = buckets.pop(top)
        for key, c in terms.items():
            t = _target(key)
            pos = t - 1
            slot, kind, idx, order = key[pos]
            rest = key[:pos] + key[pos + 1:]
            lowered = (slot, PSI, idx, order - 1)
            for k2, c2 in derivative_terms(rest, c, registry):
                nk = k2[:pos] + (lowered,) + k2[pos:]
                _place(buckets, nk, -c2)
    for terms in buckets.values():
        accumulate(done, terms.items())
    return _canonical(done, registry)


def _place(buckets: dict, key: Key, c: JetExpression) -> None:
    nl = sum(1 for f in key if f[1] == TILDE)
    t = _target(key)
    f = key[t - 1]
    if f[1] != PSI:
        raise AssertionError("target slot carries a nonlocal factor")
    b = buckets.get((nl, f[3]))
    if b is None:
        b = buckets[(nl, f[3])] = {}
    accumulate(b, ((key, c),))


def _canonical(terms: dict, registry) -> CanonicalThreeVector:
    out = CanonicalThreeVector(registry=registry)
    for key, c in terms.items():
        if not c:
            continue
        nl = [f for f in key if f[1] == TILDE]
        t = _target(key)
        ft = key[t - 1]
        assert ft[1] == PSI and ft[3] == 0, "non-canonical term survived normalization"
        if not nl:
            out.local[(key[0][2], key[1][2], key[2][2], key[0][3], key[1][3])] = c
        elif len(nl) == 1:
            a = nl[0][0]
            b = _NEXT[a]
            fb = key[b - 1]
            out.single[(a, nl[0][2], fb[2], fb[3], ft[2])] = c
        else:
            out.double[(nl[0][0], nl[1][0], nl[0][2], nl[1][2], ft[2])] = c
    return out


# ---------------------------------------------------------------------------


@dataclass
class BracketResult:
    vector: CanonicalThreeVector
    raw_terms: int
    timing_ms: float
    bound: int


def schouten_bracket(
    P: WeaklyNonlocalOperator,
    Q: WeaklyNonlocalOperator | None = None,
    check_bound: bool = True,
) -> CanonicalThreeVector:
    """Canonical form of ``[P, Q]`` (``[P, P]`` when ``Q`` is omitted)."""
    return schouten_bracket_timed(P, Q, check_bound).vector


def schouten_bracket_timed(
    P: WeaklyNonlocalOperator,
    Q: WeaklyNonlocalOperator | None = None,
    check_bound: bool = True,
) -> BracketResult:
    t0 = time.perf_counter()
    if Q is None:
        Q = P
    registry = unify_tails(P, Q)
    raw = raw_bracket(P, Q, registry)
    vec = normalize(raw, registry)
    bound = order_bound(P, Q)
    if check_bound:
        worst = max(vec.max_psi_order(), vec.max_jet_order())
        if worst > bound:
            raise OrderBoundError(f"derivative order {worst} exceeds working bound {bound}")
    return BracketResult(vec, len(raw), (time.perf_counter() - t0) * 1000.0, bound)
