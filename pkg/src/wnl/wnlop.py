"""Weakly nonlocal operators ``B^{ij}_sigma d^sigma + c^{ab} w^i_a d^{-1} w^j_b``.

The local part is an ``n x n`` matrix of :class:`~wnl.varcalc.DiffOp`; the tail
is a symmetric constant matrix ``c`` together with ``N`` columns ``w_a``.
A :class:`TailRegistry` gives every distinct tail column one nonlocal symbol
family, shared between all operators entering a bracket.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .jetalg import ONE, ZERO, JetExpression
from .multivector import MultiVector
from .varcalc import DiffOp, formal_adjoint

__all__ = [
    "Tail",
    "WeaklyNonlocalOperator",
    "ValidationError",
    "DependentTailWarning",
    "SkewVerdict",
    "check_skew_adjoint",
    "TailRegistry",
    "unify_tails",
    "apply",
    "tail_rank",
]


class ValidationError(ValueError):
    """An operator failed validation; ``witness`` names the offending entry."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class DependentTailWarning(UserWarning):
    """Tail columns are linearly dependent over the constants."""


def _as_matrix(rows, conv) -> tuple[tuple, ...]:
    return tuple(tuple(conv(x) for x in row) for row in rows)


@dataclass(frozen=True)
class Tail:
    """Nonlocal data: ``c`` is ``N x N`` constant, ``w`` is ``n x N`` (``w[i][a]`` is ``w^{i+1}_{a+1}``)."""

    c: tuple[tuple[JetExpression, ...], ...] = ()
    w: tuple[tuple[JetExpression, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "c", _as_matrix(self.c, JetExpression.coerce))
        object.__setattr__(self, "w", _as_matrix(self.w, JetExpression.coerce))

    @property
    def size(self) -> int:
        return len(self.c)

    def column(self, alpha: int) -> tuple[JetExpression, ...]:
        return tuple(row[alpha] for row in self.w)

    @classmethod
    def empty(cls, n: int) -> "Tail":
        return cls((), tuple(() for _ in range(n)))


class WeaklyNonlocalOperator:
    """``P^{ij} = local[i][j] + sum c^{ab} w^i_a d^{-1} w^j_b``, indices 0-based internally."""

    def __init__(self, name: str, local: Sequence[Sequence], tail: Tail | None = None):
        self.name = name
        self.local: tuple[tuple[DiffOp, ...], ...] = _as_matrix(
            local, lambda e: e if isinstance(e, DiffOp) else DiffOp.multiplication(e)
        )
        self.n = len(self.local)
        self.tail = tail if tail is not None else Tail.empty(self.n)
        if self.tail.size == 0 and len(self.tail.w) != self.n:
            self.tail = Tail.empty(self.n)

    # -- structure -------------------------------------------------------
    def validate(self) -> "WeaklyNonlocalOperator":
        """Check shapes, constant symmetric ``c`` and skew-adjointness; return self."""
        n = self.n
        if n == 0 or any(len(row) != n for row in self.local):
            raise ValidationError(f"{self.name}: local part must be a square matrix", "shape")
        N = self.tail.size
        if any(len(row) != N for row in self.tail.c):
            raise ValidationError(f"{self.name}: tail.c must be square", "tail.c")
        if N and (len(self.tail.w) != n or any(len(row) != N for row in self.tail.w)):
            raise ValidationError(f"{self.name}: tail.w must be {n} x {N}", "tail.w")
        for a in range(N):
            for b in range(N):
                if self.tail.c[a][b].jet_variables():
                    raise ValidationError(
                        f"{self.name}: tail.c[{a + 1}][{b + 1}] is not constant", ("c", a + 1, b + 1)
                    )
        verdict = check_skew_adjoint(self)
        if not verdict.is_skew:
            raise ValidationError(f"{self.name}: not skew-adjoint at {verdict.witness}", verdict.witness)
        if N > 1 and tail_rank(self.tail) < sum(1 for a in range(N) if any(self.tail.column(a))):
            warnings.warn(
                f"{self.name}: tail columns are linearly dependent; the zero test may be stricter than necessary",
                DependentTailWarning,
                stacklevel=2,
            )
        return self

    def local_order(self) -> int:
        """Highest power of ``d`` in the local part (the D-order)."""
        return max((e.degree for row in self.local for e in row), default=-1)

    def jet_order(self) -> int:
        """Highest jet order among local coefficients and tail columns."""
        m = max((e.jet_order() for row in self.local for e in row), default=-1)
        for row in self.tail.w:
            for e in row:
                m = max(m, e.jet_order())
        return m

    def is_local(self) -> bool:
        return self.tail.size == 0 or not any(c for row in self.tail.c for c in row)

    def scale(self, a, name: str | None = None) -> "WeaklyNonlocalOperator":
        """``a * P``; the tail is scaled through ``c``."""
        a = JetExpression.coerce(a)
        local = [[e.scale(a) for e in row] for row in self.local]
        tail = Tail(tuple(tuple(a * x for x in row) for row in self.tail.c), self.tail.w)
        return WeaklyNonlocalOperator(name or self.name, local, tail)

    def __add__(self, other: "WeaklyNonlocalOperator") -> "WeaklyNonlocalOperator":
        if self.n != other.n:
            raise ValueError("operators act on different numbers of components")
        local = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.local, other.local)]
        N1, N2 = self.tail.size, other.tail.size
        c = [[ZERO] * (N1 + N2) for _ in range(N1 + N2)]
        for a in range(N1):
            for b in range(N1):
                c[a][b] = self.tail.c[a][b]
        for a in range(N2):
            for b in range(N2):
                c[N1 + a][N1 + b] = other.tail.c[a][b]
        if N1 + N2:
            w = [tuple(self.tail.w[i]) + tuple(other.tail.w[i]) for i in range(self.n)]
            tail = Tail(c, w)
        else:
            tail = None
        return WeaklyNonlocalOperator(f"{self.name}+{other.name}", local, tail)

    def __str__(self) -> str:
        lines = [f"operator {self.name} ({self.n} components)"]
        for i, row in enumerate(self.local, start=1):
            for j, e in enumerate(row, start=1):
                if e:
                    lines.append(f"  local.{i}.{j} = {e}")
        N = self.tail.size
        if N:
            rows = "; ".join(", ".join(str(x) for x in row) for row in self.tail.c)
            lines.append(f"  tail.c = {rows}")
            for i, row in enumerate(self.tail.w, start=1):
                for a, e in enumerate(row, start=1):
                    lines.append(f"  tail.w.{i}.{a} = {e}")
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"WeaklyNonlocalOperator({self.name!r}, n={self.n}, N={self.tail.size})"


@dataclass(frozen=True)
class SkewVerdict:
    is_skew: bool
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.is_skew


def check_skew_adjoint(P: WeaklyNonlocalOperator) -> SkewVerdict:
    """Skew iff ``local^dagger + local == 0`` and ``c`` is symmetric.

    The witness is ``("local", i, j)`` (1-based) or ``("c", a, b)``."""
    adj = formal_adjoint(P.local)
    for i in range(P.n):
        for j in range(P.n):
            if adj[i][j] + P.local[i][j]:
                return SkewVerdict(False, ("local", i + 1, j + 1))
    c = P.tail.c
    for a in range(P.tail.size):
        for b in range(a + 1, P.tail.size):
            if c[a][b] != c[b][a]:
                return SkewVerdict(False, ("c", a + 1, b + 1))
    return SkewVerdict(True)


def tail_rank(tail: Tail) -> int:
    """Rank of the tail columns over the constants, each column flattened to
    its coefficients on jet monomials after clearing a common denominator."""
    import sympy

    N = tail.size
    if N == 0:
        return 0
    den = ONE
    seen = set()
    for row in tail.w:
        for e in row:
            d = e.denominator()
            if d not in seen:
                seen.add(d)
                den = den * d
    coords: dict = {}
    cols = []
    for a in range(N):
        vec = {}
        for i, row in enumerate(tail.w):
            for c, mono in (row[a] * den).numerator_terms():
                key = (i, mono)
                coords.setdefault(key, len(coords))
                vec[coords[key]] = sympy.Rational(int(c.numerator), int(c.denominator))
        cols.append(vec)
    m = sympy.zeros(len(coords), N)
    for a, vec in enumerate(cols):
        for r, v in vec.items():
            m[r, a] = v
    return m.rank()


class TailRegistry:
    """Distinct nonzero tail columns across a set of operators.

    ``columns[f]`` is the column of family ``f``; ``families(op)[a]`` is the
    family of column ``a`` of ``op`` (``None`` for a zero column)."""

    def __init__(self):
        self.columns: list[tuple[JetExpression, ...]] = []
        self._index: dict[tuple[JetExpression, ...], int] = {}
        self._maps: dict[int, tuple[int | None, ...]] = {}
        self._ops: list[WeaklyNonlocalOperator] = []

    def register(self, op: WeaklyNonlocalOperator) -> tuple[int | None, ...]:
        got = self._maps.get(id(op))
        if got is not None:
            return got
        fams = []
        for a in range(op.tail.size):
            col = op.tail.column(a)
            if not any(col):
                fams.append(None)
                continue
            f = self._index.get(col)
            if f is None:
                f = self._index[col] = len(self.columns)
                self.columns.append(col)
            fams.append(f)
        out = tuple(fams)
        self._maps[id(op)] = out
        self._ops.append(op)  # keep alive so ids stay unique
        return out

    def families(self, op: WeaklyNonlocalOperator) -> tuple[int | None, ...]:
        """Family of each tail column of ``op`` (registering ``op`` if needed)."""
        return self.register(op)

    def __len__(self) -> int:
        return len(self.columns)

    def __contains__(self, op) -> bool:
        return id(op) in self._maps


def unify_tails(*ops: WeaklyNonlocalOperator) -> TailRegistry:
    """Registry in which structurally equal columns share one symbol family."""
    reg = TailRegistry()
    for op in ops:
        reg.register(op)
    return reg


def apply(P: WeaklyNonlocalOperator, slot: int, registry: TailRegistry | None = None) -> list[MultiVector]:
    """``P(psi^slot)`` as a vector of multivectors linear in ``psi^slot`` and ``tpsi^slot``."""
    if registry is None:
        registry = unify_tails(P)
    fams = registry.families(P)
    out = []
    for i in range(P.n):
        acc = MultiVector(registry=registry)
        for j in range(P.n):
            e = P.local[i][j]
            if e:
                acc = acc + e.apply(MultiVector.psi(slot, j + 1, 0, registry))
        for a in range(P.tail.size):
            wa = P.tail.w[i][a]
            if not wa or fams[a] is None:
                continue
            for b in range(P.tail.size):
                cab = P.tail.c[a][b]
                if cab and fams[b] is not None:
                    acc = acc + MultiVector.tilde(slot, fams[b], registry).scale(cab * wa)
        acc.registry = registry
        out.append(acc)
    return out


def iter_tail_pairs(P: WeaklyNonlocalOperator, fams: Iterable[int | None]) -> Iterable[tuple[int, int, JetExpression]]:
    """Nonzero ``(a, b, c^{ab})`` with both columns registered."""
    fams = tuple(fams)
    for a in range(P.tail.size):
        if fams[a] is None:
            continue
        for b in range(P.tail.size):
            cab = P.tail.c[a][b]
            if cab and fams[b] is not None:
                yield a, b, cab
