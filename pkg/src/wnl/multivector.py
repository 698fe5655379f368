"""Differential polynomials in covector symbols ``psi^a_{i,sigma}`` and nonlocal
symbols ``tpsi^a_alpha``, with jet-expression coefficients.

A factor is a tuple ``(slot, kind, index, order)``: ``kind == PSI`` is the
covector component ``index`` of argument ``slot`` differentiated ``order``
times; ``kind == TILDE`` is the nonlocal variable of tail family ``index``
(order always 0).  A term key is the tuple of its factors sorted by slot.

The x-derivative of a nonlocal symbol is local,
``d/dx tpsi^a_alpha = sum_i w^i_alpha psi^a_{i,0}``, which needs the tail
columns; they come from ``registry.columns``.
"""
from __future__ import annotations

from typing import Iterable, Iterator, Mapping

from .jetalg import ONE, JetExpression

PSI = 0
TILDE = 1

Factor = tuple[int, int, int, int]
Key = tuple[Factor, ...]


def psi_factor(slot: int, component: int, order: int = 0) -> Factor:
    return (slot, PSI, component, order)


def tilde_factor(slot: int, family: int) -> Factor:
    return (slot, TILDE, family, 0)


def factor_str(f: Factor) -> str:
    slot, kind, idx, order = f
    if kind == TILDE:
        return f"tpsi{slot}[{idx}]"
    if order == 0:
        return f"psi{slot}_{idx}"
    if order == 1:
        return f"psi{slot}_{idx}_x"
    return f"psi{slot}_{idx}_{order}x"


class MultiVector:
    """Formal sum of ``coefficient * product of slot factors``; immutable by convention."""

    __slots__ = ("terms", "registry")

    def __init__(self, terms: Mapping[Key, JetExpression] | None = None, registry=None):
        self.terms: dict[Key, JetExpression] = (
            {k: v for k, v in terms.items() if v} if terms else {}
        )
        self.registry = registry

    @classmethod
    def _wrap(cls, terms: dict, registry) -> "MultiVector":
        self = object.__new__(cls)
        self.terms = terms
        self.registry = registry
        return self

    @classmethod
    def psi(cls, slot: int, component: int, order: int = 0, registry=None) -> "MultiVector":
        return cls._wrap({(psi_factor(slot, component, order),): ONE}, registry)

    @classmethod
    def tilde(cls, slot: int, family: int, registry=None) -> "MultiVector":
        return cls._wrap({(tilde_factor(slot, family),): ONE}, registry)

    @classmethod
    def scalar(cls, c: JetExpression, registry=None) -> "MultiVector":
        c = JetExpression.coerce(c)
        return cls._wrap({(): c} if c else {}, registry)

    # -- structure -------------------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[Key]:
        return iter(self.terms)

    def items(self):
        return self.terms.items()

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiVector):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def slots(self) -> frozenset[int]:
        return frozenset(f[0] for k in self.terms for f in k)

    def _reg(self, other: "MultiVector"):
        return self.registry if self.registry is not None else other.registry

    # -- linear structure -----------------------------------------------
    def __add__(self, other: "MultiVector") -> "MultiVector":
        if not isinstance(other, MultiVector):
            return NotImplemented
        out = dict(self.terms)
        _accumulate(out, other.terms.items())
        return MultiVector._wrap(out, self._reg(other))

    def __neg__(self) -> "MultiVector":
        return MultiVector._wrap({k: -v for k, v in self.terms.items()}, self.registry)

    def __sub__(self, other: "MultiVector") -> "MultiVector":
        return self + (-other)

    def scale(self, c) -> "MultiVector":
        c = JetExpression.coerce(c)
        if not c:
            return MultiVector._wrap({}, self.registry)
        if c == ONE:
            return self
        out = {}
        for k, v in self.terms.items():
            p = v * c
            if p:
                out[k] = p
        return MultiVector._wrap(out, self.registry)

    def __mul__(self, other) -> "MultiVector":
        if not isinstance(other, MultiVector):
            return self.scale(other)
        out: dict = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                key = tuple(sorted(k1 + k2))
                _accumulate(out, ((key, c1 * c2),))
        return MultiVector._wrap(out, self._reg(other))

    def __rmul__(self, c) -> "MultiVector":
        return self.scale(c)

    # -- calculus --------------------------------------------------------
    def total_derivative(self, k: int = 1) -> "MultiVector":
        out = self
        for _ in range(k):
            out = out._td()
        return out

    def _td(self) -> "MultiVector":
        out: dict = {}
        for key, c in self.terms.items():
            _accumulate(out, derivative_terms(key, c, self.registry))
        return MultiVector._wrap(out, self.registry)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for key in sorted(self.terms):
            c = self.terms[key]
            fs = "*".join(factor_str(f) for f in key)
            parts.append(f"({c})*{fs}" if fs else f"({c})")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"MultiVector({self})"


def derivative_terms(key: Key, c: JetExpression, registry) -> Iterable[tuple[Key, JetExpression]]:
    """Leibniz expansion of d/dx(c * key) as (key, coefficient) pairs."""
    dc = c.total_derivative()
    if dc:
        yield key, dc
    for pos, f in enumerate(key):
        slot, kind, idx, order = f
        if kind == PSI:
            yield key[:pos] + ((slot, PSI, idx, order + 1),) + key[pos + 1:], c
        else:
            if registry is None:
                raise ValueError("derivative of a nonlocal symbol needs the tail registry")
            for i, w in enumerate(registry.columns[idx], start=1):
                if w:
                    yield key[:pos] + ((slot, PSI, i, 0),) + key[pos + 1:], c * w


def _accumulate(out: dict, items: Iterable[tuple[Key, JetExpression]]) -> None:
    for k, v in items:
        s = out.get(k)
        if s is None:
            if v:
                out[k] = v
        else:
            s = s + v
            if s:
                out[k] = s
            else:
                del out[k]


accumulate = _accumulate

__all__ = [
    "PSI",
    "TILDE",
    "Factor",
    "Key",
    "MultiVector",
    "psi_factor",
    "tilde_factor",
    "factor_str",
    "derivative_terms",
    "accumulate",
]

