"""Exact differential algebra of rational functions in jet variables.

Polynomials are stored sparsely as ``{monomial: mpq}`` where a monomial is a
single Python integer packing one 16-bit exponent field per interned
variable, so monomial multiplication is integer addition.  A
:class:`JetExpression` is a reduced fraction of two such polynomials with a
canonical normalization, which makes structural equality coincide with
mathematical equality.

Variables are jet coordinates ``u^i_sigma`` (optionally tagged with an
evaluation point ``x``, ``y`` or ``z`` for three-point kernels) and named
constant parameters.  Parameters have zero total derivative.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gcd, lcm
from typing import Iterable, Iterator, Mapping, Union

from gmpy2 import mpq

__all__ = [
    "JetVariable",
    "JetExpression",
    "Parameter",
    "Number",
    "ZERO",
    "ONE",
    "u",
    "param",
    "const",
    "partial_derivative",
    "total_derivative",
]

_BITS = 16
_MASK = (1 << _BITS) - 1
POINTS = ("", "x", "y", "z")


@dataclass(frozen=True, order=True)
class JetVariable:
    """The jet coordinate ``u^component_order``, optionally at a point."""

    component: int
    order: int = 0
    point: str = ""

    def __post_init__(self) -> None:
        if self.component < 1:
            raise ValueError(f"component index must be >= 1, got {self.component}")
        if self.order < 0:
            raise ValueError(f"derivative order must be >= 0, got {self.order}")
        if self.point not in POINTS:
            raise ValueError(f"unknown point {self.point!r}")

    def shifted(self, k: int = 1) -> "JetVariable":
        return JetVariable(self.component, self.order + k, self.point)

    def at(self, point: str) -> "JetVariable":
        return JetVariable(self.component, self.order, point)

    def __str__(self) -> str:
        if self.order == 0:
            s = f"u{self.component}"
        elif self.order == 1:
            s = f"u{self.component}_x"
        else:
            s = f"u{self.component}_{self.order}x"
        return f"{s}({self.point})" if self.point else s


@dataclass(frozen=True, order=True)
class Parameter:
    """A named constant; commutes with and is annihilated by d/dx."""

    name: str

    def __str__(self) -> str:
        return self.name


Var = Union[JetVariable, Parameter]


class _VarTable:
    """Interns variables into bit-field positions of packed monomials."""

    def __init__(self) -> None:
        self.keys: list[Var] = []
        self.index: dict[Var, int] = {}
        self.succ: list[int] = []

    def __call__(self, var: Var) -> int:
        idx = self.index.get(var)
        if idx is None:
            idx = len(self.keys)
            self.keys.append(var)
            self.index[var] = idx
            self.succ.append(-1)
        return idx

    def successor(self, idx: int) -> int:
        s = self.succ[idx]
        if s < 0:
            s = self(self.keys[idx].shifted())
            self.succ[idx] = s
        return s


_VARS = _VarTable()
# Pre-intern the common low-order coordinates so packed monomials stay short
# and the table layout does not depend on call order.
for _p in POINTS:
    for _o in range(6):
        for _c in range(1, 5):
            _VARS(JetVariable(_c, _o, _p))


def _sort_key(var: Var) -> tuple:
    if isinstance(var, JetVariable):
        return (0, var.point, var.order, var.component)
    return (1, var.name)


@lru_cache(maxsize=None)
def _decode(mono: int) -> tuple[tuple[int, int], ...]:
    out = []
    v = 0
    while mono:
        e = mono & _MASK
        if e:
            out.append((v, e))
        mono >>= _BITS
        v += 1
    return tuple(out)


def _bit(v: int) -> int:
    return 1 << (_BITS * v)


@lru_cache(maxsize=None)
def _mono_key(mono: int) -> tuple:
    """Graded-lex sort key, independent of interning order."""
    items = sorted((_sort_key(_VARS.keys[v]), e) for v, e in _decode(mono))
    return (sum(e for _, e in items), tuple(items))


# ---------------------------------------------------------------------------
# sparse polynomial helpers; a polynomial is a dict {mono: mpq} without zeros

Poly = dict

_P_ONE: dict = {0: mpq(1)}


def _padd(a: Poly, b: Poly) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    out = dict(a)
    for m, c in b.items():
        s = out.get(m)
        if s is None:
            out[m] = c
        else:
            s += c
            if s:
                out[m] = s
            else:
                del out[m]
    return out


def _pneg(a: Poly) -> Poly:
    return {m: -c for m, c in a.items()}


def _pscale(a: Poly, c) -> Poly:
    if not c:
        return {}
    return {m: c * x for m, x in a.items()}


def _pmul(a: Poly, b: Poly) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    if len(b) == 1:
        (mb, cb), = b.items()
        return {ma + mb: ca * cb for ma, ca in a.items()}
    out: dict = {}
    get = out.get
    for mb, cb in b.items():
        for ma, ca in a.items():
            m = ma + mb
            s = get(m)
            out[m] = ca * cb if s is None else s + ca * cb
    return {m: c for m, c in out.items() if c}


def _pmul_mono(a: Poly, mono: int) -> Poly:
    return {m + mono: c for m, c in a.items()}


def _pderiv(a: Poly, v: int) -> Poly:
    shift = _BITS * v
    one = 1 << shift
    out = {}
    for m, c in a.items():
        e = (m >> shift) & _MASK
        if e:
            out[m - one] = c * e
    return out


def _ptotal(a: Poly, point: str) -> Poly:
    """Total x-derivative of a polynomial, acting on jet variables at ``point``."""
    keys = _VARS.keys
    succ = _VARS.successor
    out: dict = {}
    get = out.get
    for m, c in a.items():
        for v, e in _decode(m):
            key = keys[v]
            if type(key) is not JetVariable or key.point != point:
                continue
            nm = m - _bit(v) + _bit(succ(v))
            nc = c * e
            s = get(nm)
            out[nm] = nc if s is None else s + nc
    return {m: c for m, c in out.items() if c}


def _is_one(a: Poly) -> bool:
    return len(a) == 1 and a.get(0) == 1


def _content_scale(den: Poly):
    """Rational ``s`` making ``s*den`` primitive over Z with positive leading coefficient."""
    dens = 1
    for c in den.values():
        dens = lcm(dens, int(c.denominator))
    nums = 0
    for c in den.values():
        nums = gcd(nums, int(c * dens))
    lead = max(den, key=_mono_key)
    s = mpq(dens, nums)
    if den[lead] < 0:
        s = -s
    return s


def _mono_gcd_with(num: Poly, mono: int) -> int:
    """Largest monomial dividing both ``mono`` and every term of ``num``."""
    g = 0
    for v, e in _decode(mono):
        shift = _BITS * v
        low = e
        for m in num:
            x = (m >> shift) & _MASK
            if x < low:
                low = x
                if not low:
                    break
        if low:
            g += low << shift
    return g


def _normalize(num: Poly, den: Poly) -> "JetExpression":
    if not den:
        raise ZeroDivisionError("division by the zero expression")
    if not num:
        return ZERO
    if len(den) == 1:
        (m, c), = den.items()
        if m == 0:
            if c == 1:
                return JetExpression._raw(num, _P_ONE)
            return JetExpression._raw(_pscale(num, 1 / c), _P_ONE)
        g = _mono_gcd_with(num, m)
        inv = 1 / c
        if g:
            num = {k - g: inv * x for k, x in num.items()}
            m -= g
        else:
            num = _pscale(num, inv)
        return JetExpression._raw(num, {m: mpq(1)} if m else _P_ONE)
    num, den = _cancel(num, den)
    if len(den) == 1:
        return _normalize(num, den)
    s = _content_scale(den)
    if s != 1:
        num = _pscale(num, s)
        den = _pscale(den, s)
    return JetExpression._raw(num, den)


@lru_cache(maxsize=256)
def _sympy_ring(nvars: int):
    from sympy.polys.domains import QQ
    from sympy.polys.rings import ring

    r, *_ = ring(",".join(f"t{i}" for i in range(nvars)), QQ)
    return r


def _cancel(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    # strip the monomial part of the gcd first, then hand the rest to sympy
    g = 0
    dmono = None
    for m in den:
        dmono = m if dmono is None else _mono_min(dmono, m)
    if dmono:
        g = _mono_gcd_with(num, dmono)
        if g:
            num = {k - g: c for k, c in num.items()}
            den = {k - g: c for k, c in den.items()}
    used = sorted({v for m in (*num, *den) for v, _ in _decode(m)})
    if not used:
        return num, den
    pos = {v: i for i, v in enumerate(used)}
    R = _sympy_ring(len(used))
    dom = R.domain

    def to_ring(p: Poly):
        terms = {}
        for m, c in p.items():
            exps = [0] * len(used)
            for v, e in _decode(m):
                exps[pos[v]] = e
            terms[tuple(exps)] = dom.convert(c)
        return R.from_dict(terms)

    def from_ring(p) -> Poly:
        out = {}
        for exps, c in p.items():
            m = 0
            for i, e in enumerate(exps):
                if e:
                    m += e << (_BITS * used[i])
            out[m] = mpq(int(dom.numer(c)), int(dom.denom(c)))
        return out

    p, q = to_ring(num).cancel(to_ring(den))
    return from_ring(p), from_ring(q)


def _mono_min(a: int, b: int) -> int:
    out = 0
    shift = 0
    while a and b:
        x = min(a & _MASK, b & _MASK)
        out |= x << shift
        a >>= _BITS
        b >>= _BITS
        shift += _BITS
    return out


# ---------------------------------------------------------------------------

Number = Union[int, "mpq", "JetExpression"]


class JetExpression:
    """Canonical reduced fraction ``num/den`` of polynomials in jet variables.

    Instances are immutable.  The denominator is primitive over the integers
    with positive leading coefficient in graded-lex order, and is coprime to
    the numerator; ``==`` therefore decides mathematical equality.
    """

    __slots__ = ("num", "den", "_hash")

    num: Poly
    den: Poly

    @classmethod
    def _raw(cls, num: Poly, den: Poly) -> "JetExpression":
        self = object.__new__(cls)
        self.num = num
        self.den = den
        self._hash = None
        return self

    @classmethod
    def coerce(cls, value) -> "JetExpression":
        if isinstance(value, JetExpression):
            return value
        if isinstance(value, (JetVariable, Parameter)):
            return cls._raw({_bit(_VARS(value)): mpq(1)}, _P_ONE)
        if isinstance(value, bool):
            raise TypeError("bool is not a jet expression")
        try:
            q = mpq(value)
        except (TypeError, ValueError):
            return NotImplemented
        return cls._raw({0: q}, _P_ONE) if q else ZERO

    @classmethod
    def fraction(cls, num: Mapping[int, object], den: Mapping[int, object] | None = None) -> "JetExpression":
        n = {m: mpq(c) for m, c in num.items() if c}
        d = _P_ONE if den is None else {m: mpq(c) for m, c in den.items() if c}
        return _normalize(n, d)

    # -- queries ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self) -> bool:
        return bool(self.num)

    def is_polynomial(self) -> bool:
        return _is_one(self.den)

    def is_constant(self) -> bool:
        """True when free of jet variables (parameters are allowed)."""
        return not any(isinstance(v, JetVariable) for v in self.variables())

    def is_rational(self) -> bool:
        return self.is_polynomial() and all(m == 0 for m in self.num)

    def as_rational(self):
        if not self.is_rational():
            raise ValueError(f"{self} is not a rational number")
        return self.num.get(0, mpq(0))

    def variables(self) -> frozenset[Var]:
        vs = {v for m in (*self.num, *self.den) for v, _ in _decode(m)}
        return frozenset(_VARS.keys[v] for v in vs)

    def jet_variables(self) -> frozenset[JetVariable]:
        return frozenset(v for v in self.variables() if isinstance(v, JetVariable))

    def jet_order(self) -> int:
        """Highest derivative order present, or -1 for constants."""
        return max((v.order for v in self.jet_variables()), default=-1)

    def points(self) -> frozenset[str]:
        return frozenset(v.point for v in self.jet_variables())

    def degree_in(self, var: Var) -> int:
        """Degree of the numerator in ``var`` (-1 for zero)."""
        shift = _BITS * _VARS(var)
        return max(((m >> shift) & _MASK for m in self.num), default=-1)

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other) -> "JetExpression":
        other = JetExpression.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other.num:
            return self
        if not self.num:
            return other
        d1, d2 = self.den, other.den
        if d1 is d2 or d1 == d2:
            num = _padd(self.num, other.num)
            if _is_one(d1):
                return JetExpression._raw(num, _P_ONE) if num else ZERO
            return _normalize(num, d1)
        if len(d1) == 1 and len(d2) == 1:
            (m1, _), = d1.items()
            (m2, _), = d2.items()
            m = _mono_max(m1, m2)
            num = _padd(_pmul_mono(self.num, m - m1), _pmul_mono(other.num, m - m2))
            return _normalize(num, {m: mpq(1)})
        return _normalize(
            _padd(_pmul(self.num, d2), _pmul(other.num, d1)), _pmul(d1, d2)
        )

    __radd__ = __add__

    def __neg__(self) -> "JetExpression":
        return JetExpression._raw(_pneg(self.num), self.den) if self.num else self

    def __pos__(self) -> "JetExpression":
        return self

    def __sub__(self, other) -> "JetExpression":
        other = JetExpression.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "JetExpression":
        return (-self) + other

    def __mul__(self, other) -> "JetExpression":
        other = JetExpression.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.num or not other.num:
            return ZERO
        if _is_one(self.den) and _is_one(other.den):
            return JetExpression._raw(_pmul(self.num, other.num), _P_ONE)
        if _is_one(other.den) and len(other.num) == 1 and 0 in other.num:
            return JetExpression._raw(_pscale(self.num, other.num[0]), self.den)
        if _is_one(self.den) and len(self.num) == 1 and 0 in self.num:
            return JetExpression._raw(_pscale(other.num, self.num[0]), other.den)
        return _normalize(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "JetExpression":
        other = JetExpression.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other.num:
            raise ZeroDivisionError("division by the zero expression")
        return _normalize(_pmul(self.num, other.den), _pmul(self.den, other.num))

    def __rtruediv__(self, other) -> "JetExpression":
        return JetExpression.coerce(other) / self

    def __pow__(self, k: int) -> "JetExpression":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return ONE / (self ** (-k))
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, JetExpression):
            other = JetExpression.coerce(other)
            if other is NotImplemented:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash((frozenset(self.num.items()), frozenset(self.den.items())))
            self._hash = h
        return h

    # -- calculus --------------------------------------------------------
    def diff(self, var: Var) -> "JetExpression":
        """Formal partial derivative treating all jet coordinates as independent."""
        idx = _VARS.index.get(var)
        if idx is None or not self.num:
            return ZERO
        dn = _pderiv(self.num, idx)
        if _is_one(self.den):
            return JetExpression._raw(dn, _P_ONE) if dn else ZERO
        dd = _pderiv(self.den, idx)
        if not dd:
            return _normalize(dn, self.den) if dn else ZERO
        return _normalize(
            _padd(_pmul(dn, self.den), _pneg(_pmul(self.num, dd))),
            _pmul(self.den, self.den),
        )

    def total_derivative(self, k: int = 1, point: str = "") -> "JetExpression":
        out = self
        for _ in range(k):
            out = out._td(point)
        return out

    def _td(self, point: str) -> "JetExpression":
        if not self.num:
            return self
        dn = _ptotal(self.num, point)
        if _is_one(self.den):
            return JetExpression._raw(dn, _P_ONE) if dn else ZERO
        dd = _ptotal(self.den, point)
        if not dd:
            return _normalize(dn, self.den) if dn else ZERO
        return _normalize(
            _padd(_pmul(dn, self.den), _pneg(_pmul(self.num, dd))),
            _pmul(self.den, self.den),
        )

    # -- substitution ----------------------------------------------------
    def map_variables(self, fn) -> "JetExpression":
        """Rename variables with ``fn: Var -> Var`` (may merge variables)."""
        table: dict[int, int] = {}

        def remap(p: Poly) -> Poly:
            out: dict = {}
            for m, c in p.items():
                nm = 0
                for v, e in _decode(m):
                    t = table.get(v)
                    if t is None:
                        t = _VARS(fn(_VARS.keys[v]))
                        table[v] = t
                    nm += e << (_BITS * t)
                s = out.get(nm)
                out[nm] = c if s is None else s + c
            return {m: c for m, c in out.items() if c}

        num = remap(self.num)
        if _is_one(self.den):
            return JetExpression._raw(num, _P_ONE) if num else ZERO
        return _normalize(num, remap(self.den))

    def at(self, point: str) -> "JetExpression":
        """Evaluate every jet coordinate at ``point``."""
        return self.map_variables(
            lambda v: v.at(point) if isinstance(v, JetVariable) else v
        )

    def move_point(self, src: str, dst: str) -> "JetExpression":
        if src not in self.points():
            return self
        return self.map_variables(
            lambda v: v.at(dst) if isinstance(v, JetVariable) and v.point == src else v
        )

    def substitute(self, values: Mapping[Var, "JetExpression"]) -> "JetExpression":
        """Replace variables by expressions."""
        if not values:
            return self

        def ev(p: Poly) -> JetExpression:
            acc = ZERO
            for m, c in p.items():
                t = JetExpression._raw({0: c}, _P_ONE)
                rest = 0
                for v, e in _decode(m):
                    key = _VARS.keys[v]
                    if key in values:
                        t = t * JetExpression.coerce(values[key]) ** e
                    else:
                        rest += e << (_BITS * v)
                acc = acc + t * JetExpression._raw({rest: mpq(1)}, _P_ONE)
            return acc

        return ev(self.num) / ev(self.den)

    # -- iteration / printing -------------------------------------------
    def numerator_terms(self) -> Iterator[tuple[mpq, tuple[tuple[Var, int], ...]]]:
        yield from _terms(self.num)

    def denominator_terms(self) -> Iterator[tuple[mpq, tuple[tuple[Var, int], ...]]]:
        yield from _terms(self.den)

    def numerator(self) -> "JetExpression":
        return JetExpression._raw(self.num, _P_ONE) if self.num else ZERO

    def denominator(self) -> "JetExpression":
        return JetExpression._raw(self.den, _P_ONE)

    def __str__(self) -> str:
        num = _poly_str(self.num)
        if _is_one(self.den):
            return num
        if len(self.num) > 1:
            num = f"({num})"
        den = _poly_str(self.den)
        if len(self.den) > 1 or len(_decode(next(iter(self.den)))) > 1:
            den = f"({den})"
        return f"{num}/{den}"

    def __repr__(self) -> str:
        return f"JetExpression({str(self)!r})"


def _mono_max(a: int, b: int) -> int:
    out = 0
    shift = 0
    while a or b:
        x = max(a & _MASK, b & _MASK)
        out |= x << shift
        a >>= _BITS
        b >>= _BITS
        shift += _BITS
    return out


def _terms(p: Poly):
    for m in sorted(p, key=_mono_key, reverse=True):
        vs = tuple(sorted(((_VARS.keys[v], e) for v, e in _decode(m)), key=lambda t: _sort_key(t[0])))
        yield p[m], vs


def _rat_str(q) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _poly_str(p: Poly) -> str:
    if not p:
        return "0"
    parts = []
    for c, vs in _terms(p):
        factors = [str(v) if e == 1 else f"{v}^{e}" for v, e in vs]
        neg = c < 0
        a = -c if neg else c
        if not factors:
            body = _rat_str(a)
        elif a == 1:
            body = "*".join(factors)
        else:
            body = "*".join([_rat_str(a), *factors])
        if not parts:
            parts.append(f"-{body}" if neg else body)
        else:
            parts.append(f" - {body}" if neg else f" + {body}")
    return "".join(parts)


ZERO = JetExpression._raw({}, _P_ONE)
ONE = JetExpression._raw({0: mpq(1)}, _P_ONE)


def const(value) -> JetExpression:
    """Exact rational constant; accepts ints, strings like ``'2/3'``, Fractions."""
    if isinstance(value, str):
        value = mpq(value)
    return JetExpression.coerce(value)


def u(component: int, order: int = 0, point: str = "") -> JetExpression:
    """The jet coordinate ``u^component_order`` as an expression."""
    return JetExpression.coerce(JetVariable(component, order, point))


def param(name: str) -> JetExpression:
    return JetExpression.coerce(Parameter(name))


def partial_derivative(f: JetExpression, v: Var) -> JetExpression:
    return JetExpression.coerce(f).diff(v)


def total_derivative(f, k: int = 1):
    """Iterated total x-derivative of a jet expression or of any object
    providing its own ``total_derivative`` (multivectors)."""
    if isinstance(f, JetExpression):
        return f.total_derivative(k)
    if hasattr(f, "total_derivative"):
        return f.total_derivative(k)
    return JetExpression.coerce(f).total_derivative(k)


def sum_expr(items: Iterable[JetExpression]) -> JetExpression:
    acc = ZERO
    for it in items:
        acc = acc + it
    return acc
