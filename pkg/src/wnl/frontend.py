"""Expression grammar, the ``.wnl`` problem format and bundled examples.

Expressions use Python's own tokenizer and parser (``^`` is read as a
power), then a whitelisting evaluator turns the syntax tree into jet
expressions or differential operators.
"""
from __future__ import annotations

import ast
import configparser
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from .jetalg import JetExpression, JetVariable, Parameter
from .varcalc import D, DiffOp
from .wnlop import Tail, ValidationError, WeaklyNonlocalOperator

__all__ = [
    "ParseError",
    "parse_expression",
    "parse_operator_entry",
    "parse_matrix",
    "Problem",
    "parse_problem",
    "load_problem",
    "bundled_examples",
    "bundled_path",
    "RESERVED",
]

RESERVED = frozenset({"D", "x", "y", "z"})
_JET = re.compile(r"^u([1-9][0-9]*)(?:_(?:([1-9][0-9]*)?x))?$")
_IDENT = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")


class ParseError(ValueError):
    """Syntax or naming error; ``position`` is a 0-based column in ``text``."""

    def __init__(self, message: str, text: str = "", position: int | None = None):
        self.text = text
        self.position = position
        self.bare = message
        if position is not None and text:
            message = f"{message} at column {position + 1}: {text!r}"
        super().__init__(message)


def _jet_variable(name: str, n: int | None) -> JetVariable | None:
    m = _JET.match(name)
    if not m:
        return None
    comp = int(m.group(1))
    if name.endswith("x"):
        order = int(m.group(2)) if m.group(2) else 1
    else:
        order = 0
    if n is not None and comp > n:
        raise ValueError(f"component index {comp} out of range 1..{n}")
    return JetVariable(comp, order)


class _Evaluator:
    def __init__(self, text: str, offsets: list[int], n, params, allow_d: bool):
        self.text = text
        self.offsets = offsets
        self.n = n
        self.params = params
        self.allow_d = allow_d

    def pos(self, node) -> int:
        col = getattr(node, "col_offset", 0)
        return self.offsets[col] if col < len(self.offsets) else col

    def fail(self, msg: str, node) -> ParseError:
        return ParseError(msg, self.text, self.pos(node))

    def __call__(self, node):
        meth = getattr(self, "visit_" + type(node).__name__, None)
        if meth is None:
            raise self.fail(f"unsupported syntax {type(node).__name__}", node)
        return meth(node)

    def visit_Expression(self, node):
        return self(node.body)

    def visit_Constant(self, node):
        if isinstance(node.value, bool) or not isinstance(node.value, int):
            raise self.fail("only integer literals are allowed", node)
        return JetExpression.coerce(node.value)

    def visit_Name(self, node):
        name = node.id
        if name == "D":
            if not self.allow_d:
                raise self.fail("D is only allowed in operator entries", node)
            return D
        try:
            v = _jet_variable(name, self.n)
        except ValueError as e:
            raise self.fail(str(e), node) from None
        if v is not None:
            return JetExpression.coerce(v)
        if name in self.params:
            return JetExpression.coerce(Parameter(name))
        raise self.fail(f"unknown identifier {name!r}", node)

    def visit_Call(self, node):
        # pointed jet variable u1_x(y)
        if (
            isinstance(node.func, ast.Name)
            and len(node.args) == 1
            and not node.keywords
            and isinstance(node.args[0], ast.Name)
            and node.args[0].id in ("x", "y", "z")
        ):
            try:
                v = _jet_variable(node.func.id, self.n)
            except ValueError as e:
                raise self.fail(str(e), node) from None
            if v is not None:
                return JetExpression.coerce(v.at(node.args[0].id))
        raise self.fail("function calls are not part of the grammar", node)

    def visit_UnaryOp(self, node):
        val = self(node.operand)
        if isinstance(node.op, ast.USub):
            return -val
        if isinstance(node.op, ast.UAdd):
            return val
        raise self.fail("unsupported unary operator", node)

    def visit_BinOp(self, node):
        op = node.op
        if isinstance(op, ast.Pow):
            base = self(node.left)
            e = node.right
            sign = 1
            if isinstance(e, ast.UnaryOp) and isinstance(e.op, ast.USub):
                sign, e = -1, e.operand
            if not (isinstance(e, ast.Constant) and type(e.value) is int):
                raise self.fail("exponents must be integer literals", node.right)
            k = sign * e.value
            if isinstance(base, DiffOp):
                if k < 0:
                    raise self.fail("negative powers of D are not allowed", node.right)
                out = DiffOp((1,))
                for _ in range(k):
                    out = out @ base
                return out
            if k < 0 and not base:
                raise self.fail("division by zero", node)
            return base**k
        a, b = self(node.left), self(node.right)
        if isinstance(op, ast.Add):
            return _lift(a) + _lift(b) if _mixed(a, b) else a + b
        if isinstance(op, ast.Sub):
            return _lift(a) - _lift(b) if _mixed(a, b) else a - b
        if isinstance(op, ast.Mult):
            if isinstance(a, DiffOp) or isinstance(b, DiffOp):
                return _lift(a) @ _lift(b)
            return a * b
        if isinstance(op, ast.Div):
            if isinstance(b, DiffOp):
                raise self.fail("cannot divide by an operator", node.right)
            if not b:
                raise self.fail("division by zero", node.right)
            if isinstance(a, DiffOp):
                return a @ DiffOp.multiplication(1 / b)
            return a / b
        raise self.fail(f"unsupported operator {type(op).__name__}", node)


def _mixed(a, b) -> bool:
    return isinstance(a, DiffOp) or isinstance(b, DiffOp)


def _lift(a) -> DiffOp:
    return a if isinstance(a, DiffOp) else DiffOp.multiplication(a)


def _prepare(text: str) -> tuple[str, list[int]]:
    """Replace ``^`` by ``**`` and record column offsets back into ``text``."""
    out = []
    offsets = []
    for i, ch in enumerate(text):
        if ch == "^":
            out.append("**")
            offsets += [i, i]
        else:
            out.append(ch)
            offsets.append(i)
    offsets.append(len(text))
    return "".join(out), offsets


def _parse(text: str, n, params, allow_d: bool):
    if not isinstance(text, str):
        raise ParseError("expression must be a string")
    if not text.strip():
        raise ParseError("empty expression", text, 0)
    src, offsets = _prepare(text.strip())
    stripped = text.strip()
    shift = text.index(stripped[0])
    offsets = [o + shift for o in offsets]
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as e:
        col = (e.offset or 1) - 1
        col = offsets[min(col, len(offsets) - 1)]
        raise ParseError(f"syntax error ({e.msg})", text, col) from None
    return _Evaluator(text, offsets, n, frozenset(params), allow_d)(tree)


def parse_expression(text: str, components: int | None = None, parameters=()) -> JetExpression:
    """Parse a jet expression such as ``"(u2^2 + u2*u3 - 1)/u1"``."""
    val = _parse(text, components, parameters, allow_d=False)
    return val


def parse_operator_entry(text: str, components: int | None = None, parameters=()) -> DiffOp:
    """Parse a scalar differential operator written as a polynomial in ``D``."""
    return _lift(_parse(text, components, parameters, allow_d=True))


def parse_matrix(text: str, components: int | None = None, parameters=()) -> list[list[JetExpression]]:
    """Rows separated by ``;``, entries by ``,``."""
    rows = [r for r in text.split(";")]
    out = [[parse_expression(e, components, parameters) for e in r.split(",")] for r in rows]
    if any(len(r) != len(out) for r in out):
        raise ParseError("matrix must be square", text, 0)
    return out


# ---------------------------------------------------------------------------
# problem files


@dataclass
class Problem:
    components: int
    parameters: tuple[str, ...] = ()
    operators: dict[str, WeaklyNonlocalOperator] = field(default_factory=dict)
    source: str = ""

    def operator(self, name: str) -> WeaklyNonlocalOperator:
        try:
            return self.operators[name]
        except KeyError:
            known = ", ".join(self.operators) or "none"
            raise KeyError(f"no operator {name!r} (defined: {known})") from None


_KEY = re.compile(r"^(local)\.(\d+)\.(\d+)$|^tail\.c$|^(tail\.w)\.(\d+)\.(\d+)$")


def parse_problem(text: str, validate: bool = True, source: str = "<string>") -> Problem:
    """Parse the ``.wnl`` format.  With ``validate`` every operator must be skew."""
    cp = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        raise ParseError(f"{source}: {e}") from None
    if "system" not in cp:
        raise ParseError(f"{source}: missing [system] section")
    sysc = cp["system"]
    try:
        n = int(sysc.get("components", ""))
    except ValueError:
        raise ParseError(f"{source}: [system] components must be a positive integer") from None
    if n < 1:
        raise ParseError(f"{source}: [system] components must be a positive integer")
    params = tuple(p.strip() for p in sysc.get("parameters", "").replace(",", " ").split() if p.strip())
    for p in params:
        if not _IDENT.match(p) or p in RESERVED or _JET.match(p):
            raise ParseError(f"{source}: invalid parameter name {p!r}")
    for key in sysc:
        if key not in ("components", "parameters"):
            raise ParseError(f"{source}: unknown key {key!r} in [system]")
    prob = Problem(n, params, source=source)
    for sec in cp.sections():
        if sec == "system":
            continue
        if not sec.startswith("operator."):
            raise ParseError(f"{source}: unknown section [{sec}]")
        name = sec[len("operator."):]
        if not _IDENT.match(name):
            raise ParseError(f"{source}: invalid operator name {name!r}")
        prob.operators[name] = _operator_from_section(name, cp[sec], n, params, source)
    if not prob.operators:
        raise ParseError(f"{source}: no [operator.NAME] sections")
    if validate:
        for op in prob.operators.values():
            op.validate()
    return prob


def _operator_from_section(name, sec, n, params, source) -> WeaklyNonlocalOperator:
    local = [[DiffOp() for _ in range(n)] for _ in range(n)]
    c = None
    wcells: dict[tuple[int, int], JetExpression] = {}

    def where(key):
        return f"{source}: [operator.{name}] {key}"

    for key, value in sec.items():
        value = " ".join(value.split())
        m = _KEY.match(key)
        if not m:
            raise ParseError(f"{where(key)}: unknown key")
        try:
            if m.group(1):
                i, j = int(m.group(2)), int(m.group(3))
                if not (1 <= i <= n and 1 <= j <= n):
                    raise ParseError(f"{where(key)}: index out of range 1..{n}")
                local[i - 1][j - 1] = parse_operator_entry(value, n, params)
            elif m.group(4):
                i, a = int(m.group(5)), int(m.group(6))
                if not 1 <= i <= n or a < 1:
                    raise ParseError(f"{where(key)}: index out of range")
                wcells[(i, a)] = parse_expression(value, n, params)
            else:
                c = parse_matrix(value, n, params)
        except ParseError as e:
            if e.text:
                raise ParseError(f"{where(key)}: {e.bare}", e.text, e.position) from None
            raise
    N = len(c) if c is not None else 0
    if any(a > N for (_, a) in wcells):
        raise ParseError(f"{source}: [operator.{name}] tail.w column index exceeds size of tail.c ({N})")
    if N == 0:
        return WeaklyNonlocalOperator(name, local)
    for a in range(N):
        for b in range(a + 1, N):
            if c[a][b] != c[b][a]:
                raise ValidationError(f"{name}: tail.c is not symmetric", ("c", a + 1, b + 1))
    w = [[wcells.get((i + 1, a + 1), JetExpression.coerce(0)) for a in range(N)] for i in range(n)]
    return WeaklyNonlocalOperator(name, local, Tail(c, w))


def bundled_examples() -> list[str]:
    root = resources.files("wnl") / "data"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".wnl"))


def bundled_path(name: str):
    if not name.endswith(".wnl"):
        name += ".wnl"
    return resources.files("wnl") / "data" / name


def load_problem(path: str | Path, validate: bool = True) -> Problem:
    """Read a problem file; names of bundled examples are accepted when no
    such file exists on disk."""
    p = Path(path)
    if p.exists():
        text = p.read_text(encoding="utf-8")
    else:
        b = bundled_path(str(path))
        if not b.is_file():
            raise FileNotFoundError(f"no such file: {path}")
        text = b.read_text(encoding="utf-8")
    return parse_problem(text, validate=validate, source=str(path))
