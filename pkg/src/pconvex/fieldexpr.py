"""Scalar-field expressions: a tiny closed language with exact 2-jets.

Weights and defining functions enter the package as text in a deliberately
small grammar::

    expr    := ['-'] term (('+'|'-') term)*
    term    := factor (('*'|'/') factor)*
    factor  := base ('^' factor)?            # '^' right-associative
    base    := NUMBER | VAR | '(' expr ')' | FUNC '(' expr ')'
    FUNC    := exp | log | sqrt
    VAR     := x1, x2, ...                   # 1-based coordinates

Unary minus is sugar for ``0 - e``.  Parsing produces an immutable AST;
:func:`to_text` serializes it back so that ``parse(to_text(e))`` reproduces
the tree node-for-node (for parser-produced trees; hand-built negative
literals serialize through the unary-minus sugar and so re-parse to the
sugared tree).

Evaluation is second-order forward mode: every node maps to a
:class:`Jet2` — value, gradient, dense symmetric Hessian — so Hessians are
exact, not differenced.  Integer powers are expanded by repeated
multiplication (valid for negative bases); everything else routes through
``exp``/``log`` with strict domain checks that surface as
:class:`~pconvex.errors.DomainError`.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ArityError, DomainError, ParseError, UnknownVariable

__all__ = [
    "Jet2",
    "Num",
    "Var",
    "BinOp",
    "Call",
    "ScalarFieldExpr",
    "parse",
    "to_text",
    "compose_df",
]

_FUNCS = ("exp", "log", "sqrt")
_MAX_INT_POW = 512


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        raise DomainError(f"exp overflow at argument {v!r}") from None


# ---------------------------------------------------------------------------
# second-order jets
# ---------------------------------------------------------------------------

@dataclass
class Jet2:
    """Value, gradient, and dense symmetric Hessian at a point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray

    @classmethod
    def constant(cls, c: float, n: int) -> "Jet2":
        return cls(float(c), np.zeros(n), np.zeros((n, n)))

    @classmethod
    def variable(cls, value: float, index: int, n: int) -> "Jet2":
        """The jet of the coordinate x_index (1-based) at the given value."""
        g = np.zeros(n)
        g[index - 1] = 1.0
        return cls(float(value), g, np.zeros((n, n)))

    @property
    def n(self) -> int:
        return self.grad.shape[0]

    def _coerce(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(float(other), self.n)

    def __add__(self, other) -> "Jet2":
        o = self._coerce(other)
        return Jet2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet2":
        o = self._coerce(other)
        return Jet2(self.value - o.value, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other) -> "Jet2":
        return self._coerce(other).__sub__(self)

    def __mul__(self, other) -> "Jet2":
        o = self._coerce(other)
        outer = np.outer(self.grad, o.grad)
        return Jet2(self.value * o.value,
                    self.value * o.grad + o.value * self.grad,
                    self.value * o.hess + o.value * self.hess + outer + outer.T)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet2":
        o = self._coerce(other)
        if o.value == 0.0:
            raise DomainError("division by zero")
        q = self.value / o.value
        gq = (self.grad - q * o.grad) / o.value
        cross = np.outer(gq, o.grad)
        hq = (self.hess - cross - cross.T - q * o.hess) / o.value
        return Jet2(q, gq, hq)

    def __rtruediv__(self, other) -> "Jet2":
        return self._coerce(other).__truediv__(self)

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.grad, -self.hess)

    def exp(self) -> "Jet2":
        e = _exp(self.value)
        return Jet2(e, e * self.grad, e * (self.hess + np.outer(self.grad, self.grad)))

    def log(self) -> "Jet2":
        if self.value <= 0.0:
            raise DomainError(f"log of non-positive value {self.value!r}")
        v = self.value
        return Jet2(math.log(v), self.grad / v,
                    self.hess / v - np.outer(self.grad, self.grad) / v**2)

    def sqrt(self) -> "Jet2":
        if self.value <= 0.0:
            raise DomainError(f"sqrt of non-positive value {self.value!r} "
                              "(jets are singular at 0)")
        s = math.sqrt(self.value)
        return Jet2(s, self.grad / (2.0 * s),
                    self.hess / (2.0 * s) - np.outer(self.grad, self.grad) / (4.0 * s**3))

    def powi(self, k: int) -> "Jet2":
        """Integer power by repeated multiplication (negative bases allowed)."""
        if k == 0:
            return Jet2.constant(1.0, self.n)
        if k < 0:
            if self.value == 0.0:
                raise DomainError("zero base with negative exponent")
            return Jet2.constant(1.0, self.n) / self.powi(-k)
        out = self
        for _ in range(k - 1):
            out = out * self
        return out

    def pow_general(self, other: "Jet2") -> "Jet2":
        if self.value <= 0.0:
            raise DomainError(
                f"fractional/variable power of non-positive base {self.value!r}")
        return (other * self.log()).exp()


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int            # 1-based


@dataclass(frozen=True)
class BinOp:
    op: str               # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str               # exp | log | sqrt
    arg: "Node"


Node = Union[Num, Var, BinOp, Call]


def _max_var(node: Node) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, BinOp):
        return max(_max_var(node.left), _max_var(node.right))
    if isinstance(node, Call):
        return _max_var(node.arg)
    return 0


# ---------------------------------------------------------------------------
# tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == m.start():
            # skip pure whitespace tail
            rest = text[pos:]
            if rest.strip() == "":
                break
            offset = pos + len(rest) - len(rest.lstrip())
            raise ParseError(f"unexpected character {text[offset]!r}", offset)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, n: Optional[int]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.declared_n = n

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, off = self.peek()
        if kind == "op" and val == op:
            return self.advance()
        raise ParseError(f"expected {op!r}", off)

    # grammar ------------------------------------------------------------
    def parse_expr(self) -> Node:
        kind, val, off = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            node: Node = BinOp("-", Num(0.0), self.parse_term())
        else:
            node = self.parse_term()
        while True:
            kind, val, off = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = BinOp(val, node, self.parse_term())
            else:
                return node

    def parse_term(self) -> Node:
        node = self.parse_factor()
        while True:
            kind, val, off = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = BinOp(val, node, self.parse_factor())
            else:
                return node

    def parse_factor(self) -> Node:
        node = self.parse_base()
        kind, val, off = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            return BinOp("^", node, self.parse_factor())
        return node

    def parse_base(self) -> Node:
        kind, val, off = self.advance()
        if kind == "num":
            value = float(val)
            if not math.isfinite(value):
                raise ParseError(f"numeric literal {val!r} overflows", off)
            return Num(value)
        if kind == "name":
            if val in _FUNCS:
                self.expect_op("(")
                nkind, nval, noff = self.peek()
                if nkind == "op" and nval == ")":
                    raise ArityError(f"{val} expects exactly one argument, got 0", noff)
                arg = self.parse_expr()
                nkind, nval, noff = self.peek()
                if nkind == "op" and nval == ",":
                    raise ArityError(f"{val} expects exactly one argument", noff)
                self.expect_op(")")
                return Call(val, arg)
            m = re.fullmatch(r"x([1-9][0-9]*)", val)
            if m:
                index = int(m.group(1))
                if self.declared_n is not None and index > self.declared_n:
                    raise UnknownVariable(
                        f"variable {val} exceeds declared dimension {self.declared_n}", off)
                return Var(index)
            if re.fullmatch(r"x[0-9]*", val):
                raise UnknownVariable(
                    f"{val!r} is not a valid variable (variables are x1, x2, ...)", off)
            raise ParseError(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        raise ParseError(f"expected a number, variable, function, or '('", off)


def parse(text: str, n: Optional[int] = None) -> "ScalarFieldExpr":
    """Parse expression text into a :class:`ScalarFieldExpr`.

    ``n`` declares the ambient dimension; omitted, it is inferred as the
    largest variable index used (at least 1).  Variables beyond a declared
    ``n`` raise :class:`UnknownVariable`.
    """
    parser = _Parser(text, n)
    root = parser.parse_expr()
    kind, val, off = parser.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing input {val!r}", off)
    dim = n if n is not None else max(_max_var(root), 1)
    return ScalarFieldExpr(root=root, n=dim)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}
_ATOM = 4


def _prec(node: Node) -> int:
    return _PREC[node.op] if isinstance(node, BinOp) else _ATOM


def _node_text(node: Node) -> str:
    if isinstance(node, Num):
        if node.value < 0 or (node.value == 0.0 and math.copysign(1.0, node.value) < 0):
            return f"(0-{repr(-node.value)})"
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Call):
        return f"{node.fn}({_node_text(node.arg)})"
    op = node.op
    lt, rt = _node_text(node.left), _node_text(node.right)
    if op in "+-":
        if _prec(node.right) <= 1:
            rt = f"({rt})"
        return f"{lt}{op}{rt}"
    if op in "*/":
        if _prec(node.left) < 2:
            lt = f"({lt})"
        if _prec(node.right) <= 2:
            rt = f"({rt})"
        return f"{lt}{op}{rt}"
    # '^': base must be an atom; exponent is a factor
    if _prec(node.left) < _ATOM:
        lt = f"({lt})"
    if _prec(node.right) < 3:
        rt = f"({rt})"
    return f"{lt}^{rt}"


def to_text(obj: Union[Node, "ScalarFieldExpr"]) -> str:
    """Serialize an AST (or field) to grammar text; inverse of :func:`parse`."""
    node = obj.root if isinstance(obj, ScalarFieldExpr) else obj
    return _node_text(node)


# ---------------------------------------------------------------------------
# the public field type
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarFieldExpr:
    """An immutable scalar field over R^n defined by an expression tree."""

    root: Node
    n: int

    def __post_init__(self):
        used = _max_var(self.root)
        if used > self.n:
            raise UnknownVariable(
                f"expression uses x{used} but n = {self.n}", 0)

    def eval_jet2(self, x) -> Jet2:
        """Exact value/gradient/Hessian at ``x`` (forward-mode 2-jets)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.n},)")
        jet = _eval_jet(self.root, x, self.n)
        if not (math.isfinite(jet.value) and np.isfinite(jet.grad).all()
                and np.isfinite(jet.hess).all()):
            raise DomainError("evaluation produced a non-finite jet")
        return jet

    def value(self, x) -> float:
        """Value-only evaluation (same domain rules, no derivative work)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.n},)")
        v = _eval_value(self.root, x)
        if not math.isfinite(v):
            raise DomainError("evaluation produced a non-finite value")
        return v

    __call__ = value

    def to_text(self) -> str:
        return to_text(self.root)


def _eval_jet(node: Node, x: np.ndarray, n: int) -> Jet2:
    if isinstance(node, Num):
        return Jet2.constant(node.value, n)
    if isinstance(node, Var):
        return Jet2.variable(x[node.index - 1], node.index, n)
    if isinstance(node, Call):
        arg = _eval_jet(node.arg, x, n)
        return getattr(arg, node.fn)()
    left = _eval_jet(node.left, x, n)
    if node.op == "^":
        if isinstance(node.right, Num) and float(node.right.value).is_integer() \
                and abs(node.right.value) <= _MAX_INT_POW:
            return left.powi(int(node.right.value))
        return left.pow_general(_eval_jet(node.right, x, n))
    right = _eval_jet(node.right, x, n)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    return left / right


def _eval_value(node: Node, x: np.ndarray) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return float(x[node.index - 1])
    if isinstance(node, Call):
        v = _eval_value(node.arg, x)
        if node.fn == "exp":
            return _exp(v)
        if v <= 0.0:
            raise DomainError(f"{node.fn} of non-positive value {v!r}")
        return math.log(v) if node.fn == "log" else math.sqrt(v)
    a = _eval_value(node.left, x)
    if node.op == "^":
        if isinstance(node.right, Num) and float(node.right.value).is_integer() \
                and abs(node.right.value) <= _MAX_INT_POW:
            k = int(node.right.value)
            if k < 0 and a == 0.0:
                raise DomainError("zero base with negative exponent")
            if k == 0:
                return 1.0
            # repeated multiplication, matching the jet path bit-for-bit
            out = a
            for _ in range(abs(k) - 1):
                out *= a
            return out if k > 0 else 1.0 / out
        b = _eval_value(node.right, x)
        if a <= 0.0:
            raise DomainError(f"fractional/variable power of non-positive base {a!r}")
        # exp(b log a), matching the jet path bit-for-bit
        return _exp(b * math.log(a))
    b = _eval_value(node.right, x)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if b == 0.0:
        raise DomainError("division by zero")
    return a / b


# ---------------------------------------------------------------------------
# composed defining-function ansatz
# ---------------------------------------------------------------------------

def compose_df(r: ScalarFieldExpr, phi: ScalarFieldExpr,
               K: float, eta: float) -> ScalarFieldExpr:
    """Build ``rho = -(-r * exp(-K*phi))^eta`` as an expression tree.

    ``K`` must be positive and ``eta`` in ``(0, 1]``; ``eta = 1`` is accepted
    but degenerate (the power becomes linear) and triggers a warning.
    Evaluation is only defined where ``r < 0`` — at ``r = 0`` the fractional
    power's jet is singular and evaluation raises
    :class:`~pconvex.errors.DomainError`.
    """
    K = float(K)
    eta = float(eta)
    if K <= 0.0:
        raise ValueError(f"K must be positive, got {K}")
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if eta == 1.0:
        warnings.warn("eta = 1 makes the composed exponent linear (degenerate case)",
                      stacklevel=2)
    inner = BinOp("*",
                  BinOp("-", Num(0.0), r.root),
                  Call("exp", BinOp("-", Num(0.0), BinOp("*", Num(K), phi.root))))
    root = BinOp("-", Num(0.0), BinOp("^", inner, Num(eta)))
    return ScalarFieldExpr(root=root, n=max(r.n, phi.n))
