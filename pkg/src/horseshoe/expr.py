"""Scalar expression language over the variables x and y.

Supports parsing, IEEE evaluation with explicit domain errors, exact symbolic
first/second derivatives, and adaptive numerical antiderivatives.  The grammar
is plain infix: ``^`` (right assoc, literal exponent only) binds tighter than
unary minus, then ``* /``, then ``+ -``.  Known functions: sin, cos, exp, log,
sqrt, abs.  The only named constant is pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, ExprSyntaxError, NoConvergence, UnknownIdentifier

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")
CONSTANTS = {"pi": math.pi}
VARIABLES = ("x", "y")


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    """Base node.  All nodes are immutable and hashable."""

    def __add__(self, other):
        return Add(self, _as_expr(other))

    def __sub__(self, other):
        return Sub(self, _as_expr(other))

    def __mul__(self, other):
        return Mul(self, _as_expr(other))


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: float  # literal only; general powers go through exp(b*log a)


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


def _as_expr(v):
    if isinstance(v, Expr):
        return v
    return Num(float(v))


# --- tokenizer -------------------------------------------------------------

_OPS = "+-*/^()"


def _tokenize(source):
    """Yield (kind, value, offset) triples; kind in num/name/op/end."""
    tokens = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            tokens.append(("op", ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            seen_dot = False
            while j < n and (source[j].isdigit() or (source[j] == "." and not seen_dot)):
                seen_dot = seen_dot or source[j] == "."
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                value = float(text)
            except ValueError:
                raise ExprSyntaxError(i, f"bad number literal {text!r}")
            tokens.append(("num", value, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(("name", source[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(i, f"unexpected character {ch!r}")
    tokens.append(("end", "", n))
    return tokens


# --- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            raise ExprSyntaxError(offset, f"expected {op!r}", expected=(op,))
        return self.next()

    def parse_expression(self):
        node = self.parse_term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.next()
                rhs = self.parse_term()
                node = Add(node, rhs) if value == "+" else Sub(node, rhs)
            else:
                return node

    def parse_term(self):
        node = self.parse_unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.next()
                rhs = self.parse_unary()
                node = Mul(node, rhs) if value == "*" else Div(node, rhs)
            else:
                return node

    def parse_unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.next()
            return Neg(self.parse_unary())
        if kind == "op" and value == "+":
            self.next()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        kind, value, offset = self.peek()
        if kind == "op" and value == "^":
            self.next()
            exponent = self.parse_exponent()
            return Pow(base, exponent)
        return base

    def parse_exponent(self):
        """Exponents must be literals (optionally signed) to keep d/dx total."""
        sign = 1.0
        kind, value, offset = self.peek()
        if kind == "op" and value in "+-":
            self.next()
            sign = -1.0 if value == "-" else 1.0
            kind, value, offset = self.peek()
        if kind == "num":
            self.next()
            kind2, value2, _ = self.peek()
            if kind2 == "op" and value2 == "^":   # literal chains bind rightward
                self.next()
                return sign * value ** self.parse_exponent()
            return sign * value
        if kind == "op" and value == "(":
            self.next()
            inner = self.parse_exponent()
            self.expect_op(")")
            return sign * inner
        raise ExprSyntaxError(
            offset, "exponent must be a numeric literal (use exp(b*log(a)) for general powers)",
            expected=("number",))

    def parse_atom(self):
        kind, value, offset = self.next()
        if kind == "num":
            return Num(value)
        if kind == "name":
            if value in VARIABLES:
                return Var(value)
            if value in CONSTANTS:
                return Const(value)
            if value in FUNCTIONS:
                self.expect_op("(")
                arg = self.parse_expression()
                self.expect_op(")")
                return Call(value, arg)
            raise UnknownIdentifier(value, offset)
        if kind == "op" and value == "(":
            node = self.parse_expression()
            self.expect_op(")")
            return node
        raise ExprSyntaxError(
            offset, f"expected a value, got {value!r}" if value else "unexpected end of input",
            expected=("number", "name", "("))


def parse(source):
    """Parse ``source`` into an Expr AST.

    Raises ExprSyntaxError with the byte offset of the first failure, or
    UnknownIdentifier for names outside {x, y, pi, sin, cos, exp, log, sqrt, abs}.
    """
    if not source or not source.strip():
        raise ExprSyntaxError(0, "empty expression")
    parser = _Parser(_tokenize(source))
    node = parser.parse_expression()
    kind, value, offset = parser.peek()
    if kind != "end":
        raise ExprSyntaxError(offset, f"unexpected trailing input {value!r}")
    return node


# --- evaluation ------------------------------------------------------------

def evaluate(e, x=0.0, y=0.0):
    """Evaluate ``e`` at (x, y).  Domain violations raise DomainError."""
    point = (x, y)
    return _eval(e, point)


def _eval(e, point):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        return point[0] if e.name == "x" else point[1]
    if isinstance(e, Neg):
        return -_eval(e.arg, point)
    if isinstance(e, Add):
        return _eval(e.left, point) + _eval(e.right, point)
    if isinstance(e, Sub):
        return _eval(e.left, point) - _eval(e.right, point)
    if isinstance(e, Mul):
        return _eval(e.left, point) * _eval(e.right, point)
    if isinstance(e, Div):
        den = _eval(e.right, point)
        if den == 0.0:
            raise DomainError(pretty(e), point)
        return _eval(e.left, point) / den
    if isinstance(e, Pow):
        base = _eval(e.base, point)
        if base == 0.0 and e.exponent < 0:
            raise DomainError(pretty(e), point)
        if base < 0.0 and e.exponent != int(e.exponent):
            raise DomainError(pretty(e), point)
        return base ** e.exponent
    if isinstance(e, Call):
        arg = _eval(e.arg, point)
        if e.func == "sin":
            return math.sin(arg)
        if e.func == "cos":
            return math.cos(arg)
        if e.func == "exp":
            return math.exp(arg)
        if e.func == "log":
            if arg <= 0.0:
                raise DomainError(pretty(e), point)
            return math.log(arg)
        if e.func == "sqrt":
            if arg < 0.0:
                raise DomainError(pretty(e), point)
            return math.sqrt(arg)
        if e.func == "abs":
            return abs(arg)
    raise TypeError(f"not an Expr node: {e!r}")


# --- symbolic differentiation ----------------------------------------------

def differentiate(e, var="x"):
    """Exact symbolic derivative of ``e`` with respect to ``var``.

    The result is simplified only by constant folding and identity elimination
    (0*a, 1*a, a+0), so the output re-parses and re-differentiates cleanly.
    """
    if var not in VARIABLES:
        raise ValueError(f"var must be one of {VARIABLES}")
    return simplify(_diff(e, var))


def _diff(e, var):
    if isinstance(e, (Num, Const)):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0 if e.name == var else 0.0)
    if isinstance(e, Neg):
        return Neg(_diff(e.arg, var))
    if isinstance(e, Add):
        return Add(_diff(e.left, var), _diff(e.right, var))
    if isinstance(e, Sub):
        return Sub(_diff(e.left, var), _diff(e.right, var))
    if isinstance(e, Mul):
        return Add(Mul(_diff(e.left, var), e.right), Mul(e.left, _diff(e.right, var)))
    if isinstance(e, Div):
        num = Sub(Mul(_diff(e.left, var), e.right), Mul(e.left, _diff(e.right, var)))
        return Div(num, Pow(e.right, 2.0))
    if isinstance(e, Pow):
        return Mul(Mul(Num(e.exponent), Pow(e.base, e.exponent - 1.0)), _diff(e.base, var))
    if isinstance(e, Call):
        inner = _diff(e.arg, var)
        if e.func == "sin":
            outer = Call("cos", e.arg)
        elif e.func == "cos":
            outer = Neg(Call("sin", e.arg))
        elif e.func == "exp":
            outer = Call("exp", e.arg)
        elif e.func == "log":
            outer = Div(Num(1.0), e.arg)
        elif e.func == "sqrt":
            outer = Div(Num(0.5), Call("sqrt", e.arg))
        elif e.func == "abs":
            outer = Div(e.arg, Call("abs", e.arg))
        else:  # pragma: no cover
            raise ValueError(e.func)
        return Mul(outer, inner)
    raise TypeError(f"not an Expr node: {e!r}")


def simplify(e):
    """Constant folding plus 0/1 identity elimination.  Structure-preserving otherwise."""
    if isinstance(e, (Num, Const, Var)):
        return e
    if isinstance(e, Neg):
        a = simplify(e.arg)
        if isinstance(a, Num):
            return Num(-a.value)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(e, Add):
        a, b = simplify(e.left), simplify(e.right)
        if isinstance(a, Num) and isinstance(b, Num):
            return Num(a.value + b.value)
        if isinstance(a, Num) and a.value == 0.0:
            return b
        if isinstance(b, Num) and b.value == 0.0:
            return a
        return Add(a, b)
    if isinstance(e, Sub):
        a, b = simplify(e.left), simplify(e.right)
        if isinstance(a, Num) and isinstance(b, Num):
            return Num(a.value - b.value)
        if isinstance(b, Num) and b.value == 0.0:
            return a
        if isinstance(a, Num) and a.value == 0.0:
            return simplify(Neg(b))
        return Sub(a, b)
    if isinstance(e, Mul):
        a, b = simplify(e.left), simplify(e.right)
        if isinstance(a, Num) and isinstance(b, Num):
            return Num(a.value * b.value)
        for u, v in ((a, b), (b, a)):
            if isinstance(u, Num):
                if u.value == 0.0:
                    return Num(0.0)
                if u.value == 1.0:
                    return v
        return Mul(a, b)
    if isinstance(e, Div):
        a, b = simplify(e.left), simplify(e.right)
        if isinstance(b, Num) and b.value != 0.0:
            if isinstance(a, Num):
                return Num(a.value / b.value)
            if b.value == 1.0:
                return a
        if isinstance(a, Num) and a.value == 0.0 and not isinstance(b, Num):
            return Num(0.0)
        return Div(a, b)
    if isinstance(e, Pow):
        base = simplify(e.base)
        if e.exponent == 0.0:
            return Num(1.0)
        if e.exponent == 1.0:
            return base
        if isinstance(base, Num) and (base.value >= 0 or e.exponent == int(e.exponent)):
            return Num(base.value ** e.exponent)
        return Pow(base, e.exponent)
    if isinstance(e, Call):
        return Call(e.func, simplify(e.arg))
    raise TypeError(f"not an Expr node: {e!r}")


# --- pretty printing --------------------------------------------------------

_PREC = {"add": 1, "mul": 2, "neg": 3, "pow": 4, "atom": 5}


def pretty(e):
    """Canonical string form.  parse(pretty(e)) is structurally equal to e."""
    return _fmt(e, 0)


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _fmt(e, parent_prec):
    if isinstance(e, Num):
        text = _fmt_num(e.value)
        prec = _PREC["neg"] if e.value < 0 else _PREC["atom"]
    elif isinstance(e, Const):
        text, prec = e.name, _PREC["atom"]
    elif isinstance(e, Var):
        text, prec = e.name, _PREC["atom"]
    elif isinstance(e, Neg):
        text, prec = "-" + _fmt(e.arg, _PREC["neg"]), _PREC["neg"]
    elif isinstance(e, Add):
        text = f"{_fmt(e.left, _PREC['add'])} + {_fmt(e.right, _PREC['add'] + 1)}"
        prec = _PREC["add"]
    elif isinstance(e, Sub):
        text = f"{_fmt(e.left, _PREC['add'])} - {_fmt(e.right, _PREC['add'] + 1)}"
        prec = _PREC["add"]
    elif isinstance(e, Mul):
        text = f"{_fmt(e.left, _PREC['mul'])}*{_fmt(e.right, _PREC['mul'] + 1)}"
        prec = _PREC["mul"]
    elif isinstance(e, Div):
        text = f"{_fmt(e.left, _PREC['mul'])}/{_fmt(e.right, _PREC['mul'] + 1)}"
        prec = _PREC["mul"]
    elif isinstance(e, Pow):
        text = f"{_fmt(e.base, _PREC['atom'])}^{_fmt_num(e.exponent)}"
        prec = _PREC["pow"]
    elif isinstance(e, Call):
        text, prec = f"{e.func}({_fmt(e.arg, 0)})", _PREC["atom"]
    else:
        raise TypeError(f"not an Expr node: {e!r}")
    if prec < parent_prec:
        return f"({text})"
    return text


# --- numeric helpers --------------------------------------------------------

def antiderivative_numeric(e, a, b, tol=1e-10):
    """Integrate ``e`` (as a function of x) from a to b within ``tol``.

    Adaptive Gauss-Kronrod quadrature; raises NoConvergence when the reported
    error estimate exceeds the request.
    """
    def f(x):
        return evaluate(e, x=x)

    value, abserr = quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)
    if abserr > max(tol, tol * abs(value)) * 10.0:
        raise NoConvergence(abserr)
    return value


_NUMPY_FUNCS = {"sin": "np.sin", "cos": "np.cos", "exp": "np.exp",
                "log": "np.log", "sqrt": "np.sqrt", "abs": "np.abs"}


def _numpy_src(e):
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Const):
        return repr(CONSTANTS[e.name])
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{_numpy_src(e.arg)})"
    if isinstance(e, Add):
        return f"({_numpy_src(e.left)} + {_numpy_src(e.right)})"
    if isinstance(e, Sub):
        return f"({_numpy_src(e.left)} - {_numpy_src(e.right)})"
    if isinstance(e, Mul):
        return f"({_numpy_src(e.left)} * {_numpy_src(e.right)})"
    if isinstance(e, Div):
        return f"({_numpy_src(e.left)} / {_numpy_src(e.right)})"
    if isinstance(e, Pow):
        return f"({_numpy_src(e.base)} ** {repr(e.exponent)})"
    if isinstance(e, Call):
        return f"{_NUMPY_FUNCS[e.func]}({_numpy_src(e.arg)})"
    raise TypeError(f"not an Expr node: {e!r}")


def compile_numpy(e):
    """Compile ``e`` to a vectorized f(x, y) -> ndarray using numpy ufuncs.

    Fast path for integrator right-hand sides; domain violations yield
    non-finite values rather than exceptions, callers guard on finiteness.
    """
    src = f"lambda x, y=0.0: ({_numpy_src(e)}) + 0.0*x"
    return eval(src, {"np": np})  # noqa: S307 - source is generated from the AST
