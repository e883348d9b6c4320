"""Small arithmetic expression language with exact symbolic differentiation.

Expressions are written over variables ``x1 .. xn`` with the operators
``+ - * / ^``, the functions ``sin cos exp log sqrt tanh``, and the constant
``pi``.  Precedence is ``^`` above unary minus above ``* /`` above ``+ -``;
all binary operators associate to the left.  Parsed expressions are immutable
and evaluation is pure, so they may be shared freely across threads.

Evaluation never returns silent NaN/inf: arguments outside a function's
domain raise :class:`EvalDomainError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Neg",
    "Func",
    "BinOp",
    "ExprError",
    "SyntaxError_",
    "UnknownIdentifierError",
    "EvalDomainError",
    "parse",
    "differentiate",
]


class ExprError(Exception):
    pass


class SyntaxError_(ExprError):
    """Malformed source; carries the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifierError(SyntaxError_):
    pass


class EvalDomainError(ExprError):
    """A function was evaluated outside its real domain."""


_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")


@dataclass(frozen=True)
class Expression:
    def eval(self, coords):
        """Evaluate at points given as a sequence of coordinate arrays."""
        raise NotImplementedError

    def eval_at(self, points):
        """Evaluate at ``points`` of shape ``(..., n)``."""
        points = np.asarray(points, dtype=float)
        coords = tuple(points[..., i] for i in range(points.shape[-1]))
        return self.eval(coords)

    def diff(self, var_index):
        raise NotImplementedError

    def fold(self):
        """Constant-fold; the only simplification performed."""
        return self

    def to_source(self):
        raise NotImplementedError

    def max_var(self):
        return -1

    def __str__(self):
        return self.to_source()


@dataclass(frozen=True)
class Const(Expression):
    value: float

    def eval(self, coords):
        return np.asarray(self.value, dtype=float) if not coords else np.full_like(
            np.asarray(coords[0], dtype=float), self.value
        )

    def diff(self, var_index):
        return Const(0.0)

    def to_source(self):
        if self.value == int(self.value) and abs(self.value) < 1e16:
            return str(int(self.value))
        return repr(self.value)


@dataclass(frozen=True)
class Var(Expression):
    index: int  # zero-based; prints as x{index+1}

    def eval(self, coords):
        if self.index >= len(coords):
            raise EvalDomainError(
                f"variable x{self.index + 1} evaluated with only "
                f"{len(coords)} coordinates"
            )
        return np.asarray(coords[self.index], dtype=float)

    def diff(self, var_index):
        return Const(1.0 if var_index == self.index else 0.0)

    def to_source(self):
        return f"x{self.index + 1}"

    def max_var(self):
        return self.index


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression

    def eval(self, coords):
        return -self.arg.eval(coords)

    def diff(self, var_index):
        return Neg(self.arg.diff(var_index))

    def fold(self):
        a = self.arg.fold()
        if isinstance(a, Const):
            return Const(-a.value)
        return Neg(a)

    def to_source(self):
        return f"-{_paren(self.arg, 25)}"

    def max_var(self):
        return self.arg.max_var()


@dataclass(frozen=True)
class Func(Expression):
    name: str
    arg: Expression

    def eval(self, coords):
        a = self.arg.eval(coords)
        if self.name == "sqrt":
            if np.any(a < 0):
                raise EvalDomainError("sqrt of a negative number")
            return np.sqrt(a)
        if self.name == "log":
            if np.any(a <= 0):
                raise EvalDomainError("log of a non-positive number")
            return np.log(a)
        if self.name == "exp":
            with np.errstate(over="ignore"):
                out = np.exp(a)
            if np.any(np.isinf(out)):
                raise EvalDomainError("exp overflow")
            return out
        if self.name == "sin":
            return np.sin(a)
        if self.name == "cos":
            return np.cos(a)
        if self.name == "tanh":
            return np.tanh(a)
        raise AssertionError(self.name)

    def diff(self, var_index):
        da = self.arg.diff(var_index)
        a = self.arg
        if self.name == "sin":
            inner = Func("cos", a)
        elif self.name == "cos":
            inner = Neg(Func("sin", a))
        elif self.name == "exp":
            inner = Func("exp", a)
        elif self.name == "log":
            inner = BinOp("/", Const(1.0), a)
        elif self.name == "sqrt":
            inner = BinOp("/", Const(0.5), Func("sqrt", a))
        elif self.name == "tanh":
            inner = BinOp("-", Const(1.0), BinOp("^", Func("tanh", a), Const(2.0)))
        else:
            raise AssertionError(self.name)
        return BinOp("*", inner, da).fold()

    def fold(self):
        a = self.arg.fold()
        if isinstance(a, Const):
            try:
                return Const(float(Func(self.name, a).eval(())))
            except EvalDomainError:
                pass
        return Func(self.name, a)

    def to_source(self):
        return f"{self.name}({self.arg.to_source()})"

    def max_var(self):
        return self.arg.max_var()


# binding strength used for printing parentheses
_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}


def _paren(e, parent_prec):
    s = e.to_source()
    if isinstance(e, BinOp) and _PREC[e.op] < parent_prec:
        return f"({s})"
    if isinstance(e, Neg) and parent_prec > 15:
        return f"({s})"
    return s


@dataclass(frozen=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression

    def eval(self, coords):
        a = self.left.eval(coords)
        b = self.right.eval(coords)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            if np.any(b == 0):
                raise EvalDomainError("division by zero")
            return a / b
        if self.op == "^":
            return _safe_pow(a, b)
        raise AssertionError(self.op)

    def diff(self, var_index):
        a, b = self.left, self.right
        da = a.diff(var_index)
        db = b.diff(var_index)
        if self.op in "+-":
            return BinOp(self.op, da, db).fold()
        if self.op == "*":
            return BinOp("+", BinOp("*", da, b), BinOp("*", a, db)).fold()
        if self.op == "/":
            num = BinOp("-", BinOp("*", da, b), BinOp("*", a, db))
            return BinOp("/", num, BinOp("^", b, Const(2.0))).fold()
        if self.op == "^":
            if isinstance(b, Const):
                # d(a^c) = c * a^(c-1) * a'
                pw = BinOp("^", a, Const(b.value - 1.0))
                return BinOp("*", BinOp("*", Const(b.value), pw), da).fold()
            # general: a^b * (b' log a + b a'/a)
            term1 = BinOp("*", db, Func("log", a))
            term2 = BinOp("/", BinOp("*", b, da), a)
            return BinOp("*", self, BinOp("+", term1, term2)).fold()
        raise AssertionError(self.op)

    def fold(self):
        a = self.left.fold()
        b = self.right.fold()
        if isinstance(a, Const) and isinstance(b, Const):
            try:
                return Const(float(BinOp(self.op, a, b).eval(())))
            except EvalDomainError:
                return BinOp(self.op, a, b)
        if self.op == "+":
            if isinstance(a, Const) and a.value == 0:
                return b
            if isinstance(b, Const) and b.value == 0:
                return a
        elif self.op == "-":
            if isinstance(b, Const) and b.value == 0:
                return a
        elif self.op == "*":
            if (isinstance(a, Const) and a.value == 0) or (
                isinstance(b, Const) and b.value == 0
            ):
                return Const(0.0)
            if isinstance(a, Const) and a.value == 1:
                return b
            if isinstance(b, Const) and b.value == 1:
                return a
        elif self.op == "/":
            if isinstance(a, Const) and a.value == 0:
                return Const(0.0)
            if isinstance(b, Const) and b.value == 1:
                return a
        elif self.op == "^":
            if isinstance(b, Const):
                if b.value == 1:
                    return a
                if b.value == 0:
                    return Const(1.0)
        return BinOp(self.op, a, b)

    def to_source(self):
        p = _PREC[self.op]
        left = _paren(self.left, p)
        # left-associative: right operand needs parens at equal precedence
        right = _paren(self.right, p + 1)
        return f"{left} {self.op} {right}"

    def max_var(self):
        return max(self.left.max_var(), self.right.max_var())


def _safe_pow(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    frac = b != np.floor(b)
    if np.any((a < 0) & frac):
        raise EvalDomainError("negative base with non-integer exponent")
    if np.any((a == 0) & (b < 0)):
        raise EvalDomainError("zero base with negative exponent")
    with np.errstate(over="ignore"):
        out = np.power(a, b)
    if np.any(np.isinf(out)):
        raise EvalDomainError("power overflow")
    return out


# --------------------------------------------------------------------------
# parsing


class _Tokenizer:
    def __init__(self, source):
        self.src = source
        self.pos = 0
        self.tokens = []
        self._run()

    def _run(self):
        src = self.src
        i = 0
        while i < len(src):
            c = src[i]
            if c.isspace():
                i += 1
                continue
            if c in "+-*/^()":
                self.tokens.append((c, c, i))
                i += 1
                continue
            if c.isdigit() or c == ".":
                j = i
                while j < len(src) and (src[j].isdigit() or src[j] == "."):
                    j += 1
                if j < len(src) and src[j] in "eE":
                    k = j + 1
                    if k < len(src) and src[k] in "+-":
                        k += 1
                    if k < len(src) and src[k].isdigit():
                        j = k
                        while j < len(src) and src[j].isdigit():
                            j += 1
                try:
                    value = float(src[i:j])
                except ValueError:
                    raise SyntaxError_(f"bad number {src[i:j]!r}", i)
                self.tokens.append(("num", value, i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                    j += 1
                self.tokens.append(("ident", src[i:j], i))
                i = j
                continue
            raise SyntaxError_(f"unexpected character {c!r}", i)
        self.tokens.append(("end", None, len(src)))


class _Parser:
    def __init__(self, source):
        self.src = source
        self.tokens = _Tokenizer(source).tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise SyntaxError_(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise SyntaxError_(f"unexpected trailing input {tok[1]!r}", tok[2])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] in "+-":
            op = self.next()[0]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] in "*/":
            op = self.next()[0]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.peek()[0] == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self):
        e = self.atom()
        while self.peek()[0] == "^":
            self.next()
            e = BinOp("^", e, self.exponent())
        return e

    def exponent(self):
        # a negative exponent needs no parentheses: x^-2
        if self.peek()[0] == "-":
            self.next()
            return Neg(self.exponent())
        return self.atom()

    def atom(self):
        kind, value, offset = self.next()
        if kind == "num":
            return Const(value)
        if kind == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "ident":
            if value in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(value, arg)
            if value == "pi":
                return Const(math.pi)
            if value.startswith("x") and value[1:].isdigit() and int(value[1:]) >= 1:
                return Var(int(value[1:]) - 1)
            raise UnknownIdentifierError(f"unknown identifier {value!r}", offset)
        raise SyntaxError_(f"unexpected token {value!r}", offset)


def parse(source):
    """Parse ``source`` into an :class:`Expression`."""
    return _Parser(source).parse()


def differentiate(e, var_index):
    """Exact symbolic partial derivative with respect to ``x{var_index+1}``."""
    if var_index < 0:
        raise ValueError("var_index must be nonnegative")
    return e.diff(var_index).fold()
