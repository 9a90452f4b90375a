"""Radial weight expressions: parser, canonical printer, evaluator, tail probe.

Grammar (``pow`` binds tightest, then unary minus, then ``* /``, then ``+ -``)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | primary
    primary := NUMBER | "r" | "(" expr ")"
             | "pow" "(" expr "," SIGNED_NUMBER ")"
             | "log" "(" expr ")" | "exp" "(" expr ")"

Numeric literals in the tree are always non-negative; a leading minus is a
:class:`Neg` node. The exponent of ``pow`` is a signed literal.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels as K
from .errors import (
    ArityError,
    UnknownIdentifierError,
    WeightDomainError,
    WeightSyntaxError,
)

# --------------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0.0):
            raise ValueError("literals must be finite and non-negative")


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "WeightExpr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "WeightExpr"
    right: "WeightExpr"


@dataclass(frozen=True)
class Pow:
    base: "WeightExpr"
    exponent: float


@dataclass(frozen=True)
class Call:
    fn: str  # "log" or "exp"
    arg: "WeightExpr"


WeightExpr = Union[Num, Var, Neg, BinOp, Pow, Call]

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY_PREC = 3
_ATOM_PREC = 4
_FUNCS = {"pow": 2, "log": 1, "exp": 1}


def _fmt_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _prec(e: WeightExpr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _UNARY_PREC
    return _ATOM_PREC


def to_string(e: WeightExpr) -> str:
    """Canonical printed form; ``parse_weight(to_string(e)) == e``."""
    if isinstance(e, Num):
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return "r"
    if isinstance(e, Pow):
        return f"pow({to_string(e.base)},{_fmt_number(e.exponent)})"
    if isinstance(e, Call):
        return f"{e.fn}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.operand)
        if _prec(e.operand) < _UNARY_PREC:
            inner = f"({inner})"
        return "-" + inner
    p = _PREC[e.op]
    left = to_string(e.left)
    right = to_string(e.right)
    if _prec(e.left) < p:
        left = f"({left})"
    # left-associative: an equal-precedence right operand needs parentheses
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left}{e.op}{right}"


# ------------------------------------------------------------------------ parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/(),]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                off = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise WeightSyntaxError(f"unexpected character {text[off]!r}", off)
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, text, off = self.take()
        if text != value or kind == "end":
            what = "end of input" if kind == "end" else repr(text)
            raise WeightSyntaxError(f"expected {value!r}, found {what}", off)

    def parse(self) -> WeightExpr:
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise WeightSyntaxError(f"unexpected token {text!r}", off)
        return e

    def expr(self) -> WeightExpr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> WeightExpr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> WeightExpr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.primary()

    def signed_number(self) -> float:
        sign = 1.0
        kind, text, off = self.peek()
        if kind == "op" and text in ("-", "+"):
            self.take()
            sign = -1.0 if text == "-" else 1.0
            kind, text, off = self.peek()
        if kind != "num":
            raise WeightSyntaxError("pow exponent must be a numeric literal", off)
        self.take()
        return sign * float(text)

    def primary(self) -> WeightExpr:
        kind, text, off = self.take()
        if kind == "num":
            value = float(text)
            if not math.isfinite(value):
                raise WeightSyntaxError("numeric literal overflows", off)
            return Num(value)
        if kind == "name":
            if text == "r":
                return Var()
            if text not in _FUNCS:
                raise UnknownIdentifierError(f"unknown identifier {text!r}", off)
            self.expect("(")
            if text == "pow":
                base = self.expr()
                if self.peek()[1] != ",":
                    raise ArityError("pow expects 2 arguments, got 1", self.peek()[2])
                self.take()
                exponent = self.signed_number()
                if self.peek()[1] == ",":
                    raise ArityError("pow expects 2 arguments", self.peek()[2])
                self.expect(")")
                return Pow(base, exponent)
            arg = self.expr()
            if self.peek()[1] == ",":
                raise ArityError(f"{text} expects 1 argument", self.peek()[2])
            self.expect(")")
            return Call(text, arg)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(text)
        raise WeightSyntaxError(f"unexpected {what}", off)


def parse_weight(text: str) -> WeightExpr:
    """Parse ``text`` into a :data:`WeightExpr`.

    Raises :class:`WeightSyntaxError` (with the byte offset of the problem),
    :class:`UnknownIdentifierError` or :class:`ArityError`.
    """
    if not text or not text.strip():
        raise WeightSyntaxError("empty expression", 0)
    return _Parser(text).parse()


# ---------------------------------------------------------------------- compiler


def compile_program(e: WeightExpr) -> tuple[np.ndarray, np.ndarray]:
    """Flatten ``e`` to postfix ``(ops, args)`` arrays for the kernels."""
    ops: list[int] = []
    args: list[float] = []

    def emit(node: WeightExpr) -> None:
        if isinstance(node, Num):
            ops.append(K.OP_CONST)
            args.append(node.value)
        elif isinstance(node, Var):
            ops.append(K.OP_VAR)
            args.append(0.0)
        elif isinstance(node, Neg):
            emit(node.operand)
            ops.append(K.OP_NEG)
            args.append(0.0)
        elif isinstance(node, Pow):
            emit(node.base)
            ops.append(K.OP_POW)
            args.append(node.exponent)
        elif isinstance(node, Call):
            emit(node.arg)
            ops.append(K.OP_LOG if node.fn == "log" else K.OP_EXP)
            args.append(0.0)
        else:
            emit(node.left)
            emit(node.right)
            ops.append({"+": K.OP_ADD, "-": K.OP_SUB, "*": K.OP_MUL, "/": K.OP_DIV}[node.op])
            args.append(0.0)

    emit(e)
    return np.asarray(ops, dtype=np.int32), np.asarray(args, dtype=np.float64)


_STATUS_MESSAGES = {
    K.ST_LOG_DOMAIN: "log of a non-positive value",
    K.ST_ZERO_DIV: "division by zero",
    K.ST_POW_DOMAIN: "negative base with non-integer exponent",
    K.ST_NONFINITE: "non-finite value",
}


# ---------------------------------------------------------------------- WeightFn


@dataclass(frozen=True)
class DecayInfo:
    """Tail behaviour f(s) ~ C s^exponent (log s)^log_power as s -> infinity.

    ``exponent`` is ``None`` when the probe could not identify a power-like
    tail. ``certified`` is true only for declared exponents of pure powers.
    """

    exponent: float | None
    source: str  # "declared" | "probed" | "unknown"
    log_correction: bool = False
    log_power: float = 0.0
    residual: float = 0.0

    @property
    def known(self) -> bool:
        return self.exponent is not None

    @property
    def certified(self) -> bool:
        return self.source == "declared" and not self.log_correction


@dataclass(frozen=True)
class WeightFn:
    """A radial weight with its domain and optional declared tail exponent."""

    expr: WeightExpr
    r_min: float = 0.0
    r_max: float = math.inf
    decay: float | None = None
    _program: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (self.r_min >= 0.0 and self.r_max > self.r_min):
            raise ValueError(f"bad domain ({self.r_min}, {self.r_max})")
        ops, args = compile_program(self.expr)
        object.__setattr__(self, "_program", (ops, args))
        if self.decay is not None:
            _check_declared_decay(self)

    @classmethod
    def from_string(cls, text: str, **kwargs) -> "WeightFn":
        return cls(parse_weight(text), **kwargs)

    @property
    def text(self) -> str:
        return to_string(self.expr)

    def _check_domain(self, r: np.ndarray) -> None:
        bad = ~((r > 0.0) & (r >= self.r_min) & (r <= self.r_max))
        if bad.any():
            raise WeightDomainError(
                f"{self.text}: radius outside domain ({self.r_min}, {self.r_max})",
                float(r[bad][0]),
            )

    def __call__(self, r):
        """Evaluate at a scalar radius or elementwise over an array."""
        if np.ndim(r) == 0:
            r = float(r)
            if not (r > 0.0 and self.r_min <= r <= self.r_max):
                raise WeightDomainError(
                    f"{self.text}: radius outside domain ({self.r_min}, {self.r_max})", r)
            value, status = K.eval_scalar(*self._program, r)
            if status:
                raise WeightDomainError(f"{self.text}: {_STATUS_MESSAGES[status]}", r)
            return value
        arr = np.asarray(r, dtype=np.float64)
        self._check_domain(arr)
        out, status, idx = K.eval_program(*self._program, arr.ravel())
        if status:
            raise WeightDomainError(
                f"{self.text}: {_STATUS_MESSAGES[status]}", float(arr.ravel()[idx]))
        return out.reshape(arr.shape)

    def require_positive(self, r) -> None:
        """Abort unless the weight is strictly positive at every radius in ``r``."""
        vals = np.atleast_1d(self(np.atleast_1d(r)))
        bad = ~(vals > 0.0)
        if bad.any():
            raise WeightDomainError(
                f"{self.text}: weight must be positive", float(np.atleast_1d(r)[bad][0]))


def eval_weight(f: WeightFn, r: float) -> float:
    return f(r)


# ------------------------------------------------------------------- tail probes


def _probe_base(r_min: float) -> float:
    # r_min = 0 is allowed (weights defined down to the origin); probe from 1
    return max(r_min, 1.0)


def _check_declared_decay(f: WeightFn) -> None:
    base = _probe_base(f.r_min)
    s = base * np.array([1e3, 1e4, 1e5])
    if s[-1] > f.r_max:
        return
    vals = np.abs(f(s))
    if not (vals > 0.0).all():
        raise ValueError(f"{f.text}: declared decay but weight vanishes on the probe grid")
    slope = np.polyfit(np.log(s), np.log(vals), 1)[0]
    if abs(slope - f.decay) > 0.1:
        raise ValueError(
            f"{f.text}: declared decay {f.decay} disagrees with probed slope {slope:.4g}")


PURE_POWER_RESIDUAL = 1e-8
LOG_FIT_RESIDUAL = 1e-6


def probe_decay(func, base: float = 1.0, lo: float = 1e2, hi: float = 1e6,
                points: int = 41) -> DecayInfo:
    """Identify a power-like tail of ``func`` (vectorized callable) on [lo, hi]*base.

    Fits ``log f = a log s + c`` and, failing that, ``log f = a log s +
    b log log s + c``. Anything else is reported as unknown.
    """
    s = base * np.geomspace(lo, hi, points)
    try:
        with np.errstate(all="ignore"):
            vals = np.asarray(func(s), dtype=float)
    except (WeightDomainError, FloatingPointError, ValueError, OverflowError):
        return DecayInfo(None, "unknown")
    if vals.shape != s.shape or not np.all(np.isfinite(vals)) or not np.all(vals > 0.0):
        return DecayInfo(None, "unknown")
    x = np.log(s)
    y = np.log(vals)
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.max(np.abs(design @ coef - y)))
    if resid <= PURE_POWER_RESIDUAL * max(1.0, float(np.max(np.abs(y)))):
        return DecayInfo(float(coef[0]), "probed", residual=resid)
    design = np.column_stack([x, np.log(x), np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid2 = float(np.max(np.abs(design @ coef - y)))
    if resid2 <= LOG_FIT_RESIDUAL * max(1.0, float(np.max(np.abs(y)))):
        return DecayInfo(float(coef[0]), "probed", log_correction=True,
                         log_power=float(coef[1]), residual=resid2)
    # asymptotically power-like (e.g. r^2 + 1): local slopes settle at the far end
    slopes = np.diff(y) / np.diff(x)
    tail = slopes[-(points // 3):]
    spread = float(np.ptp(tail))
    if spread <= 1e-6 * max(1.0, abs(float(tail[-1]))):
        return DecayInfo(float(tail[-1]), "probed", residual=spread)
    return DecayInfo(None, "unknown", residual=resid)


def decay_exponent(f: WeightFn) -> DecayInfo:
    """Tail exponent of ``f``: the declared one if present, else a probe."""
    if f.decay is not None:
        return DecayInfo(float(f.decay), "declared")
    if f.r_max < math.inf:
        return DecayInfo(None, "unknown")
    return probe_decay(f, base=_probe_base(f.r_min))
