"""Radial functions on the sphere: expression trees and built-in families.

A radial function assigns a positive radius to each direction, through the
angle variables ``theta`` (on the circle) or ``phi, theta`` (on the 2-sphere,
with phi the angle from the +z axis and theta the azimuth). Functions are
either small expression trees parsed from text, or closed-form families
(round, ellipse, trigonometric polynomial). Every function evaluates values
and first derivatives; derivatives of expressions are computed by forward
mode on the tree. Evaluation accepts scalars or numpy arrays.

Expression grammar (whitespace is free; ``**`` is accepted for ``^``)::

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = [ "+" | "-" ] power ;
    power    = atom [ ("^" | "**") integer ] ;
    atom     = number | variable | function "(" expr ")" | "(" expr ")" ;
    function = "sin" | "cos" | "abs" ;
    variable = "theta" | "phi" ;
    integer  = [ "-" ] digit { digit } ;

The derivative of ``abs`` at 0 is taken to be 0, which keeps derivatives of
kinks like ``abs(cos(phi))^7`` continuous wherever the smooth cofactor
vanishes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ParseError

FUNCTIONS = ("sin", "cos", "abs")
VARIABLES = ("theta", "phi")

Num = Union[float, np.ndarray]


# --- expression tree ---------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    def value(self, env: dict) -> Num:
        raise NotImplementedError

    def value_grad(self, env: dict) -> tuple[Num, dict]:
        """Value plus partial derivatives with respect to every variable in env."""
        raise NotImplementedError

    def variables(self) -> frozenset:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expr):
    v: float

    def value(self, env):
        return self.v

    def value_grad(self, env):
        return self.v, {name: 0.0 for name in env}

    def variables(self):
        return frozenset()


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def value(self, env):
        return env[self.name]

    def value_grad(self, env):
        g = {name: (1.0 if name == self.name else 0.0) for name in env}
        return env[self.name], g

    def variables(self):
        return frozenset({self.name})


@dataclass(frozen=True)
class Neg(Expr):
    a: Expr

    def value(self, env):
        return -self.a.value(env)

    def value_grad(self, env):
        v, g = self.a.value_grad(env)
        return -v, {n: -d for n, d in g.items()}

    def variables(self):
        return self.a.variables()


@dataclass(frozen=True)
class _Binary(Expr):
    a: Expr
    b: Expr

    def variables(self):
        return self.a.variables() | self.b.variables()


class Add(_Binary):
    def value(self, env):
        return self.a.value(env) + self.b.value(env)

    def value_grad(self, env):
        va, ga = self.a.value_grad(env)
        vb, gb = self.b.value_grad(env)
        return va + vb, {n: ga[n] + gb[n] for n in env}


class Sub(_Binary):
    def value(self, env):
        return self.a.value(env) - self.b.value(env)

    def value_grad(self, env):
        va, ga = self.a.value_grad(env)
        vb, gb = self.b.value_grad(env)
        return va - vb, {n: ga[n] - gb[n] for n in env}


class Mul(_Binary):
    def value(self, env):
        return self.a.value(env) * self.b.value(env)

    def value_grad(self, env):
        va, ga = self.a.value_grad(env)
        vb, gb = self.b.value_grad(env)
        return va * vb, {n: ga[n] * vb + va * gb[n] for n in env}


class Div(_Binary):
    def value(self, env):
        return self.a.value(env) / self.b.value(env)

    def value_grad(self, env):
        va, ga = self.a.value_grad(env)
        vb, gb = self.b.value_grad(env)
        return va / vb, {n: (ga[n] * vb - va * gb[n]) / (vb * vb) for n in env}


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def value(self, env):
        return self.base.value(env) ** self.exponent

    def value_grad(self, env):
        v, g = self.base.value_grad(env)
        n = self.exponent
        if n == 0:
            return np.ones_like(v * 1.0), {name: 0.0 * g[name] for name in env}
        fac = n * v ** (n - 1)
        return v**n, {name: fac * g[name] for name in env}

    def variables(self):
        return self.base.variables()


@dataclass(frozen=True)
class Sin(Expr):
    a: Expr

    def value(self, env):
        return np.sin(self.a.value(env))

    def value_grad(self, env):
        v, g = self.a.value_grad(env)
        c = np.cos(v)
        return np.sin(v), {n: c * g[n] for n in env}

    def variables(self):
        return self.a.variables()


@dataclass(frozen=True)
class Cos(Expr):
    a: Expr

    def value(self, env):
        return np.cos(self.a.value(env))

    def value_grad(self, env):
        v, g = self.a.value_grad(env)
        s = -np.sin(v)
        return np.cos(v), {n: s * g[n] for n in env}

    def variables(self):
        return self.a.variables()


@dataclass(frozen=True)
class Abs(Expr):
    a: Expr

    def value(self, env):
        return np.abs(self.a.value(env))

    def value_grad(self, env):
        v, g = self.a.value_grad(env)
        s = np.sign(v)  # sign(0) = 0: derivative at the kink is taken as 0
        return np.abs(v), {n: s * g[n] for n in env}

    def variables(self):
        return self.a.variables()


_FUNC_NODE = {"sin": Sin, "cos": Cos, "abs": Abs}


# --- parser ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(src: str):
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None or m.end() == pos:
            stripped = src[pos:].lstrip()
            if not stripped:
                break
            raise ParseError(
                f"unexpected character {stripped[0]!r}",
                pos + len(src[pos:]) - len(stripped),
            )
        if m.lastgroup == "number":
            tokens.append(("number", m.group("number"), m.start("number")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.next()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val or 'end of input'!r}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {val!r}", pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                rhs = self.term()
                e = Add(e, rhs) if val == "+" else Sub(e, rhs)
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                rhs = self.unary()
                e = Mul(e, rhs) if val == "*" else Div(e, rhs)
            else:
                return e

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.next()
            inner = self.unary()
            return inner if val == "+" else Neg(inner)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val in ("^", "**"):
            self.next()
            base = Pow(base, self.integer())
        return base

    def integer(self) -> int:
        sign = 1
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.next()
            sign = -1
            kind, val, pos = self.peek()
        if kind != "number" or not re.fullmatch(r"\d+", val):
            raise ParseError(f"exponent must be an integer, found {val or 'end of input'!r}", pos)
        self.next()
        return sign * int(val)

    def atom(self) -> Expr:
        kind, val, pos = self.next()
        if kind == "number":
            return Const(float(val))
        if kind == "ident":
            if val in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return _FUNC_NODE[val](arg)
            if val in VARIABLES:
                return Var(val)
            raise ParseError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ParseError(f"expected a value, found {val or 'end of input'!r}", pos)


def parse_radial(src: str) -> Expr:
    """Parse expression source into a tree; raises ParseError with a position."""
    return _Parser(src).parse()


# --- printer -----------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 2, Pow: 3}


def _prec(e: Expr) -> int:
    return _PREC.get(type(e), 4)


def to_source(e: Expr) -> str:
    """Print a tree back to parseable source. parse(to_source(e)) evaluates like e."""
    if isinstance(e, Const):
        return repr(e.v)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = to_source(e.a)
        return f"-({inner})" if _prec(e.a) <= 1 else f"-{inner}"
    if isinstance(e, (Add, Sub, Mul, Div)):
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
        mine = _prec(e)
        left = to_source(e.a)
        if _prec(e.a) < mine:
            left = f"({left})"
        right = to_source(e.b)
        # subtraction and division do not associate on the right
        if _prec(e.b) < mine or (isinstance(e, (Sub, Div)) and _prec(e.b) == mine):
            right = f"({right})"
        return f"{left} {op} {right}"
    if isinstance(e, Pow):
        base = to_source(e.base)
        if _prec(e.base) < 4:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, (Sin, Cos, Abs)):
        name = type(e).__name__.lower()
        return f"{name}({to_source(e.a)})"
    raise TypeError(f"unknown node {e!r}")


# --- radial function families -------------------------------------------------


class RadialFunction:
    """Positive radius as a function of sphere angles, with first derivatives.

    ``angles`` is (theta,) for the circle and (phi, theta) for the 2-sphere.
    Implementations are immutable and reentrant.
    """

    nvars: int

    def value(self, angles) -> Num:
        raise NotImplementedError

    def value_grad(self, angles) -> tuple[Num, tuple]:
        raise NotImplementedError

    def depends_on_theta(self) -> bool:
        return True

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ExprRadial(RadialFunction):
    expr: Expr
    nvars: int

    def __post_init__(self):
        allowed = {"theta"} if self.nvars == 1 else {"phi", "theta"}
        extra = set(self.expr.variables()) - allowed
        if extra:
            raise ValueError(f"expression uses {sorted(extra)}, allowed: {sorted(allowed)}")

    def _env(self, angles):
        if self.nvars == 1:
            return {"theta": angles[0]}
        return {"phi": angles[0], "theta": angles[1]}

    def value(self, angles):
        return self.expr.value(self._env(angles))

    def value_grad(self, angles):
        env = self._env(angles)
        v, g = self.expr.value_grad(env)
        if self.nvars == 1:
            return v, (g["theta"],)
        return v, (g["phi"], g["theta"])

    def depends_on_theta(self):
        return "theta" in self.expr.variables()

    def describe(self):
        return {"kind": "expr", "expr": to_source(self.expr)}


@dataclass(frozen=True)
class RoundRadial(RadialFunction):
    nvars: int = 1

    def value(self, angles):
        return np.ones_like(np.asarray(angles[0], dtype=float) * 1.0)

    def value_grad(self, angles):
        z = np.zeros_like(np.asarray(angles[0], dtype=float))
        return z + 1.0, tuple(z for _ in range(self.nvars))

    def depends_on_theta(self):
        return False

    def describe(self):
        return {"kind": "round"}


@dataclass(frozen=True)
class EllipseRadial(RadialFunction):
    """Plane ellipse with semi-axes a (x) and b (y), as a radial graph."""

    a: float
    b: float
    nvars: int = 1

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("semi-axes must be positive")

    def value(self, angles):
        th = angles[0]
        return 1.0 / np.sqrt(np.cos(th) ** 2 / self.a**2 + np.sin(th) ** 2 / self.b**2)

    def value_grad(self, angles):
        th = angles[0]
        r = self.value(angles)
        dr = -0.5 * r**3 * np.sin(2 * th) * (1.0 / self.b**2 - 1.0 / self.a**2)
        return r, (dr,)

    def describe(self):
        return {"kind": "ellipse", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class TrigPolyRadial(RadialFunction):
    """r(theta) = a0 + sum_m cos_coeffs[m-1] cos(m theta) + sin_coeffs[m-1] sin(m theta)."""

    a0: float
    cos_coeffs: tuple[float, ...] = ()
    sin_coeffs: tuple[float, ...] = ()
    nvars: int = 1

    def value(self, angles):
        th = np.asarray(angles[0], dtype=float)
        r = self.a0 * np.ones_like(th)
        for m, c in enumerate(self.cos_coeffs, start=1):
            r = r + c * np.cos(m * th)
        for m, s in enumerate(self.sin_coeffs, start=1):
            r = r + s * np.sin(m * th)
        return r

    def value_grad(self, angles):
        th = np.asarray(angles[0], dtype=float)
        r = self.value(angles)
        dr = np.zeros_like(th)
        for m, c in enumerate(self.cos_coeffs, start=1):
            dr = dr - c * m * np.sin(m * th)
        for m, s in enumerate(self.sin_coeffs, start=1):
            dr = dr + s * m * np.cos(m * th)
        return r, (dr,)

    def describe(self):
        return {
            "kind": "trig-poly",
            "a0": self.a0,
            "cos": list(self.cos_coeffs),
            "sin": list(self.sin_coeffs),
        }


@dataclass(frozen=True)
class BlendRadial(RadialFunction):
    """Straight-line blend (1-t) + t*r(u) from the round sphere to a target."""

    base: RadialFunction
    t: float

    @property
    def nvars(self) -> int:  # type: ignore[override]
        return self.base.nvars

    def value(self, angles):
        return (1.0 - self.t) + self.t * self.base.value(angles)

    def value_grad(self, angles):
        v, g = self.base.value_grad(angles)
        return (1.0 - self.t) + self.t * v, tuple(self.t * gi for gi in g)

    def depends_on_theta(self):
        return self.base.depends_on_theta()

    def describe(self):
        return {"kind": "blend", "t": self.t, "base": self.base.describe()}
