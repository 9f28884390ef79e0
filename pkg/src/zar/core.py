"""Values, program states, expressions, and the guarded-command AST.

Values are plain Python objects: bool, int, or Fraction. The three kinds
never coerce into each other implicitly; in particular Int(1), Rat(1/1)
and Bool(true) are pairwise distinct (Python's own == would conflate
them, so cross-kind comparisons go through values_equal / value_key).

A state is a plain dict from identifier to value; lookup of an unbound
identifier yields Int(0), and updates copy. Expression nodes compile
themselves once into a closure, so repeated evaluation inside loop
bodies does not re-walk the AST.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

from .errors import DivisionByZero, EvalTypeError

Value = Union[bool, int, Fraction]
State = dict

_KIND = {bool: "b", int: "i", Fraction: "q"}


def value_kind(v: Value) -> str:
    return _KIND[type(v)]


def values_equal(a: Value, b: Value) -> bool:
    # type identity first: True == 1 and Fraction(1) == 1 in Python
    return type(a) is type(b) and a == b


def value_key(v: Value):
    """Hashable key that keeps the three value kinds apart."""
    return (_KIND[type(v)], v)


def render_value(v: Value) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return str(v)


def lookup(sigma: State, x: str) -> Value:
    return sigma.get(x, 0)


def state_update(sigma: State, x: str, v: Value) -> State:
    new = dict(sigma)
    new[x] = v
    return new


def state_key(sigma: State):
    """Hashable, kind-aware key; entries equal to the Int(0) default are dropped."""
    return frozenset(
        (x, _KIND[type(v)], v)
        for x, v in sigma.items()
        if type(v) is not int or v != 0
    )


def render_state(sigma: State) -> str:
    items = ", ".join(f"{x}={render_value(v)}" for x, v in sorted(sigma.items()))
    return "{" + items + "}"


# ------------------------------------------------------------------ arithmetic

def _no_bool(a, b=None):
    if isinstance(a, bool) or isinstance(b, bool):
        raise EvalTypeError("arithmetic on a boolean")


def _add(a, b):
    _no_bool(a, b)
    return a + b


def _sub(a, b):
    _no_bool(a, b)
    return a - b


def _mul(a, b):
    _no_bool(a, b)
    return a * b


def _div(a, b):
    _no_bool(a, b)
    if b == 0:
        raise DivisionByZero("division by zero")
    return Fraction(a) / Fraction(b)


def _mod(a, b):
    if type(a) is not int or type(b) is not int:
        raise EvalTypeError("mod needs two integers")
    if b == 0:
        raise DivisionByZero("mod by zero")
    return a % b


def _floor(a):
    if type(a) is int:
        return a
    if type(a) is Fraction:
        return a.numerator // a.denominator
    raise EvalTypeError("floor of a non-number")


def _abs(a):
    _no_bool(a)
    return abs(a)


def _neg(a):
    _no_bool(a)
    return -a


def _lt(a, b):
    _no_bool(a, b)
    return a < b


def _le(a, b):
    _no_bool(a, b)
    return a <= b


def _bool(a):
    if a is not True and a is not False:
        raise EvalTypeError("expected a boolean")
    return a


def is_prime(n) -> bool:
    if type(n) is not int:
        raise EvalTypeError("is_prime of a non-integer")
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def is_even(n) -> bool:
    if type(n) is not int:
        raise EvalTypeError("is_even of a non-integer")
    return n % 2 == 0


# ----------------------------------------------------------------- expressions

@dataclass(eq=True)
class Expr:
    pass


@dataclass(eq=False, repr=True)
class Const(Expr):
    value: Value

    def __eq__(self, other):
        # field == would conflate Const(1), Const(true), Const(1/1)
        return type(other) is Const and values_equal(self.value, other.value)


@dataclass(eq=True)
class Var(Expr):
    name: str


@dataclass(eq=True)
class Add(Expr):
    a: Expr
    b: Expr


@dataclass(eq=True)
class Sub(Expr):
    a: Expr
    b: Expr


@dataclass(eq=True)
class Mul(Expr):
    a: Expr
    b: Expr


@dataclass(eq=True)
class Div(Expr):
    a: Expr
    b: Expr


@dataclass(eq=True)
class Mod(Expr):
    a: Expr
    b: Expr


@dataclass(eq=True)
class Neg(Expr):
    a: Expr


@dataclass(eq=True)
class Floor(Expr):
    a: Expr


@dataclass(eq=True)
class Abs(Expr):
    a: Expr


@dataclass(eq=True)
class Eq(Expr):
    a: Expr
    b: Expr


@dataclass(eq=True)
class Lt(Expr):
    a: Expr
    b: Expr


@dataclass(eq=True)
class Le(Expr):
    a: Expr
    b: Expr


@dataclass(eq=True)
class And(Expr):
    a: Expr
    b: Expr


@dataclass(eq=True)
class Or(Expr):
    a: Expr
    b: Expr


@dataclass(eq=True)
class Not(Expr):
    a: Expr


@dataclass(eq=True)
class IsPrime(Expr):
    a: Expr


@dataclass(eq=True)
class IsEven(Expr):
    a: Expr


_UNOPS = {Neg: _neg, Floor: _floor, Abs: _abs, IsPrime: is_prime, IsEven: is_even}
_BINOPS = {Add: _add, Sub: _sub, Mul: _mul, Div: _div, Mod: _mod, Lt: _lt, Le: _le}


def _build(e: Expr) -> Callable[[State], Value]:
    t = type(e)
    if t is Const:
        v = e.value
        return lambda s: v
    if t is Var:
        n = e.name
        return lambda s: s.get(n, 0)
    if t is Not:
        fa = compile_expr(e.a)
        return lambda s: not _bool(fa(s))
    if t in _UNOPS:
        fa = compile_expr(e.a)
        op = _UNOPS[t]
        return lambda s: op(fa(s))
    fa = compile_expr(e.a)
    fb = compile_expr(e.b)
    if t is And:
        return lambda s: _bool(fa(s)) and _bool(fb(s))
    if t is Or:
        return lambda s: _bool(fa(s)) or _bool(fb(s))
    if t is Eq:
        return lambda s: values_equal(fa(s), fb(s))
    op = _BINOPS[t]
    return lambda s: op(fa(s), fb(s))


def compile_expr(e: Expr) -> Callable[[State], Value]:
    # closure cached on the node; not a dataclass field so == stays structural
    fn = getattr(e, "_fn", None)
    if fn is None:
        fn = _build(e)
        e._fn = fn
    return fn


def eval_expr(e: Expr, sigma: State) -> Value:
    return compile_expr(e)(sigma)


# -------------------------------------------------------------------- commands

@dataclass(eq=True)
class Command:
    pass


@dataclass(eq=True)
class Skip(Command):
    pass


@dataclass(eq=True)
class Assign(Command):
    x: str
    e: Expr


@dataclass(eq=True)
class Seq(Command):
    c1: Command
    c2: Command


@dataclass(eq=True)
class Observe(Command):
    e: Expr


@dataclass(eq=True)
class Ite(Command):
    e: Expr
    c1: Command
    c2: Command


@dataclass(eq=True)
class Choice(Command):
    p: Expr
    c1: Command
    c2: Command


@dataclass(eq=True)
class UniformBind(Command):
    e: Expr
    x: str
    body: Command


@dataclass(eq=True)
class While(Command):
    e: Expr
    body: Command


def seq(*cs: Command) -> Command:
    """Right-nested Seq of the given commands (the printer's canonical shape)."""
    if not cs:
        return Skip()
    out = cs[-1]
    for c in reversed(cs[:-1]):
        out = Seq(c, out)
    return out


TRUE = Const(True)
FALSE = Const(False)


def rat(n, d=None) -> Const:
    return Const(Fraction(n) if d is None else Fraction(n, d))
