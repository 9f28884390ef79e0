"""Compiler from guarded commands to choice-fix trees.

Built as continuation-passing tree builders: comp(c, cont) returns a
function State -> tree, so sequencing is function composition and no
intermediate tree is ever re-walked by a bind. Loops become Fix nodes
whose generator is the compiled body with Leaf continuation; uniform
draws become a bind into the shared uniform_tree skeleton.

uniform_tree(n) is the fair-coin construction: a perfect depth-m
skeleton (2^(m-1) < n <= 2^m) whose first n slots, in left-to-right
order, are the outcomes 0..n-1 and whose remaining slots loop back for
another round of coin flips. Runs of loopback slots that fill an
aligned block collapse to a single leaf higher up, so rejection exits
as early as possible; outcome slots are never merged. Outcome states
bind the reserved variable __u; -1 marks a loopback.
"""

from __future__ import annotations

from fractions import Fraction

from . import core
from .cftree import FAIL, CFTree, Choice, Fix, Leaf, tree_bind
from .core import Command, Const, Eq, State, Var, compile_expr, state_update
from .errors import ChoiceOutOfRange, EvalTypeError, NonPositive, UniformNonPositive

_LOOP = -1
_UVAR = "__u"
_U_GUARD = Eq(Var(_UVAR), Const(_LOOP))

_uniform_cache: dict = {}


def uniform_tree(n: int) -> CFTree:
    """Tree drawing __u uniformly from 0..n-1 with fair coins, exactly."""
    if type(n) is not int:
        raise EvalTypeError("uniform_tree needs an integer")
    if n <= 0:
        raise NonPositive(f"uniform_tree needs a positive size, got {n}")
    t = _uniform_cache.get(n)
    if t is None:
        t = _uniform_cache[n] = _build_uniform(n)
    return t


def _build_uniform(n: int) -> CFTree:
    if n == 1:
        return Leaf({_UVAR: 0})
    m = (n - 1).bit_length()
    width = 1 << m
    skeleton = _slots(0, width, n, lambda i: Leaf({_UVAR: i}))
    if width == n:
        return skeleton
    return Fix({_UVAR: _LOOP}, _U_GUARD, lambda s: skeleton, Leaf)


def _slots(lo: int, hi: int, n: int, leaf) -> CFTree:
    """Perfect subtree over slot range [lo, hi); slots >= n are loopbacks.

    An all-loopback range is one leaf: rejection restarts without
    spending the remaining flips. Outcome slots stay at full depth.
    """
    if lo >= n:
        return leaf(_LOOP)
    if hi - lo == 1:
        return leaf(lo)
    mid = (lo + hi) // 2
    return Choice(Fraction(1, 2), _slots(lo, mid, n, leaf), _slots(mid, hi, n, leaf))


def _comp(c: Command, cont) -> "callable":
    t = type(c)
    if t is core.Skip:
        return cont
    if t is core.Assign:
        fn = compile_expr(c.e)
        x = c.x
        return lambda s: cont(state_update(s, x, fn(s)))
    if t is core.Seq:
        return _comp(c.c1, _comp(c.c2, cont))
    if t is core.Observe:
        fn = compile_expr(c.e)

        def obs(s):
            v = fn(s)
            if v is True:
                return cont(s)
            if v is False:
                return FAIL
            raise EvalTypeError("observe needs a boolean")

        return obs
    if t is core.Ite:
        fn = compile_expr(c.e)
        k1 = _comp(c.c1, cont)
        k2 = _comp(c.c2, cont)

        def ite(s):
            v = fn(s)
            if v is True:
                return k1(s)
            if v is False:
                return k2(s)
            raise EvalTypeError("if needs a boolean")

        return ite
    if t is core.Choice:
        pf = compile_expr(c.p)
        k1 = _comp(c.c1, cont)
        k2 = _comp(c.c2, cont)
        return lambda s: Choice(pf(s), k1(s), k2(s))
    if t is core.UniformBind:
        nf = compile_expr(c.e)
        x = c.x
        body = _comp(c.body, cont)

        def uni(s):
            n = nf(s)
            if type(n) is not int:
                raise EvalTypeError("uniform bound must be an integer")
            if n <= 0:
                raise UniformNonPositive(f"uniform bound {n} must be positive")
            return tree_bind(uniform_tree(n),
                             lambda su: body(state_update(s, x, su[_UVAR])))

        return uni
    if t is core.While:
        g = _comp(c.body, Leaf)
        return lambda s: Fix(s, c.e, g, cont)
    raise EvalTypeError(f"not a command: {c!r}")


def compile(c: Command, sigma: State) -> CFTree:  # noqa: A001 - interface name
    """Tree of c started at sigma, per the structural compilation scheme."""
    return _comp(c, Leaf)(sigma)
