"""Bias elimination: every Choice in the output flips a fair coin.

bernoulli_tree(n/d) is a rejection sampler in the random bit model: a
perfect depth-m fair-coin skeleton (2^(m-1) < d <= 2^m) whose first n
slots yield true, next d-n slots yield false, and remaining 2^m - d
slots loop back and reflip. Loopback slots collapse per aligned block
(outcome slots never merge), and the whole thing wraps in a Fix guarded
on a reserved marker, so Pr(true) is the geometric sum n/d exactly.

debias replaces each biased Choice with a bernoulli_tree whose exit
continuation picks the corresponding debiased branch; the skeleton for
each bias is built once and shared, and branches are reached through
the Fix continuation, so no subtree is ever copied per loop iteration.
elim_choices is the separate cleanup pass: degenerate (p=0, p=1) and
duplicate-branch choices disappear; it preserves inference semantics
but can change bit usage, so the sampling pipeline applies it before
debiasing, never after.
"""

from __future__ import annotations

from fractions import Fraction

from .cftree import CFTree, Choice, Fail, Fix, Leaf, tree_bind
from .compiler import _slots
from .core import Const, Eq, State, Var
from .errors import BiasOutOfRange, EvalTypeError

_LOOP = -1
_BVAR = "__b"
_B_GUARD = Eq(Var(_BVAR), Const(_LOOP))

_bernoulli_cache: dict = {}


def bernoulli_tree(p) -> CFTree:
    """Fair-coin tree over outcome __b with Pr(__b = true) exactly p."""
    if isinstance(p, bool) or not isinstance(p, (int, Fraction)):
        raise EvalTypeError("bias must be a number")
    p = Fraction(p)
    if p < 0 or p > 1:
        raise BiasOutOfRange(f"bias {p} outside [0,1]")
    t = _bernoulli_cache.get(p)
    if t is None:
        t = _bernoulli_cache[p] = _build_bernoulli(p)
    return t


def _build_bernoulli(p: Fraction) -> CFTree:
    if p == 0:
        return Leaf({_BVAR: False})
    if p == 1:
        return Leaf({_BVAR: True})
    n, d = p.numerator, p.denominator
    m = (d - 1).bit_length()
    width = 1 << m
    skeleton = _slots(0, width, d,
                      lambda i: Leaf({_BVAR: _LOOP if i == _LOOP else i < n}))
    if width == d:
        return skeleton
    return Fix({_BVAR: _LOOP}, _B_GUARD, lambda s: skeleton, Leaf)


def elim_choices(t: CFTree) -> CFTree:
    """Drop certain and redundant choices; inference-equivalent output."""
    ty = type(t)
    if ty is Choice:
        left = elim_choices(t.left)
        right = elim_choices(t.right)
        if t.p == 1:
            return left
        if t.p == 0:
            return right
        if left == right:
            return left
        return Choice(t.p, left, right)
    if ty is Fix:
        g, k = t.g, t.k
        return Fix(t.sigma0, t.e,
                   lambda s: elim_choices(g(s)),
                   lambda s: elim_choices(k(s)))
    return t


def debias(t: CFTree) -> CFTree:
    """Rebuild t with every choice fair; inference semantics unchanged."""
    ty = type(t)
    if ty is Choice:
        left = debias(t.left)
        right = debias(t.right)
        bt = bernoulli_tree(t.p)
        return tree_bind(bt, lambda s: left if s[_BVAR] is True else right)
    if ty is Fix:
        g, k = t.g, t.k
        return Fix(t.sigma0, t.e,
                   lambda s: debias(g(s)),
                   lambda s: debias(k(s)))
    return t


def is_unbiased(t: CFTree, probe_states=(), depth: int = 5) -> bool:
    """No reachable Choice is biased, probing Fix bodies on given states."""
    probes = list(probe_states)

    def walk(node, budget) -> bool:
        ty = type(node)
        if ty is Choice:
            return node.p == Fraction(1, 2) and walk(node.left, budget) \
                and walk(node.right, budget)
        if ty is Fix:
            if budget <= 0:
                return True
            for s in [node.sigma0, *probes]:
                if not walk(node.g(s), budget - 1):
                    return False
                if not walk(node.k(s), budget - 1):
                    return False
            return True
        return True

    return walk(t, depth)
