"""Choice-fix trees: the sampler IR, with monadic bind and inference.

A tree is Leaf(sigma) | Fail | Choice(p, left, right) | Fix(sigma0, e,
g, k). Choice's left branch is the "heads" outcome (probability p);
Fix is an anchored loop: starting from sigma0, states satisfying guard
e re-enter the generator g, others exit through the continuation k.
Generators are plain pure functions State -> tree, so Fix bodies are
expanded on demand (and cached per state on the node).

twp/twlp/tcwp mirror the command-level transformers: same one-sided
bound directions, same stopping rule, same result types. Fix nodes
whose one-step expansion is loop-free and whose looping leaves all sit
exactly at the anchor state solve the fixpoint in closed form
(x = a + q*x), which makes uniform and coin-flipping rejection loops
exact rather than iterative; force_iters never truncates these, so
matched-iteration comparisons against command semantics stay exact.
"""

from __future__ import annotations

from fractions import Fraction

from .core import State, compile_expr, render_state, state_key, value_key
from .errors import (
    BoundError, ChoiceOutOfRange, EvalTypeError, NotNormalized, ZeroDenominator,
)
from .parser import render_expr
from .semantics import (
    DEFAULT_CONFIG, CwpBounds, FixpointConfig, InferenceResult, Unconverged,
    _memo, lift,
)

_ZERO = Fraction(0)
_ONE = Fraction(1)


class CFTree:
    __slots__ = ()


class Leaf(CFTree):
    __slots__ = ("sigma",)

    def __init__(self, sigma: State):
        self.sigma = sigma

    def __eq__(self, other):
        return type(other) is Leaf and state_key(self.sigma) == state_key(other.sigma)

    def __hash__(self):
        return hash(state_key(self.sigma))

    def __repr__(self):
        return f"Leaf({render_state(self.sigma)})"


class Fail(CFTree):
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other):
        return type(other) is Fail

    def __hash__(self):
        return hash(Fail)

    def __repr__(self):
        return "Fail"


FAIL = Fail()


class Choice(CFTree):
    __slots__ = ("p", "left", "right")

    def __init__(self, p, left: CFTree, right: CFTree):
        if isinstance(p, bool) or not isinstance(p, (int, Fraction)):
            raise EvalTypeError("choice bias must be a number")
        p = Fraction(p)
        if p < 0 or p > 1:
            raise ChoiceOutOfRange(f"choice bias {p} outside [0,1]")
        self.p = p
        self.left = left
        self.right = right

    def __eq__(self, other):
        return (type(other) is Choice and self.p == other.p
                and self.left == other.left and self.right == other.right)

    def __hash__(self):
        return hash((self.p, self.left, self.right))

    def __repr__(self):
        return f"Choice({self.p}, {self.left!r}, {self.right!r})"


class Fix(CFTree):
    __slots__ = ("sigma0", "e", "g", "k", "_gcache", "_kcache", "_affine")

    def __init__(self, sigma0: State, e, g, k):
        self.sigma0 = sigma0
        self.e = e
        self.g = g
        self.k = k
        self._gcache = None
        self._kcache = None
        self._affine = ()  # () = not analyzed yet; None = not affine

    def __repr__(self):
        return f"Fix({render_state(self.sigma0)}, {render_expr(self.e)}, <g>, <k>)"


def tree_bind(t: CFTree, f) -> CFTree:
    """Graft f onto every Leaf; under Fix the graft composes after k."""
    ty = type(t)
    if ty is Leaf:
        return f(t.sigma)
    if ty is Fail:
        return t
    if ty is Choice:
        return Choice(t.p, tree_bind(t.left, f), tree_bind(t.right, f))
    if ty is Fix:
        k = t.k
        return Fix(t.sigma0, t.e, t.g, lambda s: tree_bind(k(s), f))
    raise EvalTypeError(f"not a tree: {t!r}")


# ------------------------------------------------------------------ inference

class _Ctx:
    __slots__ = ("cfg", "iterations", "converged")

    def __init__(self, cfg):
        self.cfg = cfg
        self.iterations = 0
        self.converged = True

    def note(self, iters, converged):
        if iters > self.iterations:
            self.iterations = iters
        self.converged = self.converged and converged


def _guard(e):
    fn = compile_expr(e)

    def g(sigma):
        v = fn(sigma)
        if v is True or v is False:
            return v
        raise EvalTypeError("fix guard must be a boolean")

    return g


def _gen(t: Fix, sigma) -> CFTree:
    if t._gcache is None:
        t._gcache = {}
    k = state_key(sigma)
    tree = t._gcache.get(k)
    if tree is None:
        tree = t._gcache[k] = t.g(sigma)
    return tree


def _kexp(t: Fix, sigma) -> CFTree:
    if t._kcache is None:
        t._kcache = {}
    k = state_key(sigma)
    tree = t._kcache.get(k)
    if tree is None:
        tree = t._kcache[k] = t.k(sigma)
    return tree


def _affine_info(t: Fix):
    """One-step loop analysis: exits [(mass, state)], fail mass, loop mass.

    Valid only when the expanded body has no Fix and every looping leaf
    is exactly the anchor state; then twp solves x = a + q*x directly.
    """
    if t._affine != ():
        return t._affine
    guard = _guard(t.e)
    anchor = state_key(t.sigma0)
    exits = []
    acc = {"fail": _ZERO, "loop": _ZERO, "ok": True}

    def walk(node, mass):
        if not acc["ok"]:
            return
        ty = type(node)
        if ty is Leaf:
            if guard(node.sigma):
                if state_key(node.sigma) != anchor:
                    acc["ok"] = False
                else:
                    acc["loop"] += mass
            else:
                exits.append((mass, node.sigma))
        elif ty is Fail:
            acc["fail"] += mass
        elif ty is Choice:
            if node.p:
                walk(node.left, mass * node.p)
            if node.p != 1:
                walk(node.right, mass * (1 - node.p))
        else:
            acc["ok"] = False

    walk(_gen(t, t.sigma0), _ONE)
    t._affine = (exits, acc["fail"], acc["loop"]) if acc["ok"] else None
    return t._affine


def _twp(kind, b, t, f, ctx) -> Fraction:
    ty = type(t)
    if ty is Leaf:
        return f(t.sigma)
    if ty is Fail:
        return _ONE if b else _ZERO
    if ty is Choice:
        p = t.p
        left = _twp(kind, b, t.left, f, ctx) * p if p else _ZERO
        right = _twp(kind, b, t.right, f, ctx) * (1 - p) if p != 1 else _ZERO
        return left + right
    if ty is Fix:
        return _fix_value(kind, b, t, f, ctx)
    raise EvalTypeError(f"not a tree: {t!r}")


def _fix_value(kind, b, t: Fix, f, ctx) -> Fraction:
    guard = _guard(t.e)
    if not guard(t.sigma0):
        return _twp(kind, b, _kexp(t, t.sigma0), f, ctx)
    info = _affine_info(t)
    if info is not None:
        exits, fail_mass, loop_mass = info
        a = sum((m * _twp(kind, b, _kexp(t, s), f, ctx) for m, s in exits), _ZERO)
        if b:
            a += fail_mass
        if loop_mass == 1:
            return _ZERO if kind == "wp" else _ONE
        return a / (1 - loop_mass)

    bottom = _ZERO if kind == "wp" else _ONE
    ascending = kind == "wp"
    iterates = [lambda s: bottom]

    def extend():
        prev = iterates[-1]

        def step(s):
            if guard(s):
                return _twp(kind, b, _gen(t, s), prev, ctx)
            return _twp(kind, b, _kexp(t, s), f, ctx)

        iterates.append(_memo(step))

    cfg = ctx.cfg
    if cfg.force_iters is not None:
        while len(iterates) <= cfg.force_iters:
            extend()
        ctx.note(cfg.force_iters, True)
        return iterates[cfg.force_iters](t.sigma0)

    prev_v = bottom
    moved = False
    stalled = 0
    for k in range(1, cfg.max_iters + 1):
        if len(iterates) <= k:
            extend()
        v = iterates[k](t.sigma0)
        assert v >= prev_v if ascending else v <= prev_v, "fix chain not monotone"
        if v != prev_v:
            moved = True
            stalled = 0
        else:
            stalled += 1
        if abs(v - prev_v) <= cfg.tolerance and (moved or stalled >= cfg.stall_limit):
            ctx.note(k, True)
            return v
        prev_v = v
    ctx.note(cfg.max_iters, False)
    return prev_v


def _bounded(f):
    def g(sigma):
        v = f(sigma)
        if v > 1:
            raise BoundError("twlp needs a [0,1]-bounded expectation")
        return v
    return g


def twp_result(b, t, f, cfg=DEFAULT_CONFIG) -> InferenceResult:
    ctx = _Ctx(cfg)
    val = _twp("wp", b, t, lift(f), ctx)
    return InferenceResult(val, ctx.converged, ctx.iterations)


def twlp_result(b, t, f, cfg=DEFAULT_CONFIG) -> InferenceResult:
    ctx = _Ctx(cfg)
    val = _twp("wlp", b, t, _bounded(lift(f)), ctx)
    return InferenceResult(val, ctx.converged, ctx.iterations)


def twp(b, t, f, cfg=DEFAULT_CONFIG):
    r = twp_result(b, t, f, cfg)
    return r.value if r.converged else Unconverged(r.value, r.iterations)


def twlp(b, t, f, cfg=DEFAULT_CONFIG):
    r = twlp_result(b, t, f, cfg)
    return r.value if r.converged else Unconverged(r.value, r.iterations)


def tcwp_result(t, f, cfg=DEFAULT_CONFIG):
    num = twp_result(False, t, f, cfg)
    den = twlp_result(False, t, lambda s: _ONE, cfg)
    if den.value == 0:
        raise ZeroDenominator("conditioning on an impossible observation")
    value = num.value / den.value
    iters = max(num.iterations, den.iterations)
    if num.converged and den.converged:
        return InferenceResult(value, True, iters)
    return CwpBounds(value, num.value, den.value, iters)


def tcwp(t, f, cfg=DEFAULT_CONFIG):
    r = tcwp_result(t, f, cfg)
    return r.value if isinstance(r, InferenceResult) else r


# ------------------------------------------------------------- distributions

class Dist:
    """Finite truncation of an outcome distribution over values.

    mass maps observed values to exact probabilities; fail_mass is
    observation-failure probability; unresolved_mass is whatever the
    truncation could not resolve. The three parts must total 1.
    """

    __slots__ = ("_mass", "fail_mass", "unresolved_mass")

    def __init__(self):
        self._mass = {}  # value_key -> [value, Fraction]
        self.fail_mass = _ZERO
        self.unresolved_mass = _ZERO

    def add(self, v, q):
        slot = self._mass.get(value_key(v))
        if slot is None:
            self._mass[value_key(v)] = [v, Fraction(q)]
        else:
            slot[1] += q

    def mass_of(self, v) -> Fraction:
        slot = self._mass.get(value_key(v))
        return slot[1] if slot else _ZERO

    def items(self):
        return sorted(((v, q) for v, q in self._mass.values()),
                      key=lambda vq: value_key(vq[0]))

    def support(self):
        return [v for v, _ in self.items()]

    def total(self) -> Fraction:
        return sum((q for _, q in self._mass.values()),
                   self.fail_mass + self.unresolved_mass)

    def check_normalized(self, tolerance=Fraction(1, 10**12)):
        if abs(self.total() - 1) > tolerance:
            raise NotNormalized(f"distribution totals {self.total()}")
        return self

    def __repr__(self):
        parts = ", ".join(f"{v!r}: {q}" for v, q in self.items())
        return f"Dist({{{parts}}}, fail={self.fail_mass}, unresolved={self.unresolved_mass})"


# ------------------------------------------------------------------- dumping

def dump_tree(t: CFTree, depth: int = 4) -> str:
    """Indented rendering; Fix bodies expand at their anchor up to depth."""
    lines = []

    def rec(node, ind, budget):
        pad = "  " * ind
        if budget < 0:
            lines.append(pad + "...")
            return
        ty = type(node)
        if ty is Leaf:
            lines.append(pad + f"Leaf {render_state(node.sigma)}")
        elif ty is Fail:
            lines.append(pad + "Fail")
        elif ty is Choice:
            lines.append(pad + f"Choice {node.p}")
            rec(node.left, ind + 1, budget - 1)
            rec(node.right, ind + 1, budget - 1)
        elif ty is Fix:
            lines.append(pad + f"Fix anchor={render_state(node.sigma0)} "
                               f"guard=({render_expr(node.e)})")
            lines.append(pad + f"  g{render_state(node.sigma0)}:")
            rec(_gen(node, node.sigma0), ind + 2, budget - 1)
            lines.append(pad + f"  k{render_state(node.sigma0)}:")
            rec(_kexp(node, node.sigma0), ind + 2, budget - 1)
        else:
            lines.append(pad + repr(node))

    rec(t, 0, depth)
    return "\n".join(lines)
