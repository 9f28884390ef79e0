"""Reference inference: weakest pre-expectation transformers.

wp and wlp are computed by structural recursion; loops take the n-th
Kleene iterate (from the zero expectation for wp, from one for wlp), so
reported loop values are one-sided bounds: wp from below, wlp from
above. cwp is the quotient wp_false(f) / wlp_false(1) and inherits a
lower-bound reading. All arithmetic is exact rational; floats appear
only in callers that choose to convert.

Iterates are memoized per program state, which keeps the cost of the
n-th iterate linear in n rather than exponential in loop-body branching.

Stopping rule, per loop and per queried state: successive iterate
values within `tolerance` of each other count as converged only after
the value has moved at least once, or after `stall_limit` consecutive
stationary iterates (so an everywhere-constant chain, e.g. a loop that
never terminates, settles immediately; a loop whose mass first arrives
after a few iterates is not cut off at zero). `force_iters` disables
the rule and takes exactly that many iterates at every loop; matched
forced runs on complementary transformers make the duality
wp_b c f + wlp_not_b c (1-f) = 1 an exact rational identity, which
invariant_sum_check exploits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Optional, Union

from .core import (
    Assign, Choice, Command, Expr, Ite, Observe, Seq, Skip, State,
    UniformBind, While, compile_expr, state_key, state_update,
)
from .errors import (
    BoundError, ChoiceOutOfRange, EvalTypeError, UniformNonPositive,
    ZeroDenominator,
)

Expectation = Callable[[State], Fraction]

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class FixpointConfig:
    max_iters: int = 10_000
    tolerance: Fraction = Fraction(1, 10**9)
    force_iters: Optional[int] = None
    stall_limit: int = 32


DEFAULT_CONFIG = FixpointConfig()


@dataclass
class Unconverged:
    """Loop iteration hit max_iters; value is the last (one-sided) iterate."""
    value: Fraction
    iterations: int


@dataclass
class InferenceResult:
    value: Fraction
    converged: bool
    iterations: int  # largest fixpoint iteration count used anywhere


@dataclass
class CwpBounds:
    """cwp whose numerator or denominator stopped early.

    value = numerator / denominator is still a lower bound of the true
    conditional expectation (numerator from below, denominator from above).
    """
    value: Fraction
    numerator: Fraction
    denominator: Fraction
    iterations: int


def const_expectation(q) -> Expectation:
    v = Fraction(q)
    if v < 0:
        raise BoundError("expectation must be nonnegative")
    return lambda sigma: v


ZERO = const_expectation(0)
ONE = const_expectation(1)
HALF = const_expectation(Fraction(1, 2))


def lift(e) -> Expectation:
    """Expectation from an Expr: booleans as indicators, numbers as values."""
    if callable(e) and not isinstance(e, Expr):
        return e
    fn = compile_expr(e)

    def f(sigma):
        v = fn(sigma)
        if v is True:
            return _ONE
        if v is False:
            return _ZERO
        if isinstance(v, bool):  # unreachable, keeps the check obvious
            raise EvalTypeError("bad boolean")
        q = Fraction(v)
        if q < 0:
            raise BoundError("expectation must be nonnegative")
        return q

    return f


def _bounded(f: Expectation) -> Expectation:
    def g(sigma):
        v = f(sigma)
        if v > 1:
            raise BoundError("wlp needs a [0,1]-bounded expectation")
        return v
    return g


def _complement(f: Expectation) -> Expectation:
    def g(sigma):
        v = f(sigma)
        if v > 1:
            raise BoundError("complement of an expectation above 1")
        return _ONE - v
    return g


class _Ctx:
    """Per-query bookkeeping shared by every fixpoint run."""

    def __init__(self, cfg: FixpointConfig):
        self.cfg = cfg
        self.iterations = 0
        self.converged = True

    def note(self, iters: int, converged: bool):
        if iters > self.iterations:
            self.iterations = iters
        self.converged = self.converged and converged


def _memo(fn: Expectation) -> Expectation:
    cache = {}

    def g(sigma):
        k = state_key(sigma)
        v = cache.get(k)
        if v is None:
            v = cache[k] = fn(sigma)
        return v

    return g


def _guard_fn(e):
    fn = compile_expr(e)

    def g(sigma):
        v = fn(sigma)
        if v is True or v is False:
            return v
        raise EvalTypeError("guard must be a boolean")

    return g


def _prob_fn(e):
    fn = compile_expr(e)

    def p(sigma):
        v = fn(sigma)
        if isinstance(v, bool) or not isinstance(v, (int, Fraction)):
            raise EvalTypeError("probability must be a number")
        q = Fraction(v)
        if q < 0 or q > 1:
            raise ChoiceOutOfRange(f"choice probability {q} outside [0,1]")
        return q

    return p


def _size_fn(e):
    fn = compile_expr(e)

    def n(sigma):
        v = fn(sigma)
        if type(v) is not int:
            raise EvalTypeError("uniform bound must be an integer")
        if v <= 0:
            raise UniformNonPositive(f"uniform bound {v} must be positive")
        return v

    return n


def _transform(kind: str, b: bool, c: Command, f: Expectation, ctx: _Ctx) -> Expectation:
    t = type(c)
    if t is Skip:
        return f
    if t is Assign:
        fn = compile_expr(c.e)
        x = c.x
        return lambda s: f(state_update(s, x, fn(s)))
    if t is Seq:
        return _transform(kind, b, c.c1, _transform(kind, b, c.c2, f, ctx), ctx)
    if t is Observe:
        g = _guard_fn(c.e)
        # observe row: [e]*f + [not e and b]
        fail = _ONE if b else _ZERO
        return lambda s: f(s) if g(s) else fail
    if t is Ite:
        g = _guard_fn(c.e)
        f1 = _transform(kind, b, c.c1, f, ctx)
        f2 = _transform(kind, b, c.c2, f, ctx)
        return lambda s: f1(s) if g(s) else f2(s)
    if t is Choice:
        p = _prob_fn(c.p)
        f1 = _transform(kind, b, c.c1, f, ctx)
        f2 = _transform(kind, b, c.c2, f, ctx)

        def ch(s):
            q = p(s)
            # guard the products so a 0-weighted branch is never evaluated
            left = f1(s) * q if q else _ZERO
            right = f2(s) * (1 - q) if q != 1 else _ZERO
            return left + right

        return ch
    if t is UniformBind:
        nf = _size_fn(c.e)
        x = c.x
        body = _transform(kind, b, c.body, f, ctx)

        def un(s):
            n = nf(s)
            return sum(body(state_update(s, x, i)) for i in range(n)) / n

        return un
    if t is While:
        return _loop(kind, b, c, f, ctx)
    raise EvalTypeError(f"not a command: {c!r}")


def _loop(kind, b, c: While, f, ctx: _Ctx) -> Expectation:
    guard = _guard_fn(c.e)
    body = c.body
    bottom = _ZERO if kind == "wp" else _ONE
    iterates = [lambda s: bottom]
    ascending = kind == "wp"

    def extend():
        prev = iterates[-1]
        step_body = _transform(kind, b, body, prev, ctx)
        iterates.append(_memo(lambda s: step_body(s) if guard(s) else f(s)))

    def at(sigma):
        cfg = ctx.cfg
        if cfg.force_iters is not None:
            while len(iterates) <= cfg.force_iters:
                extend()
            ctx.note(cfg.force_iters, True)
            return iterates[cfg.force_iters](sigma)
        prev_v = bottom
        moved = False
        stalled = 0
        for k in range(1, cfg.max_iters + 1):
            if len(iterates) <= k:
                extend()
            v = iterates[k](sigma)
            assert v >= prev_v if ascending else v <= prev_v, "iterate chain not monotone"
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

    return at


def _run(kind, b, c, f, sigma, cfg) -> InferenceResult:
    ctx = _Ctx(cfg)
    g = lift(f)
    if kind == "wlp":
        g = _bounded(g)
    val = _transform(kind, b, c, g, ctx)(sigma)
    return InferenceResult(val, ctx.converged, ctx.iterations)


def wp_result(b, c, f, sigma, cfg=DEFAULT_CONFIG) -> InferenceResult:
    return _run("wp", b, c, f, sigma, cfg)


def wlp_result(b, c, f, sigma, cfg=DEFAULT_CONFIG) -> InferenceResult:
    return _run("wlp", b, c, f, sigma, cfg)


def wp(b, c, f, sigma, cfg=DEFAULT_CONFIG) -> Union[Fraction, Unconverged]:
    r = wp_result(b, c, f, sigma, cfg)
    return r.value if r.converged else Unconverged(r.value, r.iterations)


def wlp(b, c, f, sigma, cfg=DEFAULT_CONFIG) -> Union[Fraction, Unconverged]:
    r = wlp_result(b, c, f, sigma, cfg)
    return r.value if r.converged else Unconverged(r.value, r.iterations)


def cwp_result(c, f, sigma, cfg=DEFAULT_CONFIG):
    num = wp_result(False, c, f, sigma, cfg)
    den = wlp_result(False, c, ONE, sigma, cfg)
    if den.value == 0:
        raise ZeroDenominator("conditioning on an impossible observation")
    value = num.value / den.value
    iters = max(num.iterations, den.iterations)
    if num.converged and den.converged:
        return InferenceResult(value, True, iters)
    return CwpBounds(value, num.value, den.value, iters)


def cwp(c, f, sigma, cfg=DEFAULT_CONFIG):
    r = cwp_result(c, f, sigma, cfg)
    return r.value if isinstance(r, InferenceResult) else r


def invariant_sum_check(c, f, sigma, cfg=DEFAULT_CONFIG, b=False) -> Fraction:
    """|wp_b c f + wlp_not_b c (1-f) - 1| with matched loop iterates.

    Forced iteration counts make both sides recurse in lockstep, so the
    result is exactly 0 whenever the duality holds; any nonzero value is
    a genuine semantics bug, not approximation noise.
    """
    if cfg.force_iters is None:
        cfg = replace(cfg, force_iters=32)
    g = lift(f)
    left = _run("wp", b, c, g, sigma, cfg).value
    right = _run("wlp", not b, c, _complement(g), sigma, cfg).value
    return abs(left + right - 1)
