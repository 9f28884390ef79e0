"""Sampling and exact inference for discrete probabilistic programs.

Programs are guarded commands with binary probabilistic choice, uniform
draws, unbounded loops, and conditioning. They compile to choice-fix
trees, which debias into coin-flipping samplers; the same trees support
exact expectation transformers used to cross-check every sampler.
"""

from .core import (
    Abs, Add, And, Assign, Choice, Command, Const, Div, Eq, Expr, Floor,
    IsEven, IsPrime, Ite, Le, Lt, Mod, Mul, Neg, Not, Observe, Or, Seq,
    Skip, Sub, UniformBind, Value, Var, While, eval_expr, rat, seq,
    state_update,
)
from .errors import ZarError

__version__ = "0.1.0"
