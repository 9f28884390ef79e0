"""Exception types shared across the package."""


class ZarError(Exception):
    """Base class for all errors raised by this package."""


class EvalTypeError(ZarError):
    """An operator received a value of the wrong kind."""


class DivisionByZero(ZarError):
    """Division or modulus with a zero divisor."""


class ChoiceOutOfRange(ZarError):
    """A choice bias evaluated outside [0, 1]."""


class UniformNonPositive(ZarError):
    """A uniform bound evaluated to a non-positive integer."""


class NonPositive(ZarError):
    """A construction parameter that must be positive was not."""


class BiasOutOfRange(ZarError):
    """bernoulli_tree called with a bias outside [0, 1]."""


class BoundError(ZarError):
    """An expectation exceeded 1 where a bounded expectation is required."""


class ZeroDenominator(ZarError):
    """Conditioning mass is zero: every path violates an observation."""


class ParseError(ZarError):
    """Syntax error, carrying 1-based line and column."""

    def __init__(self, msg, line, col):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class ArityError(ParseError):
    """A built-in was applied to the wrong number of arguments."""


class Exhausted(ZarError):
    """A finite bit stream ran out of bits."""


class StepBudgetExceeded(ZarError):
    """A tree walk exceeded its node-visit budget (suspected divergence)."""


class AllMassFails(ZarError):
    """conditional_dist over a distribution with no surviving mass."""


class NotNormalized(ZarError):
    """A distribution argument does not sum to 1."""
