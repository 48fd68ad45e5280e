"""Exception types raised across the package.

Every error is a ``ValueError`` subclass so callers that only care about
"bad input" can catch one thing.
"""


class RatelessError(ValueError):
    pass


class NonStochasticRow(RatelessError):
    pass


class NegativeEntry(RatelessError):
    pass


class NoConvergence(RatelessError):
    pass


class SymbolOutOfRange(RatelessError):
    pass


class IndexOutOfRange(RatelessError):
    pass


class BadEpsilon(RatelessError):
    pass


class BadM(RatelessError):
    pass


class ZeroProbabilityMessage(RatelessError):
    pass


class BadAlpha(RatelessError):
    pass


class BadDelta(RatelessError):
    pass


class BadPeriod(RatelessError):
    pass


class NonPositiveT(RatelessError):
    pass


class DomainError(RatelessError):
    pass


class DegenerateRegime(DomainError):
    pass


class MessageSetTooSmall(DomainError):
    pass


class InconsistentBlockLength(DomainError):
    pass


class ConfigError(RatelessError):
    pass
