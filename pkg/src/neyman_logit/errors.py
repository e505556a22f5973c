"""Exception hierarchy."""


class NeymanLogitError(Exception):
    """Base class for all package errors."""


class DegenerateParameter(NeymanLogitError, ValueError):
    """A success rate is 0 or 1, so its log odds are undefined."""


class InvalidFraction(NeymanLogitError, ValueError):
    """The treated fraction rounds to an empty treatment or control group."""


class LengthMismatch(NeymanLogitError, ValueError):
    pass


class ParseError(NeymanLogitError, ValueError):
    pass


class RankDeficient(NeymanLogitError, ArithmeticError):
    """The design matrix has rank below the number of coefficients."""


class Separation(NeymanLogitError, ArithmeticError):
    """Newton iterates diverge: no finite maximizer of the likelihood."""


class MaxIterations(NeymanLogitError, ArithmeticError):
    pass


class TooManyFailures(NeymanLogitError, RuntimeError):
    pass


class TooLarge(NeymanLogitError, ValueError):
    pass
