"""Typed errors raised across the package.

Every error derives from :class:`DensegenError` so the CLI can map them to
exit code 1 in one place.
"""


class DensegenError(Exception):
    """Base class for all typed errors in densegen."""


# numeric kernel
class SingularMatrix(DensegenError):
    pass


class NoConvergence(DensegenError):
    pass


class FieldMismatch(DensegenError):
    pass


class NonFiniteEntries(DensegenError):
    pass


# dual bases
class BadPairing(DensegenError):
    pass


class DegenerateExtension(DensegenError):
    pass


class DimensionTooSmall(DensegenError):
    pass


# bordered matrices
class SingularF(DensegenError):
    pass


class FiberMismatch(DensegenError):
    pass


class PoleAtZ(DensegenError):
    pass


class PositivityViolated(DensegenError):
    pass


class NoRealRoot(DensegenError):
    pass


class NotBordered(DensegenError):
    """Operand is not in the class an operation requires (e.g. not in I_n)."""


# generators
class MissingCanonicalForm(DensegenError):
    pass


class NotInClassR(DensegenError):
    pass


# planners
class DegenerateTarget(DensegenError):
    pass


class GuardViolation(DensegenError):
    pass


class NoAdmissibleC(DensegenError):
    def __init__(self, msg, nearest=None):
        super().__init__(msg)
        self.nearest = nearest


class NotFoundWithinBound(DensegenError):
    def __init__(self, msg, best_error=None, bound=None):
        super().__init__(msg)
        self.best_error = best_error
        self.bound = bound


# synthesis
class WordOverflow(DensegenError):
    pass


class WordTooLong(DensegenError):
    pass


class ScopeError(DensegenError):
    """Target lies outside the closure a generator pair is known to cover."""


class BudgetExhausted(DensegenError):
    pass
