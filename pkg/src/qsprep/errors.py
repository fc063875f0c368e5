"""Exception types shared across the package."""


class QsprepError(Exception):
    """Base class for all errors raised by this package."""


# -- amplitude preprocessing ------------------------------------------------

class LengthNotPowerOfTwo(QsprepError):
    pass


class ZeroVector(QsprepError):
    pass


class BadSplit(QsprepError):
    pass


class IndexOutOfRange(QsprepError):
    pass


# -- circuit IR ---------------------------------------------------------------

class OperandNotLive(QsprepError):
    pass


class DuplicateOperand(QsprepError):
    pass


class LayerCollision(QsprepError):
    pass


class DoubleDealloc(QsprepError):
    pass


class UseAfterDealloc(QsprepError):
    pass


class LeakedQubit(QsprepError):
    pass


# -- subroutines --------------------------------------------------------------

class NotPowerOfTwo(QsprepError):
    pass


class RegisterTooSmall(QsprepError):
    pass


class BadRegisterShape(QsprepError):
    pass


class AngleCountMismatch(QsprepError):
    pass


# -- protocols ----------------------------------------------------------------

class NoValidSplit(QsprepError):
    pass


class ComplexTargetNeedsCSP(QsprepError):
    pass


# -- simulator ----------------------------------------------------------------

class PeakQubitsExceeded(QsprepError):
    pass


class DeallocNotZero(QsprepError):
    def __init__(self, qubit, mass, message=None):
        self.qubit = qubit
        self.mass = mass
        super().__init__(message or f"qubit {qubit} deallocated with residual mass {mass:.3e}")


class NormDrift(QsprepError):
    pass


# -- multicopy ----------------------------------------------------------------

class PoolExceeded(QsprepError):
    def __init__(self, message, feasible_k=None):
        self.feasible_k = feasible_k
        super().__init__(message)
