"""Exception hierarchy for the de Rham engine.

Every error carries the process exit code the CLI reports for it:
2 for invalid input (bad curve, inadmissible or special divisor, ...),
3 for numerical failures detected while computing.
"""


class DeRhamError(Exception):
    exit_code = 3


class InputError(DeRhamError):
    exit_code = 2


class NumericalError(DeRhamError):
    exit_code = 3


# series
class DivisionByZeroSeries(NumericalError):
    pass


class EmptyPrecision(NumericalError):
    pass


class OddLeadingOrder(InputError):
    pass


class BranchMismatch(InputError):
    pass


class NonzeroResidue(InputError):
    pass


# curve
class NotSquarefree(InputError):
    pass


class WrongDegreeParity(InputError):
    pass


class DegreeTooSmall(InputError):
    pass


class NotOnCurve(InputError):
    pass


class BranchPoint(InputError):
    pass


# function field and de Rham
class InadmissibleSupport(InputError):
    pass


class SpecialDivisor(InputError):
    pass


class NotSecondKind(InputError):
    pass


class RankDeficiency(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


# flow
class DivisorsNotDisjoint(InputError):
    pass


class AllZeroPrincipalParts(InputError):
    pass


class UnderdeterminedPrincipalParts(NumericalError):
    pass


class UnknownSample(InputError):
    pass


class FlowAborted(NumericalError):
    """A flow stopped early; the steps recorded so far are kept in ``trajectory``."""

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class Collision(FlowAborted):
    pass


class BranchApproach(FlowAborted):
    pass


class SpecialDivisorOnPath(FlowAborted):
    pass


class OffCurve(FlowAborted):
    pass
