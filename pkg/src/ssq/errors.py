"""Exception types shared across the toolkit."""


class SSQError(Exception):
    """Base class for all toolkit errors."""


# direct scattering
class NonDecayingProfile(SSQError):
    pass


class StepFailure(SSQError):
    pass


class RootCountMismatch(SSQError):
    pass


class DegenerateZero(SSQError):
    pass


class ContinuationUnreliable(SSQError):
    pass


# soliton engine
class SystemSingular(SSQError):
    def __init__(self, msg, indices=()):
        super().__init__(msg)
        self.indices = tuple(indices)


class ExponentOverflow(SSQError):
    pass


class SymmetryBroken(SSQError):
    pass


# conjugation / asymptotics
class OnCutEvaluation(SSQError):
    pass


class QuadratureFailure(SSQError):
    pass


class NonpositiveTime(SSQError):
    pass


class ApproximateDelta(SSQError):
    """Raised (in strict mode) when the matrix conjugation factor is only approximate."""


# painleve
class BlowUp(SSQError):
    pass


class NoConvergence(SSQError):
    pass


class FitDegenerate(SSQError):
    pass


# pde oracle
class Instability(SSQError):
    pass


class NonPeriodicInput(SSQError):
    pass


# cli / io
class GridMismatch(SSQError):
    pass
