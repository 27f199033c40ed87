"""Exception hierarchy shared by all modules."""


class VdlabError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameters(VdlabError, ValueError):
    """Coupling constants or a phase point violate their admissibility constraints.

    ``violations`` holds one human readable line per violated constraint.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NumericalFailure(VdlabError, ArithmeticError):
    """Base class for failures of a numerical procedure on valid input."""


class DomainError(NumericalFailure):
    pass


class SpectrumDegenerate(NumericalFailure):
    pass


class StepFailure(NumericalFailure):
    pass


class DomainExit(NumericalFailure):
    pass


class EigensolveFailure(NumericalFailure):
    pass


class MinorNonPositive(NumericalFailure):
    pass


class PoleError(VdlabError, ZeroDivisionError):
    pass


class DegenerateSpectrum(SpectrumDegenerate):
    """Spectrum of the geodesic matrix fails its reciprocal pairing."""
