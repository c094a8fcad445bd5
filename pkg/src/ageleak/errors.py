class AgeLeakError(Exception):
    """Base class for all ageleak errors."""


class ParameterError(AgeLeakError, ValueError):
    """A parameter or input failed validation."""

    def __init__(self, name: str, message: str):
        self.name = name
        super().__init__(f"{message} for '{name}'")


class NumericalError(AgeLeakError, ArithmeticError):
    """A numerical procedure did not produce a trustworthy answer."""


class NegativeProbability(ParameterError):
    pass


class UnnormalizedMass(ParameterError):
    pass


class NonPositiveDuration(ParameterError):
    pass


class DuplicateDuration(ParameterError):
    pass


class TailTooHeavy(ParameterError):
    pass


class InvalidBeta(ParameterError):
    pass


class InvalidLambda(ParameterError):
    pass


class InvalidTau(ParameterError):
    pass


class InvalidRate(ParameterError):
    pass


class NonHalfIntegerTau(ParameterError):
    pass


class ZeroRate(ParameterError):
    pass


class Unstable(ParameterError):
    """The queue has no stationary regime (load at or above one)."""


class NoFeasibleAlpha(ParameterError):
    pass


class HorizonTooLarge(ParameterError):
    pass


class InvalidConfig(ParameterError):
    pass


class BaselinePoint(ParameterError):
    """Efficiency is undefined at the zero-delay point."""


class NoOverlap(ParameterError):
    pass


class TooFewPoints(ParameterError):
    pass


class ConvergenceFailure(NumericalError):
    def __init__(self, name: str, iterations: int, residual: float):
        self.name = name
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"No convergence after {iterations} iterations (residual {residual:.3e}) for '{name}'")
