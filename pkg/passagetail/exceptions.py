"""Error types raised by the engines, oracles, simulators and the CLI."""


class PassageTailError(Exception):
    """Root of every error raised by passagetail."""


class ConfigError(PassageTailError, ValueError):
    pass


class ModelError(PassageTailError, ValueError):
    """A model or argument violates a precondition."""


class SolverError(PassageTailError, ArithmeticError):
    """A numeric procedure could not deliver the requested accuracy."""


# Models
class QuadratureFailure(SolverError):
    pass


class UnstableSystem(ModelError):
    pass


# Tilt / intermediate solvers
class InvalidDrift(ModelError):
    pass


class HeavyTail(SolverError):
    pass


class IntermediateCase(SolverError):
    pass


class CramerInstead(SolverError):
    pass


class DivergentDelta(SolverError):
    pass


class OutsideUniformRange(ModelError):
    pass


# Heavy-tailed engine
class InvalidHorizon(ModelError):
    pass


class Unsupported(ModelError):
    pass


class MissingCumulant(ModelError):
    pass


class NoBracket(SolverError):
    pass


class ValidityViolated(ModelError):
    pass


class NoConvergence(SolverError):
    pass


class FitResidualTooLarge(SolverError):
    pass


# Passage assembly
class ZeroLevel(ModelError):
    pass


class SeriesNotDecaying(SolverError):
    pass


class RegimeMismatch(ModelError):
    pass


# Oracle
class WindowOverflow(SolverError):
    pass


class SlowDecay(SolverError):
    pass


# Monte Carlo
class TiltUnavailable(ModelError):
    pass


# Class diagnostics
class NonPositive(ModelError):
    pass


class SequenceOverflow(SolverError):
    pass
