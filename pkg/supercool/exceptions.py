# coding: utf-8
#


class BaseError(Exception):
    """ root of every error raised by supercool """
    exit_code = 2

    @property
    def name(self) -> str:
        n = self.__class__.__name__
        return n[:-len("Error")] if n.endswith("Error") else n

    def __str__(self):
        detail = ", ".join(str(a) for a in self.args)
        return "%s(%s)" % (self.name, detail)


class ValidationError(BaseError):
    """ input rejected before any solve starts """
    exit_code = 1


class NotNormalizedError(ValidationError):
    """ density does not integrate to one """


class NegativeDensityError(ValidationError):
    pass


class SupercriticalSupNormError(ValidationError):
    """ ‖f‖∞ ≥ α/2, uniqueness of the limit problem is lost """


class NonPositiveEpsilonError(ValidationError):
    pass


class InvalidSweepError(ValidationError):
    """ epsilons not strictly decreasing or not positive """


class ConfigParseError(BaseError):
    exit_code = 1


class SolverError(BaseError):
    exit_code = 2


class GridMismatchError(SolverError):
    pass


class CFLUnreasonableError(SolverError):
    """ the implicit system is not an M-matrix """


class PreconditionLipschitzError(SolverError):
    pass


class PreconditionFailedError(SolverError):
    pass


class WindowStalledError(SolverError):
    """ Picard did not contract even on the smallest window """


class NotConvergedError(SolverError):
    pass


class OutputError(BaseError):
    exit_code = 3
