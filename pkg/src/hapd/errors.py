"""Exception hierarchy shared by the model, trim, synthesis and simulation layers."""


class HapdError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HapdError, ValueError):
    """An argument lies outside the domain where a model is defined."""


class SingularityError(HapdError):
    """The polar-form equations are singular at the requested state."""


class ParseError(HapdError, ValueError):
    """A text file could not be parsed.

    ``line`` is the 1-based line number of the offending line, or ``None``
    when the problem is not tied to one line (missing keys, truncation).
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class ValidationError(HapdError, ValueError):
    """A parsed object violates a structural invariant."""


class TrimError(HapdError):
    """Trim iteration failed to converge."""

    def __init__(self, message, residual=None, condition=None):
        self.residual = residual
        self.condition = condition
        super().__init__(message)


class InfeasibleTrimError(TrimError):
    """Trim converged but the solution violates control limits."""


class LinearizationError(HapdError):
    """Finite-difference Jacobian contains non-finite entries."""


class FitError(HapdError):
    """The norm-bounded fit could not reproduce the vertex family."""

    def __init__(self, message, residual=None, rank=None):
        self.residual = residual
        self.rank = rank
        super().__init__(message)


class SimulationAbort(HapdError):
    """Nonlinear integration hit a singular state.

    ``time`` is the simulation time at which the failure occurred and
    ``trajectory`` holds the samples computed up to that point.
    """

    def __init__(self, message, time, trajectory=None):
        self.time = time
        self.trajectory = trajectory
        super().__init__(f"{message} (t = {time:.6g} s)")
