"""
Exception hierarchy for breather-lab.

Commands map these onto process exit codes: configuration and domain
problems exit with 1, numerical failures with 2.
"""


class BreatherLabError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(BreatherLabError):
    """An experiment document failed to parse or validate.

    ``errors`` maps a dotted key path (``sweep.count``) to a list of messages.
    """

    def __init__(self, errors):
        self.errors = dict(errors)
        super().__init__(
            "; ".join(
                f"{path}: {message}"
                for path, messages in self.errors.items()
                for message in messages
            )
        )


class DomainError(BreatherLabError, ValueError):
    """An argument lies outside the domain of an operation."""


class DimensionError(BreatherLabError, ValueError):
    """A state vector does not match the lattice size."""


class NumericalError(BreatherLabError):
    """Base class for failures of a numerical procedure."""


class SingularTransformError(NumericalError):
    """Some gamma_n >= kappa, so the similarity matrix S is ill-defined."""


class ConvergenceError(NumericalError):
    def __init__(self, message, index=None, iterations=None):
        self.index = index
        self.iterations = iterations
        super().__init__(message)


class NotLocalizedError(NumericalError):
    def __init__(self, r):
        self.r = r
        super().__init__(f"end state is not localized (r = {r:.12g} <= 1)")


class BlowUpError(NumericalError):
    """Total intensity exceeded the divergence guard during integration.

    ``trajectory`` holds the samples stored before the failure.
    """

    def __init__(self, time, total_intensity, trajectory=None):
        self.time = time
        self.total_intensity = total_intensity
        self.trajectory = trajectory
        super().__init__(
            f"integration diverged at t = {time:.6g} (total intensity {total_intensity:.6g})"
        )
