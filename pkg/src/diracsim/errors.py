"""Exception and warning types shared across the package."""


class DiracSimError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DiracSimError):
    """A scenario configuration violates an invariant.

    Carries the offending field names so callers can report them
    without parsing the message.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class GridTooNarrow(DiracSimError):
    """Momentum grid does not contain the requested wavepacket."""


class NotProductState(DiracSimError):
    """State is not of the product form required by an analytic formula."""


class EdgeLeakage(DiracSimError):
    """Amplitude at a grid boundary is too large for a derivative or
    interpolation based operation to be trusted."""


class GridMismatch(DiracSimError):
    """Two phase-space grids that must be identical are not."""


class ZeroWeight(DiracSimError):
    """A weight-normalized quantity was requested from a zero-weight grid."""


class ZeroPopulation(DiracSimError):
    """Conditioning on an outcome whose population is numerically zero."""


class NormalizationError(DiracSimError):
    """A quasiprobability grid does not integrate to its declared weight."""


class TruncationError(DiracSimError):
    """Fock-space tail population exceeds the allowed bound."""


class PadInsufficient(DiracSimError):
    """Displaced-operator values are not stable against enlarging the
    Fock-space padding; results cannot be trusted at the requested
    tolerance."""


class StepFailure(DiracSimError):
    """The adaptive integrator could not meet its tolerance."""


class IllConditioned(DiracSimError):
    """A fit basis is numerically rank deficient."""

    def __init__(self, message, n_max=None, condition_number=None):
        super().__init__(message)
        self.n_max = n_max
        self.condition_number = condition_number


class TruncationWarning(UserWarning):
    """Tail population at the Fock cutoff exceeded its bound during a run."""


class NotConvergedWarning(UserWarning):
    """An iterative solver hit its iteration cap; best iterate returned."""
