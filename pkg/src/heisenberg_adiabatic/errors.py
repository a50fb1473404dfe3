"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SpinNetworkError(ValueError):
    """Base class for all malformed-input and protocol errors raised here."""


class NotBipartite(SpinNetworkError):
    """The network contains an odd cycle."""


class UnknownEdge(SpinNetworkError, KeyError):
    """A coupling was given for a pair of sites that share no edge."""


class EmptySector(SpinNetworkError):
    """No product configuration has the requested total magnetization."""


class ConvergenceFailure(RuntimeError):
    """An iterative solver or the step-doubling propagator ran out of budget."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class AmbiguousLabel(RuntimeError):
    """An eigenvector is not a total-spin eigenstate within tolerance."""


class DegenerateGround(RuntimeError):
    """The ground state of the requested fixed-(s, m) sector is not unique."""

    def __init__(self, message: str, gap: float | None = None):
        super().__init__(message)
        self.gap = gap


class ScheduleError(SpinNetworkError):
    """Invalid schedule parameters (non-positive duration, negative profile, ...)."""


class OverlappingEdge(ScheduleError):
    """An edge touches both parties whose couplings are ramped in opposite directions."""


class OddLengthChain(ScheduleError):
    """Singlet-pair initialization needs a path with an even number of sites."""


class DimensionMismatch(SpinNetworkError):
    """A local state does not match the local Hilbert dimension of its site."""


class UnequalSpins(SpinNetworkError):
    """A two-site singlet was requested for sites carrying different spins."""
