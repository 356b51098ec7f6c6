"""Exception types shared across the toolkit.

Every error that can escape the library maps onto one of the CLI exit
codes: 2 for invalid inputs or domain violations, 3 for solver
nonconvergence, 4 for sampler designs that cannot be realized.
"""


class SampcapError(Exception):
    exit_code = 1


class ValidationError(SampcapError):
    """Malformed document or inconsistent constructed object."""

    exit_code = 2


class DomainError(SampcapError):
    """Operation invoked outside its stated domain."""

    exit_code = 2


class NoUsableSpectrumError(DomainError):
    """Positive power budget but zero SNR everywhere on the target set."""


class AliasWindowError(ValidationError):
    """Alias truncation would drop non-negligible spectral content."""


class DegenerateSamplerError(ValidationError):
    """Sampler response is identically zero across the analysis window."""


class ConvergenceError(SampcapError):
    """Iterative solver exhausted its iteration cap without converging."""

    exit_code = 3


class InfeasibleDesignError(SampcapError):
    """Requested sampling-system design cannot be realized."""

    exit_code = 4
