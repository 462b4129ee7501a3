"""Exception types shared across the package."""


class OpucError(Exception):
    """Base class for all errors raised by opuc_spectra."""


class ConfigurationError(OpucError, ValueError):
    """Invalid sequence or experiment configuration."""


class DomainError(OpucError, ValueError):
    """Argument outside the domain of an operation (e.g. |z| >= 1 for a Schur function)."""


class BranchError(OpucError):
    """Discontinuity along a sampled path while tracking a square-root branch."""


class OutOfBandError(OpucError, ValueError):
    """|Delta| >= 2 where a strictly in-band value is required."""


class DegenerateResult(OpucError):
    """A closed-gap or tangential configuration where no unique answer exists."""


class RegionError(OpucError):
    """An arc/window pair fails the sign and margin conditions needed for diagonalization."""


class DiagnosticError(OpucError):
    """A hard runtime check failed (indicates a bug or an invalid region)."""


class NumericInstability(OpucError):
    """Double precision is insufficient for the requested computation."""


class BudgetError(OpucError):
    """A search did not succeed within its exploration budget."""
