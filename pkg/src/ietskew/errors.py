"""Error types with machine-readable codes.

Every failure mode that callers are expected to branch on gets its own
exception class; ``code`` is stable across releases and is what the CLI
prints, so scripts can match on it instead of parsing messages.
"""

from __future__ import annotations


class IetSkewError(Exception):
    """Base class; ``code`` is the machine-readable identifier."""

    code = "IetSkewError"

    def __init__(self, message: str = "", **details):
        self.details = details
        if details and message:
            message = f"{message} ({', '.join(f'{k}={v}' for k, v in details.items())})"
        elif details:
            message = ", ".join(f"{k}={v}" for k, v in details.items())
        super().__init__(message)


class NonPositiveLength(IetSkewError):
    code = "NonPositiveLength"


class NotBijective(IetSkewError):
    code = "NotBijective"


class ReduciblePermutation(IetSkewError):
    code = "ReduciblePermutation"


class OutOfDomain(IetSkewError):
    code = "OutOfDomain"


class FloatModeUnsupported(IetSkewError):
    code = "FloatModeUnsupported"


class ModeMismatch(IetSkewError):
    code = "ModeMismatch"


class DegenerateLengths(IetSkewError):
    code = "DegenerateLengths"


class KappaCapExceeded(IetSkewError):
    code = "KappaCapExceeded"


class BrokenChain(IetSkewError):
    code = "BrokenChain"


class NotFoundWithinBudget(IetSkewError):
    code = "NotFoundWithinBudget"


class PreconditionU(IetSkewError):
    code = "PreconditionU"


class PreconditionD(IetSkewError):
    """Raised when a recurrence/good-return search is asked for a sum bound
    D that is not strictly larger than m*M (the a-priori one-step bound)."""

    code = "PreconditionD"


class ZetaTooLarge(IetSkewError):
    code = "ZetaTooLarge"


class BinMismatch(IetSkewError):
    code = "BinMismatch"


class ValueBoundExceeded(IetSkewError):
    code = "ValueBoundExceeded"


class RejectionBudgetExceeded(IetSkewError):
    code = "RejectionBudgetExceeded"


class CapExceeded(IetSkewError):
    code = "CapExceeded"


class NonConvergence(IetSkewError):
    code = "NonConvergence"


class NoReturnsWithinBudget(IetSkewError):
    code = "NoReturnsWithinBudget"


class SpectralGapViolated(IetSkewError):
    code = "SpectralGapViolated"


class BadConfig(IetSkewError):
    code = "BadConfig"
