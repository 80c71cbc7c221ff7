"""Interval exchanges, renormalization, and skew products over step cocycles."""

__version__ = "0.1.0"

from .errors import IetSkewError
from .iet_core import (
    FLOAT,
    RATIONAL,
    Iet,
    Permutation,
    golden_iet,
    new_iet,
    sample_iet,
)
from .cocycle import (
    StepCocycle,
    StripPoint,
    birkhoff_sum,
    indicator_coboundary,
    new_cocycle,
    nudge,
    sample_cocycle,
    skew_apply,
)

__all__ = [
    "__version__",
    "IetSkewError",
    "FLOAT",
    "RATIONAL",
    "Iet",
    "Permutation",
    "golden_iet",
    "new_iet",
    "sample_iet",
    "StepCocycle",
    "StripPoint",
    "birkhoff_sum",
    "indicator_coboundary",
    "new_cocycle",
    "nudge",
    "sample_cocycle",
    "skew_apply",
]
