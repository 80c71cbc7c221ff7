"""Mean-zero step functions and the skew products they drive.

A step cocycle is a piecewise-constant, right-continuous function on
[0, 1) with m+1 segments: positive segment lengths summing to 1, values
orthogonal to the lengths (so the integral vanishes) and bounded by M in
absolute value.  The skew product over an exchange T acts on the strip
[0,1) x R by (x, t) -> (T x, t + f(x)).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    BadConfig,
    CapExceeded,
    ModeMismatch,
    NonPositiveLength,
    OutOfDomain,
    RejectionBudgetExceeded,
    ValueBoundExceeded,
    ZetaTooLarge,
)
from .iet_core import (
    DEFAULT_SAMPLE_DENOMINATOR,
    FLOAT,
    RATIONAL,
    Iet,
    as_fraction,
    format_scalar,
)

#: tolerances for float-mode constructor checks
FLOAT_SUM_TOL = 1e-12
FLOAT_MEAN_TOL = 1e-9

#: continued-fraction depth from which a float ratio counts as irrational
CF_IRRATIONAL_DEPTH = 20
#: a partial quotient this large reads as "the expansion terminated"
CF_HUGE_QUOTIENT = 10**8


@dataclass(frozen=True)
class StepCocycle:
    """f = sum_i values[i] * indicator(segment i), segments in domain order."""

    lengths: tuple
    values: tuple
    bound_M: object
    mode: str

    def __post_init__(self):
        if len(self.lengths) != len(self.values):
            raise ModeMismatch(
                "lengths/values size mismatch",
                n_lengths=len(self.lengths),
                n_values=len(self.values),
            )
        zero = Fraction(0) if self.mode == RATIONAL else 0.0
        for l in self.lengths:
            if not l > zero:
                raise NonPositiveLength("segment lengths must be positive", value=l)
        total = sum(self.lengths)
        mean = sum(l * v for l, v in zip(self.lengths, self.values))
        big = max(abs(v) for v in self.values)
        if self.mode == RATIONAL:
            if total != 1:
                raise ModeMismatch("segment lengths must sum to 1", total=total)
            if mean != 0:
                raise ModeMismatch("cocycle must have exact zero mean", mean=mean)
            if big > self.bound_M:
                raise ValueBoundExceeded("values exceed M", max_abs=big, M=self.bound_M)
        else:
            if abs(total - 1.0) > FLOAT_SUM_TOL:
                raise ModeMismatch("segment lengths must sum to 1", total=total)
            if abs(mean) > FLOAT_MEAN_TOL:
                raise ModeMismatch("cocycle mean too far from zero", mean=mean)
            if big > self.bound_M * (1 + 1e-12):
                raise ValueBoundExceeded("values exceed M", max_abs=big, M=self.bound_M)

    @property
    def m(self) -> int:
        """Number of interior discontinuities."""
        return len(self.lengths) - 1

    def breakpoints(self) -> list:
        pts = [Fraction(0) if self.mode == RATIONAL else 0.0]
        for l in self.lengths:
            pts.append(pts[-1] + l)
        return pts

    def segment_at(self, x) -> int:
        if not (0 <= x < 1):
            raise OutOfDomain("cocycle argument outside [0,1)", x=x)
        pts = self.breakpoints()
        for k in range(len(self.lengths)):
            if x < pts[k + 1]:
                return k
        return len(self.lengths) - 1

    def __call__(self, x):
        return self.values[self.segment_at(x)]

    def min_segment(self):
        return min(self.lengths)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "lengths": [format_scalar(l, self.mode) for l in self.lengths],
            "values": [format_scalar(v, self.mode) for v in self.values],
            "M": format_scalar(self.bound_M, self.mode),
            "mode": self.mode,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "StepCocycle":
        mode = obj.get("mode", RATIONAL)
        conv = as_fraction if mode == RATIONAL else float
        return cls(
            tuple(conv(x) for x in obj["lengths"]),
            tuple(conv(x) for x in obj["values"]),
            conv(obj["M"]),
            mode,
        )


def new_cocycle(lengths, values, bound_M, mode: str = None) -> StepCocycle:
    if mode is None:
        mode = (
            RATIONAL
            if all(isinstance(x, (Fraction, int, str)) for x in list(lengths) + list(values))
            else FLOAT
        )
    conv = as_fraction if mode == RATIONAL else float
    return StepCocycle(
        tuple(conv(x) for x in lengths),
        tuple(conv(x) for x in values),
        conv(bound_M),
        mode,
    )


def eval_cocycle(f: StepCocycle, x):
    return f(x)


# ---------------------------------------------------------------------------
# jumps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Jumps:
    """Value jumps across the interior discontinuities.

    ``dense_subgroup`` reports whether the jumps plausibly generate a dense
    subgroup of R.  Rational jumps always generate a discrete subgroup, so
    the flag is exactly False in rational mode; in float mode it is a
    continued-fraction heuristic: some ratio of nonzero jumps keeps
    producing moderate partial quotients for CF_IRRATIONAL_DEPTH terms.
    """

    sigma: tuple
    dense_subgroup: bool
    heuristic_depth: int


def _cf_depth(r: float, max_terms: int = CF_IRRATIONAL_DEPTH) -> int:
    """Terms of the continued fraction of r before a huge quotient appears."""
    x = abs(r)
    for k in range(max_terms):
        a = np.floor(x)
        frac = x - a
        if frac < 1.0 / CF_HUGE_QUOTIENT:
            return k
        x = 1.0 / frac
    return max_terms


def jumps(f: StepCocycle) -> Jumps:
    sigma = tuple(f.values[i + 1] - f.values[i] for i in range(f.m))
    nonzero = [s for s in sigma if s != 0]
    if f.mode == RATIONAL or len(nonzero) < 2:
        return Jumps(sigma, False, 0)
    best = 0
    for i in range(len(nonzero)):
        for j in range(i + 1, len(nonzero)):
            best = max(best, _cf_depth(float(nonzero[i]) / float(nonzero[j])))
    return Jumps(sigma, best >= CF_IRRATIONAL_DEPTH, best)


# ---------------------------------------------------------------------------
# Birkhoff sums and the skew product
# ---------------------------------------------------------------------------


def birkhoff_sum(iet: Iet, f: StepCocycle, x, n: int):
    """S_n f(x): forward sum for n >= 1, 0 for n = 0, and the cocycle
    extension -sum_{i=n}^{-1} f(T^i x) for negative n."""
    if n == 0:
        return Fraction(0) if f.mode == RATIONAL else 0.0
    total = Fraction(0) if f.mode == RATIONAL else 0.0
    if n > 0:
        y = x
        for _ in range(n):
            total += f(y)
            y = iet.apply(y)
        return total
    y = x
    for _ in range(-n):
        y = iet.apply_inverse(y)
        total += f(y)
    return -total


@dataclass(frozen=True)
class StripPoint:
    x: object
    t: object

    def as_tuple(self):
        return (self.x, self.t)


def skew_apply(iet: Iet, f: StepCocycle, point: StripPoint, n: int = 1) -> StripPoint:
    """n-fold skew product: (x, t) -> (T^n x, t + S_n f(x))."""
    y = point.x
    if n >= 0:
        return StripPoint(_iterate(iet, y, n), point.t + birkhoff_sum(iet, f, y, n))
    return StripPoint(_iterate(iet, y, n), point.t + birkhoff_sum(iet, f, y, n))


def _iterate(iet: Iet, x, n: int):
    if n >= 0:
        for _ in range(n):
            x = iet.apply(x)
    else:
        for _ in range(-n):
            x = iet.apply_inverse(x)
    return x


# ---------------------------------------------------------------------------
# nudging
# ---------------------------------------------------------------------------


def nudge(f: StepCocycle, i: int, zeta) -> StepCocycle:
    """Move the i-th discontinuity (0-based, between segments i and i+1)
    by zeta, compensating the value of segment i+1 so the mean stays at
    exactly zero.  Only segment i+1's value moves, so only the jumps at
    i and (when present) i+1 change.

    Requires |zeta| < min_segment/2; a compensated value escaping [-M, M]
    raises ValueBoundExceeded rather than clamping.
    """
    if not 0 <= i < f.m:
        raise OutOfDomain("discontinuity index out of range", i=i, m=f.m)
    gamma = f.min_segment()
    if not abs(zeta) * 2 < gamma:
        raise ZetaTooLarge("|zeta| must be < half the shortest segment", zeta=zeta, gamma=gamma)
    lengths = list(f.lengths)
    values = list(f.values)
    new_value = (values[i + 1] * lengths[i + 1] - zeta * values[i]) / (lengths[i + 1] - zeta)
    lengths[i] = lengths[i] + zeta
    lengths[i + 1] = lengths[i + 1] - zeta
    values[i + 1] = new_value
    if abs(new_value) > f.bound_M:
        raise ValueBoundExceeded(
            "compensated value escapes the bound", value=new_value, M=f.bound_M
        )
    return StepCocycle(tuple(lengths), tuple(values), f.bound_M, f.mode)


def cocycle_distance(f: StepCocycle, g: StepCocycle):
    """sup-metric on the parameter vector (lengths, values)."""
    if f.m != g.m:
        raise ModeMismatch("cocycles have different segment counts", m1=f.m, m2=g.m)
    dl = max(abs(a - b) for a, b in zip(f.lengths, g.lengths))
    dv = max(abs(a - b) for a, b in zip(f.values, g.values))
    return max(dl, dv)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_cocycle(
    m: int,
    M,
    seed: int,
    mode: str = FLOAT,
    denominator: int = DEFAULT_SAMPLE_DENOMINATOR,
    max_rejections: int = 1000,
) -> StepCocycle:
    """Seeded random element of C_{m,M}.

    Lengths are simplex-uniform; values are uniform in [-M, M]^{m+1} then
    orthogonally projected (along the length-weighted direction) onto the
    zero-mean hyperplane, rejecting draws whose projection escapes the
    sup bound.
    """
    rng = np.random.default_rng(seed)
    if mode == RATIONAL:
        Mf = as_fraction(M)
        while True:
            cuts = sorted(int(c) for c in rng.integers(1, denominator, size=m))
            cuts = [0] + cuts + [denominator]
            nums = [cuts[k + 1] - cuts[k] for k in range(m + 1)]
            if all(x > 0 for x in nums):
                break
        lengths = tuple(Fraction(x, denominator) for x in nums)
        vq = 10**6
        for _ in range(max_rejections):
            raw = [Fraction(int(v), vq) * Mf for v in rng.integers(-vq, vq + 1, size=m + 1)]
            dot = sum(l * v for l, v in zip(lengths, raw))
            nrm = sum(l * l for l in lengths)
            vals = tuple(v - dot * l / nrm for v, l in zip(raw, lengths))
            if max(abs(v) for v in vals) <= Mf:
                return StepCocycle(lengths, vals, Mf, RATIONAL)
        raise RejectionBudgetExceeded("projection kept escaping the bound", budget=max_rejections)
    cuts = np.sort(rng.random(m))
    lengths = tuple(np.diff(np.concatenate([[0.0], cuts, [1.0]])))
    p = np.array(lengths)
    for _ in range(max_rejections):
        raw = rng.uniform(-float(M), float(M), size=m + 1)
        vals = raw - (p @ raw) / (p @ p) * p
        if np.max(np.abs(vals)) <= float(M):
            vals = vals - float(np.dot(p, vals))  # kill residual rounding in the mean
            return StepCocycle(lengths, tuple(float(v) for v in vals), float(M), FLOAT)
    raise RejectionBudgetExceeded("projection kept escaping the bound", budget=max_rejections)


# ---------------------------------------------------------------------------
# strip first return
# ---------------------------------------------------------------------------


def strip_first_return(
    iet: Iet, f: StepCocycle, point: StripPoint, N, cap: int = 10**7
):
    """First k >= 1 with |t + S_k f(x)| <= N; returns (StripPoint, k).

    Reference implementation (exact in rational mode); long float scans
    should go through the kernels instead.
    """
    x, t = point.x, point.t
    for k in range(1, cap + 1):
        t = t + f(x)
        x = iet.apply(x)
        if abs(t) <= N:
            return StripPoint(x, t), k
    raise CapExceeded("no return to the band within cap", cap=cap, N=N)


# ---------------------------------------------------------------------------
# coboundaries
# ---------------------------------------------------------------------------


def indicator_coboundary(iet, c) -> StepCocycle:
    """The coboundary g(T(x)) - g(x) of the indicator g of [0, c).

    Its Birkhoff sums telescope to g(T^n x) - g(x), so every skew orbit
    stays in the band |t| <= 1: the canonical bounded fixture for the
    translation-invariance probe and the deviation scans.
    """
    total = iet.total
    c = as_fraction(c) if iet.mode == RATIONAL else float(c)
    if not 0 < c < total:
        raise BadConfig("indicator cut must be interior", c=c)
    cuts = set(iet.breakpoints()) | {c, iet.apply_inverse(c), iet.apply_inverse(0 * c)}
    pts = sorted(p for p in cuts if 0 <= p < total) + [total]
    lengths, values = [], []
    one = Fraction(1) if iet.mode == RATIONAL else 1.0
    for lo, hi in zip(pts, pts[1:]):
        mid = lo + (hi - lo) / 2
        v = (one if iet.apply(mid) < c else 0 * one) - (one if mid < c else 0 * one)
        if values and values[-1] == v:
            lengths[-1] = lengths[-1] + (hi - lo)
        else:
            lengths.append(hi - lo)
            values.append(v)
    return StepCocycle(tuple(lengths), tuple(values), one, iet.mode)
