"""Interval exchange transformations on [0, |lambda|).

An IET is a pair ``(perm, lengths)``: the unit (or sub-) interval is cut
into ``d`` half-open pieces, one per letter, laid out in the order given
by ``pi0`` and reassembled in the order given by ``pi1``.  Everything is
half-open ``[l, r)`` and maps are right-continuous, so ``apply`` is total
on ``[0, total)``.

Two scalar modes are supported and never mixed inside one object:

* ``rational`` -- ``fractions.Fraction`` entries, all predicates exact;
* ``float`` -- ``float`` entries, predicates up to documented tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .errors import (
    FloatModeUnsupported,
    ModeMismatch,
    NonPositiveLength,
    NotBijective,
    OutOfDomain,
    ReduciblePermutation,
)

Scalar = Union[Fraction, float]

RATIONAL = "rational"
FLOAT = "float"

#: |sum(lengths) - 1| tolerance below which a float IET counts as normalized
FLOAT_NORMALIZATION_TOL = 1e-12

#: default denominator scale for rational sampling
DEFAULT_SAMPLE_DENOMINATOR = 10**12


def letter_names(d: int) -> list[str]:
    """Display names A, B, C, ... for letters 0..d-1."""
    return [chr(ord("A") + i) for i in range(d)]


def as_fraction(x) -> Fraction:
    """Parse a scalar into an exact Fraction; accepts 'num/den' strings."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational scalar")


def format_scalar(x, mode: str):
    """JSON-friendly form: 'num/den' strings in rational mode, floats otherwise."""
    if mode == RATIONAL:
        f = as_fraction(x)
        if f.denominator == 1:
            return str(f.numerator)
        return f"{f.numerator}/{f.denominator}"
    return float(x)


def coerce_lengths(lengths: Sequence, mode: str) -> tuple:
    if mode == RATIONAL:
        return tuple(as_fraction(x) for x in lengths)
    if mode == FLOAT:
        return tuple(float(x) for x in lengths)
    raise ModeMismatch("unknown scalar mode", mode=mode)


@dataclass(frozen=True)
class Permutation:
    """Pair of bijections letter -> position (0-based internally).

    ``pi0[a]`` is the slot of letter ``a`` before the exchange, ``pi1[a]``
    after it.  Irreducibility: no proper prefix of slots {0..k} is mapped
    onto itself, i.e. the exchange does not split into two smaller ones.
    """

    pi0: tuple
    pi1: tuple

    def __post_init__(self):
        d = len(self.pi0)
        if d < 2:
            raise NotBijective("need at least two letters", d=d)
        for name, pi in (("pi0", self.pi0), ("pi1", self.pi1)):
            if sorted(pi) != list(range(d)):
                raise NotBijective(f"{name} is not a bijection onto 0..d-1", got=pi)
        object.__setattr__(self, "pi0", tuple(int(v) for v in self.pi0))
        object.__setattr__(self, "pi1", tuple(int(v) for v in self.pi1))

    @property
    def d(self) -> int:
        return len(self.pi0)

    def order0(self) -> tuple:
        """Letters sorted by their slot before the exchange."""
        inv = [0] * self.d
        for letter, pos in enumerate(self.pi0):
            inv[pos] = letter
        return tuple(inv)

    def order1(self) -> tuple:
        """Letters sorted by their slot after the exchange."""
        inv = [0] * self.d
        for letter, pos in enumerate(self.pi1):
            inv[pos] = letter
        return tuple(inv)

    def is_irreducible(self) -> bool:
        seen = set()
        order0, pi1 = self.order0(), self.pi1
        for k in range(self.d - 1):
            seen.add(pi1[order0[k]])
            if seen == set(range(k + 1)):
                return False
        return True

    def check_irreducible(self):
        if not self.is_irreducible():
            raise ReduciblePermutation(
                "a prefix of slots is invariant", pi0=self.pi0, pi1=self.pi1
            )

    @classmethod
    def from_orders(cls, top: Sequence[int], bottom: Sequence[int]) -> "Permutation":
        """Build from the two letter orderings (domain order, image order)."""
        d = len(top)
        pi0, pi1 = [0] * d, [0] * d
        for pos, letter in enumerate(top):
            pi0[letter] = pos
        for pos, letter in enumerate(bottom):
            pi1[letter] = pos
        return cls(tuple(pi0), tuple(pi1))

    @classmethod
    def symmetric(cls, d: int) -> "Permutation":
        """Letters kept in order on top, fully reversed on the bottom."""
        return cls(tuple(range(d)), tuple(range(d - 1, -1, -1)))

    def to_json(self) -> dict:
        # serialized ranks are 1-based
        return {
            "d": self.d,
            "pi0": [p + 1 for p in self.pi0],
            "pi1": [p + 1 for p in self.pi1],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Permutation":
        return cls(
            tuple(int(p) - 1 for p in obj["pi0"]),
            tuple(int(p) - 1 for p in obj["pi1"]),
        )

    def __str__(self):
        names = letter_names(self.d)
        top = " ".join(names[a] for a in self.order0())
        bot = " ".join(names[a] for a in self.order1())
        return f"({top} | {bot})"


@dataclass(frozen=True)
class Iet:
    """Interval exchange ``T = (perm, lengths)`` on ``[0, total)``."""

    perm: Permutation
    lengths: tuple
    mode: str

    def __post_init__(self):
        if len(self.lengths) != self.perm.d:
            raise NotBijective(
                "length vector does not match alphabet",
                d=self.perm.d,
                n_lengths=len(self.lengths),
            )
        zero = Fraction(0) if self.mode == RATIONAL else 0.0
        for a, l in enumerate(self.lengths):
            if not l > zero:
                raise NonPositiveLength("lengths must be strictly positive", letter=a, value=l)

    @property
    def d(self) -> int:
        return self.perm.d

    @property
    def total(self) -> Scalar:
        return sum(self.lengths)

    @property
    def normalized(self) -> bool:
        if self.mode == RATIONAL:
            return self.total == 1
        return abs(self.total - 1.0) <= FLOAT_NORMALIZATION_TOL

    # -- geometry ---------------------------------------------------------

    def breakpoints(self) -> list:
        """Domain cut points 0 = b_0 < b_1 < ... < b_d = total."""
        pts = [Fraction(0) if self.mode == RATIONAL else 0.0]
        for letter in self.perm.order0():
            pts.append(pts[-1] + self.lengths[letter])
        return pts

    def image_breakpoints(self) -> list:
        pts = [Fraction(0) if self.mode == RATIONAL else 0.0]
        for letter in self.perm.order1():
            pts.append(pts[-1] + self.lengths[letter])
        return pts

    def discontinuities(self) -> list:
        """The d-1 interior domain cut points."""
        return self.breakpoints()[1:-1]

    def offsets(self) -> list:
        """Translation applied on each letter's interval: T(x) = x + offset[a]."""
        starts0, starts1 = {}, {}
        pos = Fraction(0) if self.mode == RATIONAL else 0.0
        for letter in self.perm.order0():
            starts0[letter] = pos
            pos = pos + self.lengths[letter]
        pos = Fraction(0) if self.mode == RATIONAL else 0.0
        for letter in self.perm.order1():
            starts1[letter] = pos
            pos = pos + self.lengths[letter]
        return [starts1[a] - starts0[a] for a in range(self.d)]

    def letter_at(self, x) -> int:
        """Letter whose half-open interval contains x."""
        if not (0 <= x < self.total):
            raise OutOfDomain("point outside [0, total)", x=x, total=self.total)
        pts = self.breakpoints()
        for k, letter in enumerate(self.perm.order0()):
            if x < pts[k + 1]:
                return letter
        # x < total guarantees we never fall through except for float fuzz
        return self.perm.order0()[-1]

    def apply(self, x) -> Scalar:
        return x + self.offsets()[self.letter_at(x)]

    def inverse(self) -> "Iet":
        """The inverse exchange: swap the two orderings."""
        return Iet(Permutation(self.perm.pi1, self.perm.pi0), self.lengths, self.mode)

    def apply_inverse(self, x) -> Scalar:
        return self.inverse().apply(x)

    def orbit(self, x, n: int):
        """Yield x, T(x), ..., T^{n-1}(x)."""
        for _ in range(n):
            yield x
            x = self.apply(x)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        obj = self.perm.to_json()
        obj["lambda"] = [format_scalar(l, self.mode) for l in self.lengths]
        obj["mode"] = self.mode
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Iet":
        perm = Permutation.from_json(obj)
        mode = obj.get("mode", RATIONAL)
        return new_iet(perm, coerce_lengths(obj["lambda"], mode), mode)

    def __str__(self):
        vals = ", ".join(str(format_scalar(l, self.mode)) for l in self.lengths)
        return f"Iet{self.perm} lambda=({vals})"


def new_iet(perm, lengths: Sequence, mode: str = None) -> Iet:
    """Validated constructor: positive lengths, bijective, irreducible.

    ``perm`` may be a Permutation or a pair of 1-based rank rows, e.g.
    ``[[1, 2], [2, 1]]``.
    """
    if not isinstance(perm, Permutation):
        top, bottom = perm
        perm = Permutation(tuple(r - 1 for r in top), tuple(r - 1 for r in bottom))
    if mode is None:
        mode = RATIONAL if all(isinstance(x, (Fraction, int, str)) for x in lengths) else FLOAT
    perm.check_irreducible()
    return Iet(perm, coerce_lengths(lengths, mode), mode)


# -- Keane condition -------------------------------------------------------


@dataclass(frozen=True)
class KeaneReport:
    """Outcome of a finite-horizon orbit scan of the discontinuities.

    ``connection`` is None when no forward orbit of a discontinuity hits
    another one within the horizon (the only tolerated coincidence being
    the one-step hit of 0).  Otherwise it is ``(n, a, b)`` with
    ``T^n(a) = b``.
    """

    horizon: int
    connection: tuple | None

    @property
    def ok(self) -> bool:
        return self.connection is None


def keane_check(iet: Iet, horizon: int) -> KeaneReport:
    """Scan forward orbits of the discontinuities for connections.

    Exact arithmetic only: in float mode equality of orbit points is not
    decidable, so the check refuses to guess.
    """
    if iet.mode != RATIONAL:
        raise FloatModeUnsupported("keane_check needs exact arithmetic", mode=iet.mode)
    discs = iet.discontinuities()
    targets = set(discs)
    zero = Fraction(0)
    for a in discs:
        y = a
        for n in range(1, horizon + 1):
            y = iet.apply(y)
            if y == zero and n == 1:
                continue  # the tolerated connection: T(a) = 0 at the first step
            if y in targets or y == zero:
                return KeaneReport(horizon, (n, a, y))
    return KeaneReport(horizon, None)


def rationally_independent_check(iet: Iet) -> bool:
    """Sufficient condition for Keane: no nontrivial integer relation among
    lengths found by LLL-free small search; exact mode only.  Rational
    lengths are always dependent, so this returns False for them; it exists
    for callers probing float inputs promoted to rationals."""
    if iet.mode != RATIONAL:
        raise FloatModeUnsupported("needs exact arithmetic", mode=iet.mode)
    return False


# -- sampling --------------------------------------------------------------


def sample_permutation(d: int, rng: np.random.Generator) -> Permutation:
    """Uniform irreducible permutation pair with pi0 = identity.

    Keeping pi0 fixed loses no generality for sampling exchange classes
    and makes fixtures easier to read.
    """
    while True:
        bottom = list(rng.permutation(d))
        perm = Permutation(tuple(range(d)), tuple(int(bottom.index(a)) for a in range(d)))
        if perm.is_irreducible():
            return perm


def sample_iet(
    d: int,
    seed: int,
    mode: str = FLOAT,
    denominator: int = DEFAULT_SAMPLE_DENOMINATOR,
    perm: Permutation = None,
) -> Iet:
    """Seeded random normalized IET.

    Lengths are uniform on the simplex via sorted-uniform gaps; in rational
    mode the cuts are distinct uniform integers over ``denominator`` so the
    vector sums to 1 exactly.
    """
    rng = np.random.default_rng(seed)
    if perm is None:
        perm = sample_permutation(d, rng)
    if mode == RATIONAL:
        while True:
            cuts = sorted(int(c) for c in rng.integers(1, denominator, size=d - 1))
            cuts = [0] + cuts + [denominator]
            nums = [cuts[i + 1] - cuts[i] for i in range(d)]
            if all(n > 0 for n in nums):
                break
        lengths = [Fraction(n, denominator) for n in nums]
    elif mode == FLOAT:
        cuts = np.sort(rng.random(d - 1))
        cuts = np.concatenate([[0.0], cuts, [1.0]])
        lengths = list(np.diff(cuts))
    else:
        raise ModeMismatch("unknown scalar mode", mode=mode)
    return new_iet(perm, lengths, mode)


def golden_iet(mode: str = FLOAT, depth: int = 1200) -> Iet:
    """The 2-letter exchange with lengths (phi - 1, 2 - phi).

    In rational mode this returns the Fibonacci continued-fraction
    truncation of the same point: lengths (F(depth+1), F(depth)) scaled to
    sum 1.  Its renormalization orbit agrees with the quadratic fixed point
    for ``depth - 1`` steps, which is what exact fixtures need.
    """
    perm = Permutation.symmetric(2)
    if mode == FLOAT:
        phi = (1 + 5**0.5) / 2
        return new_iet(perm, [phi - 1, 2 - phi], FLOAT)
    a, b = 1, 1
    for _ in range(depth - 1):
        a, b = a + b, a
    # now a = F(depth+1), b = F(depth)
    return new_iet(perm, [Fraction(a, a + b), Fraction(b, a + b)], RATIONAL)
