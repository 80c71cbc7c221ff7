"""Exchange construction, evaluation, and serialization.

Oracles here are hand-computable: rotations (d=2 exchanges are circle
rotations), explicit 3-letter examples, and the golden lengths.
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ietskew.errors import IetSkewError
from ietskew.iet_core import (
    FLOAT,
    RATIONAL,
    Iet,
    Permutation,
    as_fraction,
    format_scalar,
    golden_iet,
    keane_check,
    letter_names,
    new_iet,
    sample_iet,
)


def rotation(alpha) -> Iet:
    """x -> x + alpha mod 1 as a 2-exchange: lengths (1-alpha, alpha)."""
    a = Fraction(alpha)
    return new_iet(Permutation.symmetric(2), (1 - a, a), RATIONAL)


# === permutations ===========================================================


def test_symmetric_permutation_orders():
    p = Permutation.symmetric(3)
    assert p.order0() == (0, 1, 2)
    assert p.order1() == (2, 1, 0)
    assert p.d == 3


def test_from_orders_roundtrip():
    p = Permutation.from_orders((2, 0, 1), (1, 2, 0))
    assert p.order0() == (2, 0, 1)
    assert p.order1() == (1, 2, 0)


def test_reducible_permutation_rejected():
    # top and bottom agree on the prefix {A}: the exchange splits
    with pytest.raises(IetSkewError) as err:
        new_iet(Permutation((0, 1), (0, 1)), (Fraction(1, 2), Fraction(1, 2)))
    assert err.value.code == "ReduciblePermutation"


def test_permutation_json_is_one_based():
    p = Permutation.symmetric(2)
    obj = p.to_json()
    assert obj["pi0"] == [1, 2] and obj["pi1"] == [2, 1]
    assert Permutation.from_json(obj) == p


# === evaluation against the rotation oracle ================================


def test_rotation_apply_matches_arithmetic():
    T = rotation(Fraction(1, 4))
    for num in range(8):
        x = Fraction(num, 8)
        assert T.apply(x) == (x + Fraction(1, 4)) % 1


def test_rotation_orbit_and_inverse():
    T = rotation(Fraction(3, 10))
    x = Fraction(1, 7)
    orbit = list(T.orbit(x, 20))
    assert orbit[0] == x
    for a, b in zip(orbit, orbit[1:]):
        assert b == (a + Fraction(3, 10)) % 1
        assert T.apply_inverse(b) == a


def test_letter_at_breakpoints_half_open():
    # [0, 1/2) is A, [1/2, 1) is B: the breakpoint itself belongs right
    T = rotation(Fraction(1, 2))
    assert T.letter_at(Fraction(0)) == 0
    assert T.letter_at(Fraction(1, 2)) == 1
    assert T.letter_at(Fraction(499, 1000)) == 0


def test_three_letter_explicit_exchange():
    # lengths 1/2, 1/3, 1/6 with full reversal: blocks swap ends
    T = new_iet(
        Permutation.symmetric(3),
        (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)),
    )
    # C lands first: [5/6, 1) -> [0, 1/6), so T(x) = x - 5/6 there
    assert T.apply(Fraction(11, 12)) == Fraction(11, 12) - Fraction(5, 6)
    # A lands last: T(x) = x + 1/2 on [0, 1/2)
    assert T.apply(Fraction(1, 4)) == Fraction(3, 4)
    assert list(T.breakpoints()) == [0, Fraction(1, 2), Fraction(5, 6), 1]


@given(
    num=st.integers(min_value=0, max_value=10**6),
    alpha_num=st.integers(min_value=1, max_value=999),
)
@settings(max_examples=60, deadline=None)
def test_apply_inverse_roundtrip_property(num, alpha_num):
    T = rotation(Fraction(alpha_num, 1000))
    x = Fraction(num, 10**6 + 1)
    assert T.apply_inverse(T.apply(x)) == x
    assert T.apply(T.apply_inverse(x)) == x


def test_apply_preserves_lebesgue_on_pieces():
    # each letter interval maps by translation: lengths are preserved
    T = sample_iet(5, seed=3, mode=RATIONAL)
    pts = T.breakpoints()
    for k, letter in enumerate(T.perm.order0()):
        lo, hi = pts[k], pts[k + 1]
        assert T.apply(hi - Fraction(1, 10**9)) - T.apply(lo) == hi - lo - Fraction(1, 10**9)


# === scalars and serialization =============================================


def test_format_scalar_integers_print_bare():
    assert format_scalar(Fraction(2, 2), RATIONAL) == "1"
    assert format_scalar(Fraction(3, 10), RATIONAL) == "3/10"
    assert as_fraction("3/10") == Fraction(3, 10)


def test_json_roundtrip_exact():
    T = sample_iet(4, seed=9, mode=RATIONAL)
    U = Iet.from_json(T.to_json())
    assert U.perm == T.perm and U.lengths == T.lengths and U.mode == RATIONAL


def test_json_roundtrip_float():
    T = sample_iet(3, seed=2, mode=FLOAT)
    U = Iet.from_json(T.to_json())
    assert U.lengths == T.lengths and U.mode == FLOAT


def test_new_iet_accepts_rank_rows():
    T = new_iet([[1, 2], [2, 1]], (Fraction(1, 2), Fraction(1, 2)))
    assert T.perm == Permutation.symmetric(2)


def test_new_iet_rejects_nonpositive_length():
    with pytest.raises(IetSkewError):
        new_iet(Permutation.symmetric(2), (Fraction(1), Fraction(0)))


# === named inputs ===========================================================


def test_golden_lengths_float():
    T = golden_iet(mode=FLOAT)
    phi = (1 + 5**0.5) / 2
    assert abs(T.lengths[0] - (phi - 1)) < 1e-12
    assert abs(sum(T.lengths) - 1.0) < 1e-12


def test_golden_rational_is_fibonacci_ratio():
    T = golden_iet(mode=RATIONAL, depth=10)
    # lengths F(11)/F(12+...)... : consecutive Fibonacci over their sum
    a, b = T.lengths
    assert a + b == 1
    # the ratio b/a is a continued-fraction convergent of 1/phi's tail:
    # both are Fibonacci quotients, so a/b in lowest terms has Fibonacci parts
    fib = [1, 1]
    while fib[-1] < a.denominator:
        fib.append(fib[-1] + fib[-2])
    assert a.numerator in fib and b.numerator in fib


def test_sample_iet_deterministic_and_normalized():
    T1 = sample_iet(4, seed=5, mode=RATIONAL)
    T2 = sample_iet(4, seed=5, mode=RATIONAL)
    assert T1.lengths == T2.lengths and T1.perm == T2.perm
    assert sum(T1.lengths) == 1
    assert T1.normalized


def test_letter_names():
    assert letter_names(3) == ["A", "B", "C"]


# === Keane scan =============================================================


def test_keane_rational_rotation_has_connection():
    rep = keane_check(rotation(Fraction(1, 4)), horizon=16)
    assert not rep.ok
    n, a, b = rep.connection
    assert 1 <= n <= 16


def test_keane_golden_surrogate_clean_at_small_horizon():
    rep = keane_check(golden_iet(mode=RATIONAL, depth=80), horizon=64)
    assert rep.ok
