"""Step cocycles: evaluation, Birkhoff algebra, nudges, skew orbits.

The load-bearing identities are exact in rational mode, so most tests
assert equality, not closeness.  The cocycle identity and the nudge
algebra run under hypothesis; everything else uses seeded loops.
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ietskew.cocycle import (
    StepCocycle,
    StripPoint,
    birkhoff_sum,
    cocycle_distance,
    indicator_coboundary,
    jumps,
    new_cocycle,
    nudge,
    sample_cocycle,
    skew_apply,
    strip_first_return,
)
from ietskew.errors import IetSkewError
from ietskew.iet_core import RATIONAL, Permutation, golden_iet, new_iet, sample_iet


def rotation(alpha) -> object:
    a = Fraction(alpha)
    return new_iet(Permutation.symmetric(2), (1 - a, a), RATIONAL)


@pytest.fixture(scope="module")
def T():
    return sample_iet(3, seed=21, mode=RATIONAL)


@pytest.fixture(scope="module")
def f():
    return sample_cocycle(3, 2, seed=21, mode=RATIONAL)


# === construction ===========================================================


def test_new_cocycle_validates_mean_zero():
    with pytest.raises(IetSkewError):
        new_cocycle((Fraction(1, 2), Fraction(1, 2)), (1, 1), 2)


def test_new_cocycle_validates_bound():
    with pytest.raises(IetSkewError):
        new_cocycle((Fraction(1, 2), Fraction(1, 2)), (3, -3), 2)


def test_sample_cocycle_exact_mean_zero_and_bounded():
    for seed in range(8):
        f = sample_cocycle(3, 2, seed=seed, mode=RATIONAL)
        assert sum(l * v for l, v in zip(f.lengths, f.values)) == 0
        assert all(abs(v) <= 2 for v in f.values)
        assert sum(f.lengths) == 1
        g = sample_cocycle(3, 2, seed=seed, mode=RATIONAL)
        assert f.lengths == g.lengths and f.values == g.values


def test_evaluation_is_right_continuous_steps():
    f = new_cocycle((Fraction(1, 2), Fraction(1, 2)), (1, -1), 1)
    assert f(Fraction(0)) == 1
    assert f(Fraction(1, 2)) == -1  # breakpoint belongs to the right piece
    assert f(Fraction(499, 1000)) == 1


# === Birkhoff algebra =======================================================


@given(
    n=st.integers(min_value=0, max_value=40),
    m=st.integers(min_value=0, max_value=40),
    xnum=st.integers(min_value=0, max_value=10**6),
)
@settings(max_examples=50, deadline=None)
def test_cocycle_identity_property(n, m, xnum):
    # S_{n+m}(x) = S_n(x) + S_m(T^n x), exactly
    T = sample_iet(3, seed=21, mode=RATIONAL)
    f = sample_cocycle(3, 2, seed=21, mode=RATIONAL)
    x = Fraction(xnum, 10**6 + 7)
    y = x
    for _ in range(n):
        y = T.apply(y)
    assert birkhoff_sum(T, f, x, n + m) == birkhoff_sum(T, f, x, n) + birkhoff_sum(T, f, y, m)


def test_negative_birkhoff_branch(T, f):
    # S_{-n}(x) = -S_n(T^{-n} x): summing backwards retraces the orbit
    x = Fraction(3, 11)
    for n in (1, 2, 7):
        y = x
        for _ in range(n):
            y = T.apply_inverse(y)
        assert birkhoff_sum(T, f, x, -n) == -birkhoff_sum(T, f, y, n)


def test_birkhoff_zero_steps_is_zero(T, f):
    assert birkhoff_sum(T, f, Fraction(1, 3), 0) == 0


def test_telescoping_coboundary_is_exact():
    T = golden_iet(mode=RATIONAL, depth=80)
    h = indicator_coboundary(T, Fraction(1, 2))
    cut = Fraction(1, 2)

    def g(x):
        return 1 if x < cut else 0

    x = Fraction(2, 7)
    y = x
    for n in range(1, 400):
        y = T.apply(y)
        assert birkhoff_sum(T, h, x, n) == g(y) - g(x)


def test_indicator_coboundary_rejects_boundary_cut():
    T = golden_iet(mode=RATIONAL, depth=80)
    with pytest.raises(IetSkewError) as err:
        indicator_coboundary(T, Fraction(0))
    assert err.value.code == "BadConfig"


# === nudge ==================================================================


@given(
    i=st.integers(min_value=0, max_value=2),
    znum=st.integers(min_value=-999, max_value=999),
)
@settings(max_examples=80, deadline=None)
def test_nudge_algebra_property(i, znum):
    f = sample_cocycle(3, 2, seed=21, mode=RATIONAL)
    gamma = f.min_segment()
    zeta = Fraction(znum, 1000) * gamma / 2  # |zeta| < gamma/2 strictly
    if zeta == 0:
        return
    try:
        g = nudge(f, i, zeta)
    except IetSkewError as err:
        assert err.code == "ValueBoundExceeded"
        return
    # exact zero mean survives
    assert sum(l * v for l, v in zip(g.lengths, g.values)) == 0
    # only segments i, i+1 move
    assert g.lengths[i] == f.lengths[i] + zeta
    assert g.lengths[i + 1] == f.lengths[i + 1] - zeta
    for k in range(f.m + 1):
        if k not in (i, i + 1):
            assert g.lengths[k] == f.lengths[k]
        if k != i + 1:
            assert g.values[k] == f.values[k]
    # the move is visible at full size in the sup metric
    assert abs(zeta) <= cocycle_distance(f, g)


def test_nudge_rejects_large_zeta(f):
    gamma = f.min_segment()
    with pytest.raises(IetSkewError) as err:
        nudge(f, 0, gamma / 2)
    assert err.value.code == "ZetaTooLarge"


def test_nudge_rejects_bad_index(f):
    with pytest.raises(IetSkewError) as err:
        nudge(f, f.m, Fraction(1, 10**6))
    assert err.value.code == "OutOfDomain"


# === jumps ==================================================================


def test_jumps_of_square_wave():
    f = new_cocycle((Fraction(1, 2), Fraction(1, 2)), (1, -1), 1)
    rep = jumps(f)
    # one interior discontinuity, jump -2 at 1/2; rational => discrete group
    assert rep.sigma == (-2,)
    assert rep.dense_subgroup is False


def test_jumps_of_coboundary_are_unit_size():
    T = golden_iet(mode=RATIONAL, depth=80)
    h = indicator_coboundary(T, Fraction(1, 2))
    assert all(abs(s) == 1 for s in jumps(h).sigma)


# === skew orbit =============================================================


def test_skew_apply_accumulates_birkhoff_sums(T, f):
    p = StripPoint(Fraction(1, 5), Fraction(0))
    q = p
    for n in range(1, 30):
        q = skew_apply(T, f, q)
        assert q.t == birkhoff_sum(T, f, p.x, n)
        y = p.x
        for _ in range(n):
            y = T.apply(y)
        assert q.x == y


def test_strip_first_return_band(T, f):
    p = StripPoint(Fraction(1, 5), Fraction(3, 2))
    q, k = strip_first_return(T, f, p, Fraction(1, 4))
    assert k >= 1
    assert abs(q.t) <= Fraction(1, 4)
    # it really is the first: the k-1 intermediate points stay outside
    r = p
    for _ in range(k - 1):
        r = skew_apply(T, f, r)
        assert abs(r.t) > Fraction(1, 4)
    assert skew_apply(T, f, r).t == q.t


def test_strip_first_return_cap(T, f):
    # start far out with a tight band and a tiny cap: no time to drift back
    with pytest.raises(IetSkewError) as err:
        strip_first_return(T, f, StripPoint(Fraction(1, 5), Fraction(100)), 1, cap=16)
    assert err.value.code == "CapExceeded"
