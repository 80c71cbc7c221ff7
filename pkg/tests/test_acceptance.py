"""Acceptance gate: ten criteria, one test each, one printed verdict each.

Every test both asserts (so the suite goes red on regression) and calls
``record_criterion`` (so the per-criterion PASS/FAIL lines appear in the
terminal summary).  Tolerances and sizes are stated inline next to each
check; frozen fixture numbers live in tests/fixtures/.
"""

import json
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import ietskew._linalg as la
from conftest import record_criterion
from ietskew.cocycle import (
    cocycle_distance,
    indicator_coboundary,
    jumps,
    new_cocycle,
    nudge,
    sample_cocycle,
)
from ietskew.ergolab import fiber_histograms, translation_invariance_probe
from ietskew.errors import (
    DegenerateLengths,
    KappaCapExceeded,
    PreconditionD,
    ValueBoundExceeded,
)
from ietskew.good_returns import (
    IntervalSet,
    balanced_times,
    good_return_search,
    verify_certificate,
)
from ietskew.iet_core import (
    FLOAT,
    RATIONAL,
    Permutation,
    golden_iet,
    new_iet,
    sample_iet,
)
from ietskew.renorm import (
    heights_bruteforce,
    rauzy_step,
    start_induction,
    zorich_step,
)
from ietskew.spectrum import (
    deviation_scan,
    lyapunov_exponents,
    renormalization_times,
)

FIXTURES = Path(__file__).parent / "fixtures"


# --- criteria 1 + 2 share the same twenty induction runs -------------------


def _twenty_rational_runs():
    """Five sampled rational exchanges per d in {2,3,4,5}, each carried
    through 8 plain induction steps.  Seeds are scanned upward from 0 and
    a seed is skipped only if its run hits an exact length tie (possible
    for d=2 with denominator-1e12 lengths); the selection rule is
    deterministic, so the twenty runs are a fixed fixture set."""
    runs = []
    for d in (2, 3, 4, 5):
        seed, found = 0, 0
        while found < 5:
            T = sample_iet(d, seed, mode=RATIONAL)
            try:
                state = start_induction(T)
                states = []
                for _ in range(8):
                    state = rauzy_step(state)
                    states.append(state)
            except DegenerateLengths:
                seed += 1
                continue
            runs.append((d, seed, T, states))
            found += 1
            seed += 1
    return runs


@pytest.fixture(scope="module")
def twenty_runs():
    t0 = time.perf_counter()
    runs = _twenty_rational_runs()
    return runs, time.perf_counter() - t0


def test_criterion_1_heights_equal_bruteforce_return_times(twenty_runs):
    runs, build_s = twenty_runs
    t0 = time.perf_counter()
    checked = 0
    for d, seed, T, states in runs:
        for state in states:
            cur = state.current
            times = heights_bruteforce(T, 0, cur.total)
            assert list(times) == [state.q[a] for a in cur.perm.order0()]
            checked += 1
    elapsed = build_s + (time.perf_counter() - t0)
    ok = checked == 20 * 8 and elapsed < 60.0
    record_criterion(
        1,
        ok,
        f"matrix heights == brute-force return times at all {checked} steps "
        f"of 20 rational IETs (d=2..5, 8 steps each); {elapsed:.1f}s < 60s",
    )
    assert ok


def test_criterion_2_length_recursion_and_tower_area(twenty_runs):
    runs, _ = twenty_runs
    checked = 0
    for d, seed, T, states in runs:
        for state in states:
            cur = state.current
            # lambda = A_gamma lambda_n and lambda_n = A_n lambda, exactly
            assert la.mat_vec(state.A_n, T.lengths) == cur.lengths
            assert la.mat_vec(state.A_gamma, cur.lengths) == T.lengths
            # towers tile the interval: sum lambda_n_a * q_a == |I|
            assert sum(l * q for l, q in zip(cur.lengths, state.q)) == T.total
            checked += 1
    ok = checked == 20 * 8
    record_criterion(
        2,
        ok,
        f"exact length recursion and unit tower area at all {checked} steps "
        "(rational arithmetic, zero tolerance)",
    )
    assert ok


# --- criterion 3: the golden fixture ----------------------------------------


def test_criterion_3_golden_acceleration_fixture(golden1200):
    state = start_induction(golden1200)
    for _ in range(1000):
        state = zorich_step(state)
    kappas = [b.kappa for b in state.zorich_steps]
    arrows = str(state.path)
    alternating = all(x != y for x, y in zip(arrows, arrows[1:]))
    ok_rational = kappas == [1] * 1000 and alternating

    # float orbit against the exact continued-fraction surrogate
    fstate = start_induction(golden_iet(mode=FLOAT))
    rstate = start_induction(golden1200)
    agree = 0
    for _ in range(30):
        fstate = zorich_step(fstate)
        rstate = zorich_step(rstate)
        fb, rb = fstate.zorich_steps[-1], rstate.zorich_steps[-1]
        if fb.kappa == rb.kappa and fb.B == rb.B:
            agree += 1
    ok = ok_rational and agree == 30
    record_criterion(
        3,
        ok,
        "golden: kappa == 1 with alternating types for 1000 Zorich steps; "
        f"float orbit matches the rational surrogate on {agree}/30 blocks",
    )
    assert ok


# --- criterion 4: nudge algebra ---------------------------------------------


def test_criterion_4_nudge_preserves_mean_and_jump_locality():
    rng = np.random.default_rng(4)
    violations = 0
    rejected = 0
    for trial in range(1000):
        m = int(rng.integers(1, 4))
        f = sample_cocycle(m, 1, seed=trial, mode=RATIONAL)
        i = int(rng.integers(0, m))
        gamma = f.min_segment()
        r = int(rng.integers(1, 10**9))
        sign = 1 if rng.integers(0, 2) else -1
        zeta = sign * gamma * Fraction(r, 2 * 10**9)  # |zeta| < gamma/2
        try:
            g = nudge(f, i, zeta)
        except ValueBoundExceeded:
            rejected += 1  # compensation would escape [-M, M]: correct refusal
            continue
        ok = sum(l * v for l, v in zip(g.lengths, g.values)) == 0
        ok &= all(
            g.lengths[j] == f.lengths[j] for j in range(m + 1) if j not in (i, i + 1)
        )
        ok &= g.lengths[i] == f.lengths[i] + zeta
        ok &= g.lengths[i + 1] == f.lengths[i + 1] - zeta
        ok &= all(g.values[j] == f.values[j] for j in range(m + 1) if j != i + 1)
        sf, sg = jumps(f).sigma, jumps(g).sigma
        ok &= all(sf[j] == sg[j] for j in range(m) if j not in (i, i + 1))
        ok &= cocycle_distance(f, g) >= abs(zeta)
        violations += not ok
    ok = violations == 0
    record_criterion(
        4,
        ok,
        f"nudge: {violations} violations in 1000 random (f, i, zeta) with "
        f"|zeta| < gamma/2 (exact zero mean, only jumps i, i+1 move, "
        f"|zeta| <= sup-distance); {rejected} bound-escape refusals",
    )
    assert ok


# --- criterion 5: d=2 deviation exponent ------------------------------------


def test_criterion_5_golden_birkhoff_deviation_slope():
    t0 = time.perf_counter()
    T = golden_iet(mode=FLOAT)
    # measure at the renormalization times inside [1e2, 1e5] (Fibonacci
    # numbers here): the deviation envelope is attained there, so the fit
    # sees the power law and not the phase between renormalization events
    grid = renormalization_times(T, 100, 10**5)
    slopes = []
    for seed in range(1, 6):
        f = sample_cocycle(2, 1, seed=seed, mode=RATIONAL)
        scan = deviation_scan(T, f, grid, x_samples=32, seed=0)
        slopes.append(scan.birkhoff_slope)
    elapsed = time.perf_counter() - t0
    worst = max(slopes)
    ok = worst <= 0.15 and elapsed < 600
    record_criterion(
        5,
        ok,
        f"golden base, 5 sampled (2,1)-cocycles: max log-log slope of "
        f"max|S_n f| over [1e2,1e5] = {worst:.4f} <= 0.15; {elapsed:.1f}s < 10min",
    )
    assert ok


# --- criterion 6: d=4 spectral gap and deviation power -----------------------


def test_criterion_6_reversal_gap_and_deviation_power():
    gaps = []
    fixture_est = None
    for seed in range(1, 6):
        T = sample_iet(4, seed=seed, mode=FLOAT, perm=Permutation.symmetric(4))
        est = lyapunov_exponents(T, n_blocks=10**4)
        gaps.append((seed, est.gap, est.confidence))
        if seed == 1:
            fixture_est = est
        assert est.theta1 > est.theta2 > 0
    gap_ok = all(gap > 3 * conf for _, gap, conf in gaps)

    # slope against theta2/theta1 on the fixture orbit, measured at its
    # renormalization times (the envelope's attainment points)
    T = sample_iet(4, seed=1, mode=FLOAT, perm=Permutation.symmetric(4))
    grid = renormalization_times(T, 10, 10**5)
    lam = np.array([float(l) for l in T.lengths])
    v = np.random.default_rng(101).uniform(-1, 1, size=4)
    v = v - (v @ lam)  # mean zero over the exchange's own intervals
    f = new_cocycle(tuple(lam), tuple(v), float(np.abs(v).max()) + 1e-9, FLOAT)
    scan = deviation_scan(T, f, grid, x_samples=128, seed=0, estimate=fixture_est)
    ratio = scan.predicted_ratio
    dev_b = abs(scan.birkhoff_slope - ratio)
    dev_v = abs(scan.visits.slope - ratio)
    slope_ok = dev_b <= 0.1 and dev_v <= 0.1
    ok = gap_ok and slope_ok
    min_margin = min(gap / conf for _, gap, conf in gaps)
    record_criterion(
        6,
        ok,
        f"d=4 reversal: gap > 3x confidence at 1e4 blocks for seeds 1-5 "
        f"(min gap/conf = {min_margin:.0f}); fixture scan slopes off "
        f"theta2/theta1 = {ratio:.3f} by {dev_b:+.3f} (Birkhoff) / "
        f"{dev_v:+.3f} (visits), both within 0.1",
    )
    assert ok


# --- criterion 7: balanced times on the golden base --------------------------


def test_criterion_7_balanced_times_eta64(golden400):
    bt = balanced_times(
        golden400, 0.5, 64.0, budget=250, seed=1, n_x_samples=100, n_times=6
    )
    seq = bt.sequence
    ver = bt.verification
    eta = bt.constants["eta"]
    count_ok = len(seq) >= 5
    ratio_ok = all(st.height_ratio_ok for st in seq)
    sep_ok = all(b.h >= eta * a.h for a, b in zip(seq, seq[1:]))
    cond_i_ok = ver["cond_i_failures"] == 0 and all(
        e["cond_i_ok"] == e["cond_i_total"] == 100 for e in ver["times"]
    )
    cond_ii_ok = ver["cond_ii_failures"] == 0
    cond_iii_ok = ver["cond_iii_ok"] and ver["heights_increasing"]
    ok = count_ok and ratio_ok and sep_ok and cond_i_ok and cond_ii_ok and cond_iii_ok
    record_criterion(
        7,
        ok,
        f"golden eta=64 eps=0.5: {len(seq)} selected times; height ratios < "
        f"C_gamma at all; eta-separated heights; disjoint floors 100/100 at "
        f"every time; density gap certificates clean; growth proxy "
        f"{ver['growth_proxy']:.3e} <= {ver['growth_bound']:.3e}",
    )
    assert ok


# --- criterion 8: the good-return certificate fixture ------------------------


def test_criterion_8_good_return_certificate_regression(golden80, f7):
    E = IntervalSet.parse("1/5:3/10", RATIONAL)
    D = Fraction(5, 2)
    bt = balanced_times(golden80, 0.5, 4.0, budget=56, seed=1, n_x_samples=100, n_times=2)
    cert = good_return_search(golden80, f7, E, D, 1000, bt, budget=40, seed=0)
    ver = verify_certificate(golden80, f7, E, D, cert)
    doc = {
        "base": golden80.to_json(),
        "cocycle": f7.to_json(),
        "E": E.to_json(),
        "D": str(D),
        "N": 1000,
        "balanced_times": bt.to_json(),
        "certificate": cert.to_json(RATIONAL),
        "verification": ver,
    }
    regenerated = json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
    stored = (FIXTURES / "good_return_seed7.json").read_text()
    byte_ok = regenerated == stored
    ver_ok = ver["all"] is True and all(
        ver[k] for k in ("membership", "birkhoff", "density", "continuity")
    )
    bounds_ok = cert.n > 1000 and cert.x in E and abs(cert.birkhoff) < D
    ok = byte_ok and ver_ok and bounds_ok
    record_criterion(
        8,
        ok,
        f"seed-7 certificate (x = {cert.x}, n = {cert.n}): independent exact "
        f"re-verification of all four conditions {'passed' if ver_ok else 'FAILED'}; "
        f"regeneration is byte-{'identical' if byte_ok else 'DIFFERENT'} "
        "against tests/fixtures/good_return_seed7.json",
    )
    assert ok


# --- criterion 9: ergodic / non-ergodic separation ----------------------------


def test_criterion_9_probe_separates_coboundary_from_generic(golden80):
    h = indicator_coboundary(golden80, Fraction(1, 2))
    Tf = new_iet(golden80.perm, [float(l) for l in golden80.lengths], FLOAT)
    hl = fiber_histograms(Tf, h, float(np.pi / 6) % 1.0, 10**5, L=4.0)
    telescoping_ok = hl.max_abs_t <= 1.0 and hl.clipped == 0
    rep_cob = translation_invariance_probe(Tf, h, n=10**5, L=4.0)
    rep_cob2 = translation_invariance_probe(Tf, h, n=10**5, L=4.0)

    T6 = sample_iet(6, seed=7, mode=FLOAT)
    f6 = sample_cocycle(2, 1, seed=7, mode=FLOAT)
    rep_gen = translation_invariance_probe(T6, f6, n=10**7)
    rep_gen2 = translation_invariance_probe(T6, f6, n=10**7)

    deterministic = (
        rep_cob.aggregate == rep_cob2.aggregate
        and rep_gen.aggregate == rep_gen2.aggregate
    )
    ok = (
        telescoping_ok
        and rep_cob.aggregate > 1.0
        and rep_gen.aggregate < 0.2
        and deterministic
    )
    record_criterion(
        9,
        ok,
        f"coboundary: all 1e5 strip t-values within the telescoping bound 1.0 "
        f"(max |t| = {hl.max_abs_t:.3f}), probe aggregate = {rep_cob.aggregate:.3f} "
        f"> 1.0; generic d=6 pair: aggregate = {rep_gen.aggregate:.3f} < 0.2 at "
        f"n = 1e7; both regenerate identically",
    )
    assert ok


# --- criterion 10: error paths -----------------------------------------------


def test_criterion_10_machine_readable_error_paths(golden80, f7):
    codes = {}

    T = new_iet(Permutation.symmetric(2), (Fraction(2, 3), Fraction(1, 3)), RATIONAL)
    state = rauzy_step(start_induction(T))  # one legal step: (2/3,1/3) -> (1/3,1/3)
    with pytest.raises(DegenerateLengths) as err:
        rauzy_step(state)
    codes["DegenerateLengths"] = err.value.code == "DegenerateLengths"

    E = IntervalSet.parse("1/5:3/10", RATIONAL)
    bt = balanced_times(golden80, 0.5, 4.0, budget=56, seed=1, n_x_samples=4, n_times=1)
    with pytest.raises(PreconditionD) as err:
        good_return_search(golden80, f7, E, Fraction(2), 1000, bt)  # D == m*M
    codes["PreconditionD"] = (
        err.value.code == "PreconditionD" and err.value.details["m"] == 2
    )

    near = new_iet(Permutation.symmetric(2), (1e-9, 1.0 - 1e-9), FLOAT)
    with pytest.raises(KappaCapExceeded) as err:
        zorich_step(start_induction(near), kappa_cap=1000)
    codes["KappaCapExceeded"] = (
        err.value.code == "KappaCapExceeded" and err.value.details["kappa_cap"] == 1000
    )

    ok = all(codes.values())
    record_criterion(
        10,
        ok,
        "error paths raise with machine-readable codes: "
        + ", ".join(k for k, v in codes.items() if v),
    )
    assert ok
