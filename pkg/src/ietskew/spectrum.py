"""Lyapunov exponents of the accelerated renormalization cocycle and
orbit-deviation scans.

theta1 comes from the norm growth of a pushed vector, theta2 from the
area growth of a pushed 2-frame (Gram-Schmidt deflation every
``reorth_period`` blocks); both are averaged per acceleration block.
Only the top two exponents are ever needed here, so no full Oseledets
decomposition is attempted.  For d = 2 the second exponent is 0 by
convention.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .cocycle import StepCocycle, birkhoff_sum
from .errors import DegenerateLengths, NonConvergence
from .iet_core import RATIONAL, Iet
from .renorm import StepType, rauzy_move

#: blocks run in exact arithmetic before switching to float products
EXACT_WARMUP_BLOCKS = 32

DEFAULT_REORTH_PERIOD = 8


@dataclass(frozen=True)
class LyapunovEstimate:
    theta1: float
    theta2: float
    blocks_used: int
    renormalization_period: int
    confidence: float

    @property
    def gap(self) -> float:
        return self.theta1 - self.theta2

    def to_json(self) -> dict:
        return {
            "theta1": self.theta1,
            "theta2": self.theta2,
            "blocks_used": self.blocks_used,
            "renormalization_period": self.renormalization_period,
            "confidence": self.confidence,
        }


def _step(perm, lengths, frame):
    """One induction step in place; returns (perm', type).

    lengths may be exact or float; comparisons follow the entries.
    frame rows are indexed by letter: the loser's row absorbs the
    winner's, which is the heights-side cocycle action in step order.
    """
    top = perm.order0()[-1]
    bottom = perm.order1()[-1]
    if lengths[top] == lengths[bottom]:
        raise DegenerateLengths("equal critical lengths", top=top, bottom=bottom)
    if lengths[top] > lengths[bottom]:
        stype, w, l = StepType.TOP, top, bottom
    else:
        stype, w, l = StepType.BOTTOM, bottom, top
    lengths[w] = lengths[w] - lengths[l]
    frame[l, :] += frame[w, :]
    return rauzy_move(perm, stype), stype


def lyapunov_exponents(
    iet: Iet,
    n_blocks: int = 10**4,
    reorth_period: int = DEFAULT_REORTH_PERIOD,
    confidence_cap: float = None,
) -> LyapunovEstimate:
    """Top two exponents per acceleration block.

    Rational inputs get an exact warm-up window (induction decisions
    are branch points, so early ties matter); after it the lengths
    continue in float, which is all the log-norm averages need.
    Degeneracy inside the run propagates: a rational input only has
    finitely many honest blocks.
    """
    d = iet.perm.d
    exact = iet.mode == RATIONAL
    lengths = list(iet.lengths) if exact else [float(x) for x in iet.lengths]
    perm = iet.perm
    frame = np.eye(d, 2, dtype=np.float64)
    log1 = 0.0
    log2 = 0.0
    blocks = 0
    series = []

    while blocks < n_blocks:
        if exact and blocks >= EXACT_WARMUP_BLOCKS:
            total = sum(lengths)
            lengths = [float(x / total) for x in lengths]
            exact = False
        perm, block_type = _step(perm, lengths, frame)
        # finish the block: keep stepping while the type repeats
        while True:
            top = perm.order0()[-1]
            bottom = perm.order1()[-1]
            if lengths[top] == lengths[bottom]:
                raise DegenerateLengths("equal critical lengths", top=top, bottom=bottom)
            if (StepType.TOP if lengths[top] > lengths[bottom] else StepType.BOTTOM) != block_type:
                break
            perm, _ = _step(perm, lengths, frame)
        blocks += 1
        if not exact:
            total = sum(lengths)
            lengths = [x / total for x in lengths]
        if blocks % reorth_period == 0 or blocks == n_blocks:
            v1 = frame[:, 0]
            r11 = float(np.linalg.norm(v1))
            v1 = v1 / r11
            v2 = frame[:, 1] - float(v1 @ frame[:, 1]) * v1
            r22 = float(np.linalg.norm(v2))
            frame = np.column_stack([v1, v2 / r22])
            log1 += math.log(r11)
            log2 += math.log(r22)
            series.append((blocks, log1 / blocks, log2 / blocks))

    theta1 = log1 / blocks
    theta2 = 0.0 if d == 2 else log2 / blocks
    tail = series[-max(1, len(series) // 4) :]
    drift1 = (max(s[1] for s in tail) - min(s[1] for s in tail)) / 2
    drift2 = (max(s[2] for s in tail) - min(s[2] for s in tail)) / 2
    confidence = max(drift1, drift2 if d > 2 else 0.0)
    if confidence_cap is not None and confidence > confidence_cap:
        raise NonConvergence(
            "exponent drift above requested cap",
            confidence=confidence,
            cap=confidence_cap,
            blocks=blocks,
        )
    return LyapunovEstimate(theta1, theta2, blocks, reorth_period, confidence)


def length_contraction_rate(iet: Iet, n_blocks: int) -> float:
    """Per-block decay rate of the induced interval length.

    The lengths-side and heights-side cocycles share their spectrum, so
    this should agree with theta1; used as a duality diagnostic.
    """
    d = iet.perm.d
    exact = iet.mode == RATIONAL
    lengths = list(iet.lengths) if exact else [float(x) for x in iet.lengths]
    start_total = sum(lengths)
    perm = iet.perm
    frame = np.zeros((d, 2))
    log_total = 0.0
    blocks = 0
    while blocks < n_blocks:
        if exact and blocks >= EXACT_WARMUP_BLOCKS:
            scale = sum(lengths)
            lengths = [float(x / scale) for x in lengths]
            log_total += math.log(float(scale) / start_total)
            start_total = 1.0
            exact = False
        perm, block_type = _step(perm, lengths, frame)
        while True:
            top = perm.order0()[-1]
            bottom = perm.order1()[-1]
            if lengths[top] == lengths[bottom]:
                raise DegenerateLengths("equal critical lengths", top=top, bottom=bottom)
            if (StepType.TOP if lengths[top] > lengths[bottom] else StepType.BOTTOM) != block_type:
                break
            perm, _ = _step(perm, lengths, frame)
        blocks += 1
        if not exact:
            scale = sum(lengths)
            lengths = [x / scale for x in lengths]
            log_total += math.log(scale / start_total)
            start_total = 1.0
    if exact:
        log_total += math.log(float(sum(lengths)) / start_total)
    return -log_total / blocks


# ---------------------------------------------------------------------------
# orbit statistics
# ---------------------------------------------------------------------------


def visit_counts(iet: Iet, x, n: int) -> tuple:
    """Visits of x, T(x), ..., T^{n-1}(x) to each letter's interval."""
    d = iet.perm.d
    if n == 0:
        return tuple([0] * d)
    if iet.mode == RATIONAL or n <= 10**4:
        counts = [0] * d
        y = x
        for _ in range(n):
            counts[iet.letter_at(y)] += 1
            y = iet.apply(y)
        return tuple(counts)
    row = _kernels.visit_counts(iet, float(x), [n])[0]
    return tuple(int(c) for c in row)


@dataclass(frozen=True)
class VisitDeviation:
    """max over sampled x of |visits_alpha(x, n) - lambda_alpha * n|."""

    n_grid: tuple
    per_letter: tuple  # per_letter[i][alpha], aligned with n_grid
    slope: float | None
    residual: float | None

    def worst(self) -> tuple:
        return tuple(max(row) for row in self.per_letter)


@dataclass(frozen=True)
class DeviationScan:
    n_grid: tuple
    max_abs_birkhoff: tuple
    visits: VisitDeviation
    birkhoff_slope: float | None
    birkhoff_residual: float | None
    degenerate: bool
    predicted_ratio: float | None

    def rows(self):
        """CSV rows: (n, max_abs_birkhoff, per-letter deviations...)."""
        for i, n in enumerate(self.n_grid):
            yield (n, self.max_abs_birkhoff[i], *self.visits.per_letter[i])

    def to_json(self) -> dict:
        return {
            "n_grid": list(self.n_grid),
            "max_abs_birkhoff": list(self.max_abs_birkhoff),
            "visit_deviation": [list(r) for r in self.visits.per_letter],
            "birkhoff_slope": self.birkhoff_slope,
            "visit_slope": self.visits.slope,
            "degenerate": self.degenerate,
            "predicted_ratio": self.predicted_ratio,
        }


def _fit_upper_half(ns, ys):
    """Least-squares slope of log y vs log n on the upper half of the grid.

    The lower half is transient; it only pollutes the fit.  Returns
    (slope, rms residual), or (None, None) when y vanishes somewhere
    (degenerate data, e.g. the zero cocycle).
    """
    half = len(ns) // 2
    ns, ys = ns[half:], ys[half:]
    if any(y <= 0 for y in ys):
        return None, None
    lx = np.log(np.asarray(ns, dtype=np.float64))
    ly = np.log(np.asarray(ys, dtype=np.float64))
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def deviation_scan(
    iet: Iet,
    f: StepCocycle,
    n_grid,
    x_samples: int = 32,
    seed: int = 0,
    estimate: LyapunovEstimate = None,
    workers: int = 1,
) -> DeviationScan:
    """Growth of max |S_n f| and of per-letter visit deviations over an
    n-grid, with log-log slopes fitted on the upper half.

    ``workers`` threads share the visit-count scans (the kernels release
    the GIL); each thread reads an immutable exchange and the reduction
    happens on the caller's thread.
    """
    grid = sorted(int(n) for n in n_grid)
    d = iet.perm.d
    rng = np.random.default_rng(seed)
    fiet = _to_float(iet)
    total = float(fiet.total)
    xs = rng.uniform(0.0, total, size=x_samples)

    sup = _kernels.lane_sup_abs_sums(fiet, f, xs, grid)
    max_abs = tuple(float(s) for s in sup)

    lam = np.array([float(l) for l in fiet.lengths]) / total
    dev = np.zeros((len(grid), d))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            all_counts = list(pool.map(lambda x: _kernels.visit_counts(fiet, float(x), grid), xs))
    else:
        all_counts = [_kernels.visit_counts(fiet, float(x), grid) for x in xs]
    for counts in all_counts:
        for i, n in enumerate(grid):
            dev[i] = np.maximum(dev[i], np.abs(counts[i] - lam * n))
    per_letter = tuple(tuple(float(v) for v in row) for row in dev)

    b_slope, b_res = _fit_upper_half(grid, max_abs)
    v_slope, v_res = _fit_upper_half(grid, [max(row) for row in per_letter])
    predicted = None
    if estimate is not None and estimate.theta1 > 0:
        predicted = max(estimate.theta2 / estimate.theta1, 0.0)
    return DeviationScan(
        tuple(grid),
        max_abs,
        VisitDeviation(tuple(grid), per_letter, v_slope, v_res),
        b_slope,
        b_res,
        b_slope is None,
        predicted,
    )


def _to_float(iet: Iet) -> Iet:
    """Float copy normalized to the unit interval."""
    from .iet_core import FLOAT, new_iet

    total = float(iet.total)
    return new_iet(iet.perm, [float(l) / total for l in iet.lengths], FLOAT)


def renormalization_times(iet: Iet, lo: int = 10, hi: int = 10**5) -> tuple:
    """Tower heights of the orbit's own acceleration, restricted to [lo, hi].

    Deviation growth is a limsup law: between renormalization events the
    max deviation stalls, so a log-log fit over a uniform grid is
    dominated by where the grid lands relative to those events.  Fitting
    at the heights themselves — the times where the envelope is attained —
    removes that phase noise.  Use this as the ``n_grid`` of
    ``deviation_scan`` when comparing a slope against theta2/theta1.
    """
    from .renorm import start_induction, zorich_step

    state = start_induction(_to_float(iet))
    times = set()
    while True:
        state = zorich_step(state)
        if min(state.q) > hi:
            break
        for h in state.q:
            if lo <= h <= hi:
                times.add(int(h))
    return tuple(sorted(times))


def birkhoff_max_exact(iet: Iet, f: StepCocycle, xs, n: int):
    """Small-scale exact reference for the kernel scans (tests only)."""
    best = Fraction(0) if f.mode == RATIONAL else 0.0
    for x in xs:
        s = birkhoff_sum(iet, f, x, n)
        if abs(s) > abs(best):
            best = abs(s)
    return best
