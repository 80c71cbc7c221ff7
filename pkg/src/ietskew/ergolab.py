"""Empirical diagnostics for skew-product strips.

Everything here is an occupation statistic of a finite orbit: fiber
histograms stand in for conditional measures on vertical lines,
band-return histograms for the induced map's invariant measure, and the
translation probe for invariance of the fiber measures under vertical
shifts by the cocycle's jumps.  No convergence claims are made in code;
fixtures record trends at documented run lengths.

Long strip orbits run in float through the kernels (a rational orbit of
1e7 steps is far too costly); the kernels compensate their sums, which
keeps the accumulated t-error below 1e-6 over 1e7 steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cocycle import StepCocycle, StripPoint, jumps
from .errors import BadConfig, CapExceeded

DEFAULT_WINDOWS = 64
DEFAULT_BINS = 256
SHIFT_ALIGN_RTOL = 1e-9


def default_band(f: StepCocycle) -> float:
    """Default vertical cut-off: 8 m M."""
    return 8.0 * f.m * float(f.bound_M)


# ---------------------------------------------------------------------------
# fiber histograms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberHistogram:
    """Occupation counts of t-values over one x-window, cut to [-L, L].

    Visits with t outside the band are excluded by the cut-off (they are
    tallied by the caller via ``clipped``); counts always sum to total.
    """

    x_window: tuple
    t_range: tuple
    bins: int
    counts: tuple
    total: int

    def __post_init__(self):
        if self.bins <= 0:
            raise BadConfig("bins must be positive", bins=self.bins)
        if sum(self.counts) != self.total:
            raise BadConfig("counts do not sum to total")

    def normalized(self) -> np.ndarray:
        arr = np.asarray(self.counts, dtype=np.float64)
        return arr / self.total if self.total > 0 else arr

    @property
    def bin_width(self) -> float:
        lo, hi = self.t_range
        return (hi - lo) / self.bins

    def to_json(self):
        return {
            "x_window": list(self.x_window),
            "t_range": list(self.t_range),
            "bins": self.bins,
            "counts": list(self.counts),
            "total": self.total,
        }


def fiber_histograms(
    iet,
    f: StepCocycle,
    x0,
    n: int,
    window_width=None,
    L=None,
    bins: int = DEFAULT_BINS,
    t0: float = 0.0,
):
    """Histogram the strip orbit of (x0, t0) by x-window and t-bin.

    Windows tile [0,1): window_width must divide 1 into an integer
    number of windows (default 64).
    """
    if n < 0:
        raise BadConfig("orbit length must be >= 0", n=n)
    if window_width is None:
        n_windows = DEFAULT_WINDOWS
    else:
        n_windows = int(round(1.0 / float(window_width)))
        if n_windows <= 0 or abs(n_windows * float(window_width) - 1.0) > 1e-9:
            raise BadConfig("window_width must tile [0,1)", window_width=window_width)
    if L is None:
        L = default_band(f)
    L = float(L)
    if L <= 0:
        raise BadConfig("band must be positive", L=L)
    bin_width = 2.0 * L / bins
    if n == 0:
        hist = np.zeros((n_windows, bins), dtype=np.int64)
        clipped = 0
        max_abs_t = abs(float(t0))
    else:
        hist, max_abs_t, clipped = _kernels.fiber_hist(
            iet, f, float(x0), float(t0), int(n), n_windows, -L, bin_width, bins
        )
    out = []
    for w in range(n_windows):
        counts = tuple(int(c) for c in hist[w])
        out.append(
            FiberHistogram(
                x_window=(w / n_windows, (w + 1) / n_windows),
                t_range=(-L, L),
                bins=bins,
                counts=counts,
                total=sum(counts),
            )
        )
    # orbit-level tallies piggy-back on the list for callers that need them
    out = HistogramList(out, max_abs_t=float(max_abs_t), clipped=int(clipped), n=int(n))
    return out


class HistogramList(list):
    """A list of FiberHistogram plus whole-orbit tallies."""

    def __init__(self, items, max_abs_t=0.0, clipped=0, n=0):
        super().__init__(items)
        self.max_abs_t = max_abs_t
        self.clipped = clipped
        self.n = n


# ---------------------------------------------------------------------------
# translation-invariance probe
# ---------------------------------------------------------------------------


def shift_counts(p: np.ndarray, shift_bins: float):
    """Shift a histogram by a (possibly fractional) number of bins.

    Integer shifts move mass exactly; fractional shifts split each bin
    linearly between the two straddled targets — flagged as a bin
    mismatch so downstream readers know rebinning smeared the data.
    Mass shifted past either end is dropped (it left the cut-off band).
    """
    k = int(np.floor(shift_bins))
    frac = shift_bins - k
    mismatch = min(frac, 1 - frac) > SHIFT_ALIGN_RTOL
    out = np.zeros_like(p)
    lo = np.roll(p, k)
    if k >= 0:
        lo[:k] = 0.0
    else:
        lo[k:] = 0.0
    if frac < SHIFT_ALIGN_RTOL:
        out = lo
    else:
        hi = np.roll(p, k + 1)
        if k + 1 >= 0:
            hi[: k + 1] = 0.0
        else:
            hi[k + 1:] = 0.0
        out = (1.0 - frac) * lo + frac * hi
    return out, mismatch


def shift_l1_distance(p: np.ndarray, shift_bins: float):
    """L1 distance between a histogram and its shifted self.

    Mass the shift pushes past the band edge is charged in full — the
    cut-off forgot it, and forgetting is the opposite of matching.  The
    charge keeps the distance symmetric in the shift direction and makes
    disjoint supports score exactly mass(p) + mass(shifted p).
    """
    q, mismatch = shift_counts(p, shift_bins)
    dropped = float(p.sum() - q.sum())
    return float(np.sum(np.abs(p - q))) + dropped, mismatch


@dataclass(frozen=True)
class ProbeReport:
    """Shifted-self L1 distances of the fiber histograms, per jump."""

    per_jump: dict
    aggregate: float
    n: int
    max_abs_t: float
    clipped: int
    bin_mismatch: tuple
    params: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "per_jump": {
                str(s): {k: v for k, v in rep.items() if k != "per_window"}
                for s, rep in self.per_jump.items()
            },
            "aggregate": self.aggregate,
            "n": self.n,
            "max_abs_t": self.max_abs_t,
            "clipped": self.clipped,
            "bin_mismatch": list(self.bin_mismatch),
            "params": self.params,
        }


def translation_invariance_probe(
    iet,
    f: StepCocycle,
    sigma=None,
    x0=None,
    n: int = 10**5,
    t0: float = 0.0,
    window_width=None,
    L=None,
    bins: int = DEFAULT_BINS,
) -> ProbeReport:
    """Compare each fiber histogram with its sigma-shifted self.

    sigma=None probes every jump of f.  Distances are L1 between the
    normalized histogram and its shift on the common bin grid (mass
    shifted out of the band counts against the match, so disjoint
    supports give distance 2).  The aggregate is the worst jump's
    visit-weighted mean over windows: any single non-invariant vertical
    direction marks the cocycle as coboundary-like.
    """
    if x0 is None:
        x0 = float(np.pi / 6) % 1.0  # fixed, documented, off the breakpoints
    if sigma is not None:
        sigmas = [float(sigma)]
    else:
        sigmas = [float(s) for s in jumps(f).sigma]
    hl = fiber_histograms(iet, f, x0, n, window_width=window_width, L=L, bins=bins, t0=t0)
    bin_width = hl[0].bin_width if hl else 1.0
    weights = np.array([h.total for h in hl], dtype=np.float64)
    wsum = weights.sum()
    per_jump = {}
    mismatched = []
    aggregate = 0.0
    for s in sigmas:
        if s == 0.0:
            per_jump[s] = {"aggregate": 0.0, "per_window": [0.0] * len(hl), "bin_mismatch": False}
            continue
        shift_bins = s / bin_width
        dists = []
        mismatch_any = False
        for h in hl:
            if h.total == 0:
                dists.append(0.0)
                continue
            p = h.normalized()
            dist, mism = shift_l1_distance(p, shift_bins)
            mismatch_any = mismatch_any or mism
            dists.append(dist)
        agg = float(np.dot(weights, dists) / wsum) if wsum > 0 else 0.0
        per_jump[s] = {"aggregate": agg, "per_window": dists, "bin_mismatch": mismatch_any}
        if mismatch_any:
            mismatched.append(s)
        aggregate = max(aggregate, agg)
    return ProbeReport(
        per_jump=per_jump,
        aggregate=aggregate,
        n=hl.n,
        max_abs_t=hl.max_abs_t,
        clipped=hl.clipped,
        bin_mismatch=tuple(mismatched),
        params={"x0": float(x0), "t0": float(t0), "bins": bins, "L": hl[0].t_range[1] if hl else None},
    )


# ---------------------------------------------------------------------------
# induced-map occupation measure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalBirkhoffMeasure:
    """Normalized occupation histogram of band returns on [0,1) x [-N,N]."""

    base: StripPoint
    n: int
    x_edges: tuple
    t_edges: tuple
    weights: tuple  # row-major, rows follow x_edges
    steps: int

    def mass(self) -> float:
        return float(sum(sum(row) for row in self.weights))

    def grid(self) -> np.ndarray:
        return np.array(self.weights, dtype=np.float64)

    def l1_distance(self, other: "EmpiricalBirkhoffMeasure") -> float:
        a, b = self.grid(), other.grid()
        if a.shape != b.shape:
            raise BadConfig("grids differ", a=a.shape, b=b.shape)
        return float(np.abs(a - b).sum())

    def to_json(self):
        return {
            "x": float(self.base.x),
            "t": float(self.base.t),
            "n": self.n,
            "x_edges": list(self.x_edges),
            "t_edges": list(self.t_edges),
            "weights": [list(r) for r in self.weights],
            "steps": self.steps,
        }


def empirical_birkhoff_measure(
    iet,
    f: StepCocycle,
    p0: StripPoint,
    N,
    n_returns: int,
    x_bins: int = 64,
    t_bins: int = 64,
    step_cap: int = 10**7,
) -> EmpiricalBirkhoffMeasure:
    """Occupation histogram of the first n_returns visits to |t| <= N.

    The band returns are exactly the orbit of the induced (first-return)
    map of the strip dynamics on the band, so this is its empirical
    invariant-measure candidate.  Runs the batched kernel; failing to
    collect the requested returns within step_cap total steps raises the
    same cap error a single stuck return would.
    """
    if n_returns <= 0:
        raise BadConfig("need n_returns >= 1", n_returns=n_returns)
    N = float(N)
    xs, ts, ks, last = _kernels.band_hits(
        iet, f, float(p0.x), float(p0.t), N, int(step_cap), int(n_returns)
    )
    if len(xs) < n_returns:
        raise CapExceeded(
            "band returns exhausted the step budget",
            cap=step_cap,
            collected=int(len(xs)),
            requested=int(n_returns),
        )
    total = float(iet.total)
    hist, x_edges, t_edges = np.histogram2d(
        xs, ts, bins=[x_bins, t_bins], range=[[0.0, total], [-N, N]]
    )
    weights = hist / hist.sum()
    return EmpiricalBirkhoffMeasure(
        base=p0,
        n=int(n_returns),
        x_edges=tuple(float(e) for e in x_edges),
        t_edges=tuple(float(e) for e in t_edges),
        weights=tuple(tuple(float(v) for v in row) for row in weights),
        steps=int(last[2]),
    )
