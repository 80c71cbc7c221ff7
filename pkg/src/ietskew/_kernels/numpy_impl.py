"""Pure-numpy fallback for the orbit kernels.

A single orbit is inherently sequential, so the fallback buys speed by
composing the exchange with itself K times.  The K-fold composition is
again a piecewise translation with at most K*(d-1)+1 pieces; on each
piece the whole K-step itinerary (letters, partial x-offsets, partial
value sums) is constant and precomputed.  Advancing a block is then one
piece lookup plus O(K) vectorized work, shrinking the Python-loop count
by a factor of K.  Lane-parallel kernels (many starting points) are
vectorized directly across lanes instead.

Numerics differ slightly from the step-by-step backend: a block adds
its offset in one rounding instead of K, so the two backends agree
pointwise only while both itineraries match.  Consumers compare
statistics, not trajectories.
"""

import numpy as np

__backend_name__ = "numpy"

#: composition depth for single-orbit kernels
BLOCK = 128
#: below this many steps the table build costs more than it saves
SMALL_N = 4 * BLOCK


def _letter(breaks, x):
    return int(np.searchsorted(breaks, x, side="right")) - 1


def _clamped(x, total):
    if x < 0.0:
        return 0.0
    if x >= total:
        return np.nextafter(total, 0.0)
    return x


class ComposedMap:
    """The K-fold composition, refined piece by piece."""

    def __init__(self, breaks, offs, vals, K=BLOCK):
        total = float(breaks[-1])
        interior = [float(b) for b in breaks[1:-1]]
        # piece: [lo, hi, cum_x, cum_t, xs_before, ts_before, letters]
        pieces = [[0.0, total, 0.0, 0.0, [], [], []]]
        for _ in range(K):
            refined = []
            for lo, hi, cum, tcum, xb, tb, lets in pieces:
                cuts = [lo]
                for b in interior:
                    pre = b - cum
                    if lo < pre < hi:
                        cuts.append(pre)
                cuts.sort()
                cuts.append(hi)
                for j in range(len(cuts) - 1):
                    slo, shi = cuts[j], cuts[j + 1]
                    k = _letter(breaks, _clamped(slo + cum, total))
                    refined.append(
                        [
                            slo,
                            shi,
                            cum + offs[k],
                            tcum + vals[k],
                            xb + [cum],
                            tb + [tcum],
                            lets + [k],
                        ]
                    )
            pieces = refined
        self.K = K
        self.total = total
        self.plo = np.array([p[0] for p in pieces])
        self.end_x = np.array([p[2] for p in pieces])
        self.end_t = np.array([p[3] for p in pieces])
        self.step_x = np.array([p[4] for p in pieces])
        self.step_t = np.array([p[5] for p in pieces])
        self.letters = np.array([p[6] for p in pieces], dtype=np.int64)
        # state after each in-block step, for kernels that look at t_{i+1}
        self.after_x = np.concatenate([self.step_x[:, 1:], self.end_x[:, None]], axis=1)
        self.after_t = np.concatenate([self.step_t[:, 1:], self.end_t[:, None]], axis=1)

    def piece(self, x):
        return int(np.searchsorted(self.plo, x, side="right")) - 1


def orbit_points(breaks, offs, x0, n):
    xs = np.empty(n, dtype=np.float64)
    total = float(breaks[-1])
    x = float(x0)
    pos = 0
    if n >= SMALL_N:
        cm = ComposedMap(breaks, offs, np.zeros_like(offs))
        while pos + cm.K <= n:
            p = cm.piece(x)
            xs[pos : pos + cm.K] = x + cm.step_x[p]
            x = _clamped(x + cm.end_x[p], total)
            pos += cm.K
    while pos < n:
        xs[pos] = x
        x = _clamped(x + offs[_letter(breaks, x)], total)
        pos += 1
    return xs


def visit_counts(breaks, offs, x0, checkpoints):
    d = len(breaks) - 1
    ncp = len(checkpoints)
    counts = np.zeros((ncp, d), dtype=np.int64)
    running = np.zeros(d, dtype=np.int64)
    total = float(breaks[-1])
    n_max = int(checkpoints[-1])
    x = float(x0)
    i = 0
    cp = 0
    cm = ComposedMap(breaks, offs, np.zeros_like(offs)) if n_max >= SMALL_N else None
    while i < n_max:
        next_cp = int(checkpoints[cp])
        if cm is not None and i + cm.K <= next_cp:
            p = cm.piece(x)
            running += np.bincount(cm.letters[p], minlength=d)
            x = _clamped(x + cm.end_x[p], total)
            i += cm.K
        else:
            running[_letter(breaks, x)] += 1
            x = _clamped(x + offs[_letter(breaks, x)], total)
            i += 1
        while cp < ncp and i == int(checkpoints[cp]):
            counts[cp] = running
            cp += 1
    return counts


def lane_sup_abs_sums(breaks, offs, vals, xs0, grid):
    nl = xs0.shape[0]
    ngrid = len(grid)
    sup = np.zeros(ngrid, dtype=np.float64)
    xs = xs0.astype(np.float64).copy()
    ts = np.zeros(nl, dtype=np.float64)
    total = float(breaks[-1])
    hi = np.nextafter(total, 0.0)
    gi = 0
    n_max = int(grid[-1])
    for i in range(n_max):
        ks = np.searchsorted(breaks, xs, side="right") - 1
        ts += vals[ks]
        xs += offs[ks]
        np.clip(xs, 0.0, hi, out=xs)
        while gi < ngrid and i + 1 == int(grid[gi]):
            sup[gi] = float(np.abs(ts).max())
            gi += 1
    return sup


def band_hits(breaks, offs, vals, x0, t0, band, n_max, xs_out, ts_out, ks_out):
    cap = xs_out.shape[0]
    total = float(breaks[-1])
    x = float(x0)
    t = float(t0)
    count = 0
    i = 0
    cm = ComposedMap(breaks, offs, vals) if n_max >= SMALL_N else None
    while i < n_max:
        if cm is not None and i + cm.K <= n_max:
            p = cm.piece(x)
            t_next = t + cm.after_t[p]
            idxs = np.flatnonzero(np.abs(t_next) <= band)
            if idxs.size:
                take = idxs[: cap - count]
                xs_out[count : count + take.size] = np.clip(
                    x + cm.after_x[p][take], 0.0, np.nextafter(total, 0.0)
                )
                ts_out[count : count + take.size] = t_next[take]
                ks_out[count : count + take.size] = i + 1 + take
                count += take.size
                if count >= cap:
                    last = take[-1]
                    return (
                        count,
                        _clamped(x + cm.after_x[p][last], total),
                        t + cm.after_t[p][last],
                        i + 1 + int(last),
                    )
            t = t + cm.end_t[p]
            x = _clamped(x + cm.end_x[p], total)
            i += cm.K
        else:
            k = _letter(breaks, x)
            t += vals[k]
            x = _clamped(x + offs[k], total)
            i += 1
            if abs(t) <= band:
                xs_out[count] = x
                ts_out[count] = t
                ks_out[count] = i
                count += 1
                if count >= cap:
                    return count, x, t, i
    return count, x, t, n_max


def fiber_hist(breaks, offs, vals, x0, t0, n, n_windows, bin_lo, bin_width, n_bins):
    hist = np.zeros(n_windows * n_bins, dtype=np.int64)
    total = float(breaks[-1])
    x = float(x0)
    t = float(t0)
    max_abs_t = abs(t)
    clipped = 0
    i = 0
    cm = ComposedMap(breaks, offs, vals) if n >= SMALL_N else None
    while i < n:
        if cm is not None and i + cm.K <= n:
            p = cm.piece(x)
            xs = x + cm.step_x[p]
            ts = t + cm.step_t[p]
            w = np.minimum((xs / total * n_windows).astype(np.int64), n_windows - 1)
            b = np.floor((ts - bin_lo) / bin_width).astype(np.int64)
            ok = (b >= 0) & (b < n_bins)
            clipped += int((~ok).sum())
            hist += np.bincount(w[ok] * n_bins + b[ok], minlength=n_windows * n_bins)
            max_abs_t = max(max_abs_t, float(np.abs(t + cm.after_t[p]).max()))
            t = t + cm.end_t[p]
            x = _clamped(x + cm.end_x[p], total)
            i += cm.K
        else:
            w = min(int(x / total * n_windows), n_windows - 1)
            b = int(np.floor((t - bin_lo) / bin_width))
            if 0 <= b < n_bins:
                hist[w * n_bins + b] += 1
            else:
                clipped += 1
            k = _letter(breaks, x)
            t += vals[k]
            max_abs_t = max(max_abs_t, abs(t))
            x = _clamped(x + offs[k], total)
            i += 1
    return hist.reshape(n_windows, n_bins), max_abs_t, clipped


def small_sum_times(breaks, offs, vals, x0, n_min, n_max, thresh, ks_out, ts_out):
    cap = ks_out.shape[0]
    total = float(breaks[-1])
    x = float(x0)
    t = 0.0
    count = 0
    i = 0
    cm = ComposedMap(breaks, offs, vals) if n_max >= SMALL_N else None
    while i < n_max:
        if cm is not None and i + cm.K <= n_max:
            p = cm.piece(x)
            t_next = t + cm.after_t[p]
            ks = i + 1 + np.arange(cm.K)
            idxs = np.flatnonzero((np.abs(t_next) <= thresh) & (ks >= n_min))
            if idxs.size:
                take = idxs[: cap - count]
                ks_out[count : count + take.size] = ks[take]
                ts_out[count : count + take.size] = t_next[take]
                count += take.size
                if count >= cap:
                    return count
            t = t + cm.end_t[p]
            x = _clamped(x + cm.end_x[p], total)
            i += cm.K
        else:
            k = _letter(breaks, x)
            t += vals[k]
            x = _clamped(x + offs[k], total)
            i += 1
            if i >= n_min and abs(t) <= thresh:
                ks_out[count] = i
                ts_out[count] = t
                count += 1
                if count >= cap:
                    return count
    return count
