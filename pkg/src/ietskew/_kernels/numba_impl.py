"""Hot orbit loops, numba-compiled.

All kernels work on the flat float64 description of an exchange:
``breaks`` of length d+1 with breaks[0] = 0 and breaks[d] = total, and
``offs[k]`` the translation applied on [breaks[k], breaks[k+1)).  Letter
lookup is a linear scan (d is tiny).  Long t- and x-accumulations use
Kahan compensation so 1e8-step scans keep the drift far below bin
widths; the clamp is a safety net the compensated loop essentially
never hits.
"""

import numpy as np
from numba import njit

__backend_name__ = "numba"


@njit(cache=True, nogil=True)
def _letter(breaks, x):
    d = breaks.shape[0] - 1
    for k in range(d - 1):
        if x < breaks[k + 1]:
            return k
    return d - 1


@njit(cache=True, nogil=True)
def _clamp(x, total):
    if x < 0.0:
        return 0.0
    if x >= total:
        return np.nextafter(total, 0.0)
    return x


@njit(cache=True, nogil=True)
def orbit_points(breaks, offs, x0, n):
    xs = np.empty(n, dtype=np.float64)
    total = breaks[breaks.shape[0] - 1]
    x = x0
    cx = 0.0
    for i in range(n):
        xs[i] = x
        k = _letter(breaks, x)
        y = offs[k] - cx
        s = x + y
        cx = (s - x) - y
        x = _clamp(s, total)
    return xs


@njit(cache=True, nogil=True)
def visit_counts(breaks, offs, x0, checkpoints):
    d = breaks.shape[0] - 1
    ncp = checkpoints.shape[0]
    counts = np.zeros((ncp, d), dtype=np.int64)
    running = np.zeros(d, dtype=np.int64)
    total = breaks[d]
    x = x0
    cx = 0.0
    cp = 0
    n_max = checkpoints[ncp - 1]
    for i in range(n_max):
        k = _letter(breaks, x)
        running[k] += 1
        y = offs[k] - cx
        s = x + y
        cx = (s - x) - y
        x = _clamp(s, total)
        while cp < ncp and i + 1 == checkpoints[cp]:
            for j in range(d):
                counts[cp, j] = running[j]
            cp += 1
    return counts


@njit(cache=True, nogil=True)
def lane_sup_abs_sums(breaks, offs, vals, xs0, grid):
    nl = xs0.shape[0]
    ngrid = grid.shape[0]
    sup = np.zeros(ngrid, dtype=np.float64)
    xs = xs0.copy()
    ts = np.zeros(nl, dtype=np.float64)
    cts = np.zeros(nl, dtype=np.float64)
    total = breaks[breaks.shape[0] - 1]
    gi = 0
    n_max = grid[ngrid - 1]
    for i in range(n_max):
        for j in range(nl):
            x = xs[j]
            k = _letter(breaks, x)
            y = vals[k] - cts[j]
            s = ts[j] + y
            cts[j] = (s - ts[j]) - y
            ts[j] = s
            xs[j] = _clamp(x + offs[k], total)
        while gi < ngrid and i + 1 == grid[gi]:
            m = 0.0
            for j in range(nl):
                a = abs(ts[j])
                if a > m:
                    m = a
            sup[gi] = m
            gi += 1
    return sup


@njit(cache=True, nogil=True)
def band_hits(breaks, offs, vals, x0, t0, band, n_max, xs_out, ts_out, ks_out):
    cap = xs_out.shape[0]
    total = breaks[breaks.shape[0] - 1]
    x = x0
    t = t0
    cx = 0.0
    ct = 0.0
    count = 0
    for i in range(n_max):
        k = _letter(breaks, x)
        yv = vals[k] - ct
        st = t + yv
        ct = (st - t) - yv
        t = st
        yx = offs[k] - cx
        sx = x + yx
        cx = (sx - x) - yx
        x = _clamp(sx, total)
        if abs(t) <= band:
            xs_out[count] = x
            ts_out[count] = t
            ks_out[count] = i + 1
            count += 1
            if count >= cap:
                return count, x, t, i + 1
    return count, x, t, n_max


@njit(cache=True, nogil=True)
def fiber_hist(breaks, offs, vals, x0, t0, n, n_windows, bin_lo, bin_width, n_bins):
    hist = np.zeros((n_windows, n_bins), dtype=np.int64)
    total = breaks[breaks.shape[0] - 1]
    x = x0
    t = t0
    cx = 0.0
    ct = 0.0
    max_abs_t = abs(t0)
    clipped = 0
    inv_w = 1.0 / bin_width
    for i in range(n):
        w = int(x / total * n_windows)
        if w >= n_windows:
            w = n_windows - 1
        b = int((t - bin_lo) * inv_w)
        if 0 <= b < n_bins:
            hist[w, b] += 1
        else:
            clipped += 1
        k = _letter(breaks, x)
        yv = vals[k] - ct
        st = t + yv
        ct = (st - t) - yv
        t = st
        if abs(t) > max_abs_t:
            max_abs_t = abs(t)
        yx = offs[k] - cx
        sx = x + yx
        cx = (sx - x) - yx
        x = _clamp(sx, total)
    return hist, max_abs_t, clipped


@njit(cache=True, nogil=True)
def small_sum_times(breaks, offs, vals, x0, n_min, n_max, thresh, ks_out, ts_out):
    cap = ks_out.shape[0]
    total = breaks[breaks.shape[0] - 1]
    x = x0
    t = 0.0
    cx = 0.0
    ct = 0.0
    count = 0
    for i in range(n_max):
        k = _letter(breaks, x)
        yv = vals[k] - ct
        st = t + yv
        ct = (st - t) - yv
        t = st
        yx = offs[k] - cx
        sx = x + yx
        cx = (sx - x) - yx
        x = _clamp(sx, total)
        if i + 1 >= n_min and abs(t) <= thresh:
            ks_out[count] = i + 1
            ts_out[count] = t
            count += 1
            if count >= cap:
                return count
    return count
