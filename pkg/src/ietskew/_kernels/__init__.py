"""Backend dispatch for the orbit kernels.

Two interchangeable implementations: numba-compiled straight loops and
a blocked pure-numpy fallback.  Selection order: ``set_backend()``,
then the IETSKEW_BACKEND environment variable ("numba" or "numpy"),
then numba if it imports.  Wrappers here marshal exact domain objects
into the flat float64 arrays the kernels consume; the common refinement
of the exchange partition and the cocycle partition carries one
(offset, value) pair per refined piece.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import BadConfig, ModeMismatch
from . import numpy_impl

try:
    from . import numba_impl
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_impl = None

_BACKENDS = {"numpy": numpy_impl}
if numba_impl is not None:
    _BACKENDS["numba"] = numba_impl

_forced = None


def available_backends():
    return sorted(_BACKENDS)


def set_backend(name):
    """Force a backend for this process; None returns to env/default."""
    global _forced
    if name is not None and name not in _BACKENDS:
        raise BadConfig("unknown kernel backend", backend=name, known=available_backends())
    _forced = name


def get_backend() -> str:
    if _forced is not None:
        return _forced
    env = os.environ.get("IETSKEW_BACKEND")
    if env:
        if env not in _BACKENDS:
            raise BadConfig(
                "IETSKEW_BACKEND not recognized", backend=env, known=available_backends()
            )
        return env
    return "numba" if "numba" in _BACKENDS else "numpy"


def _impl():
    return _BACKENDS[get_backend()]


# ---------------------------------------------------------------------------
# marshalling
# ---------------------------------------------------------------------------


def iet_arrays(iet):
    """(breaks, offs) as float64, both in domain order.

    breaks[0] = 0, breaks[-1] = total; offs[k] is the translation of the
    k-th interval from the left (not of letter k).
    """
    pts = [float(b) for b in iet.breakpoints()]
    by_letter = iet.offsets()
    offs = [float(by_letter[a]) for a in iet.perm.order0()]
    return np.array(pts, dtype=np.float64), np.array(offs, dtype=np.float64)


def refined_arrays(iet, f):
    """Common refinement of the exchange and cocycle partitions.

    Each refined piece carries the translation of its exchange letter
    and the value of its cocycle segment.  The exchange must be on the
    unit interval, where the cocycle lives.
    """
    breaks, offs = iet_arrays(iet)
    if abs(breaks[-1] - 1.0) > 1e-9:
        raise ModeMismatch(
            "skew kernels need an exchange of the unit interval", total=float(breaks[-1])
        )
    fpts = np.array([float(b) for b in f.breakpoints()], dtype=np.float64)
    merged = np.unique(np.concatenate([breaks, fpts]))
    merged[0], merged[-1] = 0.0, breaks[-1]
    mids = (merged[:-1] + merged[1:]) / 2.0
    ki = np.searchsorted(breaks, mids, side="right") - 1
    kf = np.searchsorted(fpts, mids, side="right") - 1
    fvals = np.array([float(v) for v in f.values], dtype=np.float64)
    return merged, offs[ki], fvals[kf]


def _as_grid(grid):
    g = np.asarray(grid, dtype=np.int64)
    if g.ndim != 1 or g.size == 0 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
        raise BadConfig("time grid must be strictly increasing positive integers")
    return g


# ---------------------------------------------------------------------------
# public kernels
# ---------------------------------------------------------------------------


def orbit_points(iet, x0, n: int) -> np.ndarray:
    breaks, offs = iet_arrays(iet)
    return _impl().orbit_points(breaks, offs, float(x0), int(n))


def visit_counts(iet, x0, checkpoints) -> np.ndarray:
    """Per-letter visit counts of the forward orbit at the checkpoint times."""
    breaks, offs = iet_arrays(iet)
    by_slot = _impl().visit_counts(breaks, offs, float(x0), _as_grid(checkpoints))
    by_letter = np.zeros_like(by_slot)
    for slot, letter in enumerate(iet.perm.order0()):
        by_letter[:, letter] = by_slot[:, slot]
    return by_letter


def lane_sup_abs_sums(iet, f, xs0, grid) -> np.ndarray:
    breaks, offs, vals = refined_arrays(iet, f)
    xs0 = np.asarray(xs0, dtype=np.float64)
    return _impl().lane_sup_abs_sums(breaks, offs, vals, xs0, _as_grid(grid))


def band_hits(iet, f, x0, t0, band, n_max: int, cap: int):
    """Visits of the skew orbit to |t| <= band, up to cap of them.

    Returns (xs, ts, ks, last) with last = (x, t, k) at the final step
    taken; len(xs) == cap means the scan stopped at capacity.
    """
    breaks, offs, vals = refined_arrays(iet, f)
    xs = np.empty(cap, dtype=np.float64)
    ts = np.empty(cap, dtype=np.float64)
    ks = np.empty(cap, dtype=np.int64)
    count, x, t, k = _impl().band_hits(
        breaks, offs, vals, float(x0), float(t0), float(band), int(n_max), xs, ts, ks
    )
    return xs[:count], ts[:count], ks[:count], (float(x), float(t), int(k))


def fiber_hist(iet, f, x0, t0, n: int, n_windows: int, bin_lo, bin_width, n_bins: int):
    breaks, offs, vals = refined_arrays(iet, f)
    hist, max_abs_t, clipped = _impl().fiber_hist(
        breaks,
        offs,
        vals,
        float(x0),
        float(t0),
        int(n),
        int(n_windows),
        float(bin_lo),
        float(bin_width),
        int(n_bins),
    )
    return hist, float(max_abs_t), int(clipped)


def small_sum_times(iet, f, x0, n_min: int, n_max: int, thresh, cap: int):
    """Times k in [n_min, n_max] with |S_k f(x0)| <= thresh (up to cap)."""
    breaks, offs, vals = refined_arrays(iet, f)
    ks = np.empty(cap, dtype=np.int64)
    ts = np.empty(cap, dtype=np.float64)
    count = _impl().small_sum_times(
        breaks, offs, vals, float(x0), int(n_min), int(n_max), float(thresh), ks, ts
    )
    return ks[:count], ts[:count]
