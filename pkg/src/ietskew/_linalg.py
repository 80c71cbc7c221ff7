"""Small exact integer-matrix helpers.

Cocycle matrices are d x d with d <= ~8 but entries grow without bound
(heights are Fibonacci-like), so everything here works on tuples of Python
ints; numpy only enters for float norms, with bit-length rescaling to stay
finite on huge entries.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def identity(d: int) -> tuple:
    return tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))


def matmul(a: tuple, b: tuple) -> tuple:
    n, m, p = len(a), len(b), len(b[0])
    bt = tuple(zip(*b))
    return tuple(
        tuple(sum(ra[k] * cb[k] for k in range(m)) for cb in bt) for ra in a
    )


def mat_vec(a: tuple, v) -> tuple:
    return tuple(sum(row[k] * v[k] for k in range(len(v))) for row in a)


def vec_mat(v, a: tuple) -> tuple:
    d = len(v)
    return tuple(sum(v[i] * a[i][j] for i in range(d)) for j in range(len(a[0])))


def transpose(a: tuple) -> tuple:
    return tuple(zip(*a))


def col_sums(a: tuple) -> tuple:
    return tuple(sum(col) for col in zip(*a))


def entry_sum(a: tuple) -> int:
    return sum(sum(row) for row in a)


def is_positive(a: tuple) -> bool:
    return all(x >= 1 for row in a for x in row)


def min_entry(a: tuple):
    return min(x for row in a for x in row)


def det(a: tuple):
    """Exact determinant by fraction-free expansion (d is tiny)."""
    d = len(a)
    if d == 1:
        return a[0][0]
    if d == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    total = 0
    for j in range(d):
        minor = tuple(row[:j] + row[j + 1 :] for row in a[1:])
        total += (-1) ** j * a[0][j] * det(minor)
    return total


def inverse_unimodular(a: tuple) -> tuple:
    """Exact inverse of an integer matrix with det +-1."""
    d = len(a)
    dt = det(a)
    if dt not in (1, -1):
        raise ValueError(f"matrix is not unimodular (det={dt})")
    # Gauss-Jordan over Fractions, then cast back to int.
    m = [[Fraction(a[i][j]) for j in range(d)] + [Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    for col in range(d):
        piv = next(r for r in range(col, d) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [x / pv for x in m[col]]
        for r in range(d):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    inv = tuple(tuple(int(m[i][d + j]) for j in range(d)) for i in range(d))
    return inv


def _to_float_scaled(a: tuple):
    """Float copy of an int matrix together with the log of the scale pulled out."""
    top = max(abs(x) for row in a for x in row)
    if top == 0:
        return np.zeros((len(a), len(a[0]))), 0.0
    shift = max(0, top.bit_length() - 500)
    arr = np.array([[float(x >> shift) if shift else float(x) for x in row] for row in a])
    return arr, shift * math.log(2.0)


def norm2(a: tuple) -> float:
    """Spectral norm; inf if it does not fit a float."""
    arr, logscale = _to_float_scaled(a)
    n = float(np.linalg.norm(arr, 2))
    if logscale == 0.0:
        return n
    out = math.log(n) + logscale if n > 0 else -math.inf
    return math.exp(out) if out < 700 else math.inf


def log_norm2(a: tuple) -> float:
    """log of the spectral norm, safe for huge integer entries."""
    arr, logscale = _to_float_scaled(a)
    n = float(np.linalg.norm(arr, 2))
    return (math.log(n) if n > 0 else -math.inf) + logscale


def log_sum(v) -> float:
    """log of a sum of non-negative big ints."""
    s = sum(v)
    if s <= 0:
        return -math.inf
    shift = max(0, s.bit_length() - 500)
    return math.log(float(s >> shift)) + shift * math.log(2.0)
