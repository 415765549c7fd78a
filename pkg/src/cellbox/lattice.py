"""Exact counts of grid points on lattice levels ``z.x = h``.

The grid is the set of cell corners ``{0, ..., n-1}^d``: a hyperplane
``v.x = t`` (``v >= 0``) meets the interior of the cell with corner ``c``
exactly when ``t - v.e < v.c < t``.  Counting cells cut by a hyperplane
therefore reduces to summing level counts of the corner grid over an open
window, and the level counts are coefficients of

    prod_i (1 + q^{z_i} + q^{2 z_i} + ... + q^{(n-1) z_i}).
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from ._numbers import as_fraction, format_number, is_exact
from .geometry import vd_of_direction

# int64 is safe while every partial count stays below this
_INT64_SAFE = 2 ** 62


@dataclass(frozen=True)
class LatticeDirection:
    """Primitive integer normal with nonnegative entries.

    ``flips[i]`` records that coordinate ``i`` of the original vector was
    negative; reflecting ``x_i -> n - 1 - x_i`` maps the corner grid to
    itself, so counts are unaffected.
    """

    z: tuple[int, ...]
    flips: tuple[bool, ...] = ()

    def __post_init__(self):
        z = tuple(int(c) for c in self.z)
        if not z or all(c == 0 for c in z):
            raise ValueError("zero vector is not a lattice direction")
        if any(c < 0 for c in z):
            raise ValueError("LatticeDirection stores the positive-normalized form")
        if math.gcd(*z) != 1:
            raise ValueError(f"{z} is not primitive")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "flips", tuple(self.flips) or (False,) * len(z))

    @property
    def dim(self) -> int:
        return len(self.z)

    @property
    def width(self) -> int:
        """``|z|_1``: the number of lattice levels an optimal open slab covers."""
        return sum(self.z)

    def unit(self) -> tuple[float, ...]:
        norm = math.sqrt(sum(c * c for c in self.z))
        return tuple(c / norm for c in self.z)


def normalize_primitive(z: Sequence[int]) -> LatticeDirection:
    """Divide by the gcd and reflect negative entries.

    >>> normalize_primitive((2, -4)).z
    (1, 2)
    """
    z = tuple(z)
    if any(isinstance(c, float) or not float(c).is_integer() for c in z):
        raise ValueError("lattice directions need integer entries")
    z = tuple(int(c) for c in z)
    if all(c == 0 for c in z):
        raise ValueError("zero vector is not a lattice direction")
    g = math.gcd(*z)
    return LatticeDirection(tuple(abs(c) // g for c in z), tuple(c < 0 for c in z))


def _as_direction(z) -> LatticeDirection:
    return z if isinstance(z, LatticeDirection) else normalize_primitive(z)


@dataclass(frozen=True)
class LevelCounts:
    """``counts[i]`` grid points lie on level ``hmin + i``; every other level is empty."""

    hmin: int
    counts: tuple[int, ...]

    @property
    def hmax(self) -> int:
        return self.hmin + len(self.counts) - 1

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __getitem__(self, h: int) -> int:
        i = h - self.hmin
        if 0 <= i < len(self.counts):
            return self.counts[i]
        return 0

    def window_sum(self, lo: int, hi: int) -> int:
        """Number of grid points with ``lo <= z.x <= hi``."""
        lo = max(lo, self.hmin)
        hi = min(hi, self.hmax)
        if lo > hi:
            return 0
        return sum(self.counts[lo - self.hmin:hi - self.hmin + 1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "count"])
        for i, c in enumerate(self.counts):
            w.writerow([self.hmin + i, str(c)])
        return buf.getvalue()


def level_counts(z, n: int) -> LevelCounts:
    """Counts ``r(h) = #{x in {0..n-1}^d : z.x = h}`` by iterated convolution.

    Each factor ``1 + q^w + ... + q^{(n-1)w}`` is applied as a strided
    sliding-window sum, so the cost is ``O(d * len)`` big-integer additions.
    """
    z = _as_direction(z)
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    zeros = sum(1 for c in z.z if c == 0)
    length = (n - 1) * z.width + 1
    dtype = np.int64 if n ** z.dim < _INT64_SAFE else object
    poly = np.zeros(length, dtype=dtype)
    poly[0] = n ** zeros
    top = 0
    for w in z.z:
        if w == 0:
            continue
        new_top = top + (n - 1) * w
        cur = poly[:new_top + 1]
        out = np.zeros_like(cur)
        for r in range(w):
            col = cur[r::w]
            acc = np.cumsum(col)
            if dtype is object:
                acc = acc.astype(object)
            if len(acc) > n:
                acc[n:] = acc[n:] - acc[:-n]
            out[r::w] = acc
        poly[:new_top + 1] = out
        top = new_top
    counts = tuple(int(c) for c in poly)
    # a reflected coordinate contributes -z_i x_i = z_i x'_i - z_i (n-1)
    offset = -sum(c * (n - 1) for c, f in zip(z.z, z.flips) if f)
    return LevelCounts(offset, counts)


class SlabMax(NamedTuple):
    """Best window: ``count`` points on levels ``k - width .. k - 1``."""

    count: int
    k: int
    width: int

    @property
    def levels(self) -> tuple[int, int]:
        return (self.k - self.width, self.k - 1)


def strip_count_max(z, n: int) -> SlabMax:
    """``M_d(z, n)``: the largest sum of ``|z|_1`` consecutive level counts.

    This is the largest number of cells of ``[0, n]^d`` that a hyperplane
    with normal ``z`` meets properly.  Ties go to the smallest ``k``.
    """
    z = _as_direction(z)
    lc = level_counts(z, n)
    w = z.width
    counts = lc.counts
    # windows may hang over either end of the occupied range
    prefix = [0]
    for c in counts:
        prefix.append(prefix[-1] + c)
    m = len(counts)
    best, best_start = -1, 0
    for start in range(-(w - 1), m):
        lo = max(start, 0)
        hi = min(start + w, m)
        s = prefix[hi] - prefix[lo]
        if s > best:
            best, best_start = s, start
    k = lc.hmin + best_start + w
    return SlabMax(best, k, w)


def _primitive_scaling(v) -> tuple[tuple[int, ...], Fraction]:
    """Write rational ``v = lam * u`` with ``u`` primitive integer, ``lam > 0``."""
    fv = [as_fraction(c) for c in v]
    den = math.lcm(*(c.denominator for c in fv))
    ints = [int(c * den) for c in fv]
    g = math.gcd(*ints)
    u = tuple(c // g for c in ints)
    return u, Fraction(g, den)


def _require_rational(values, what):
    for x in values:
        if not is_exact(x):
            raise TypeError(f"{what} must be rational (int, Fraction or 'p/q'), got {x!r}")


def cells_intersected(v, t, n: int) -> int:
    """Exact number of cells of ``[0, n]^d`` whose interior meets ``v.x = t``.

    ``v`` and ``t`` must be rational: the test is a strict comparison and
    has no meaning for an approximate input.
    """
    v = tuple(as_fraction(c) if isinstance(c, str) else c for c in v)
    t = as_fraction(t) if isinstance(t, str) else t
    _require_rational(v, "normal")
    _require_rational((t,), "threshold")
    if all(c == 0 for c in v):
        raise ValueError("zero vector is not a direction")
    u, lam = _primitive_scaling(v)
    t = as_fraction(t) / lam
    lo = t - sum(max(0, c) for c in u)
    hi = t - sum(min(0, c) for c in u)
    lc = level_counts(u, n)
    # levels h with lo < h < hi
    first = math.floor(lo) + 1
    last = math.ceil(hi) - 1
    return lc.window_sum(first, last)


def _lattice_value(z, n):
    return strip_count_max(z, n).count


def _candidates(d: int, zmax: int):
    # sorted representatives: the value is permutation invariant and the
    # lexicographically smallest member of each orbit is the sorted one
    for z in itertools.combinations_with_replacement(range(zmax + 1), d):
        if z[-1] > 0 and math.gcd(*z) == 1:
            yield z


class SearchResult(NamedTuple):
    direction: LatticeDirection
    count: int
    candidates: int


def best_direction_search(d: int, n: int, zmax: int, workers: int | None = None) -> SearchResult:
    """Best primitive normal with entries in ``[0, zmax]`` for the box ``Q_n``.

    The count is a lower bound for ``N^d(n)``.  Evaluation may fan out over
    ``workers`` processes; the reduction (max count, then lexicographically
    smallest ``z``) is independent of scheduling.
    """
    if d < 1 or zmax < 1 or n < 1:
        raise ValueError("need d >= 1, n >= 1 and zmax >= 1")
    cands = list(_candidates(d, zmax))
    if workers and workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            values = list(pool.map(_lattice_value, cands, itertools.repeat(n), chunksize=64))
    else:
        values = [_lattice_value(z, n) for z in cands]
    best_z, best = None, -1
    for z, val in zip(cands, values):
        if val > best or (val == best and z < best_z):
            best_z, best = z, val
    return SearchResult(LatticeDirection(best_z), best, len(cands))


def exact_nd_small(d: int, n: int, zmax: int | None = None) -> int:
    """``N^2(n)`` exactly.

    Only ``d = 2`` is certified: an optimal line can be moved until it passes
    through two grid points, so normals with entries ``<= n`` suffice.
    """
    if d != 2:
        raise ValueError("exact N^d(n) is only certified for d = 2")
    zmax = n if zmax is None else zmax
    if zmax < n:
        raise ValueError("exactness needs zmax >= n")
    return best_direction_search(2, n, zmax).count


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    M: int
    ratio: Fraction
    V: object
    gap: object


def convergence_table(z, ns: Sequence[int]) -> list[ConvergenceRow]:
    """Rows ``(n, M, M / n^{d-1}, V_d(z0), |ratio - V|)``.  Exact throughout."""
    z = _as_direction(z)
    if not ns:
        raise ValueError("ns must be nonempty")
    V = vd_of_direction(z.z)
    rows = []
    for n in ns:
        if n < 1:
            raise ValueError("each n must be >= 1")
        M = strip_count_max(z, n).count
        ratio = Fraction(M, n ** (z.dim - 1))
        rows.append(ConvergenceRow(n, M, ratio, V, abs(ratio - V)))
    return rows


def convergence_csv(rows: Sequence[ConvergenceRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "M", "ratio", "V", "gap"])
    for r in rows:
        w.writerow([r.n, str(r.M), format_number(float(r.ratio)),
                    format_number(float(r.V)), format_number(float(r.gap))])
    return buf.getvalue()
