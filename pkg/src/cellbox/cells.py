"""Inside, boundary and outside unit cells of convex bodies.

A cell ``C(z) = z + [0, 1]^d`` is *inside* a body ``K`` when ``C(z) ⊆ K``,
*outside* when the two are disjoint and *boundary* otherwise.  Bodies are
closed, so a cell touching ``K`` in a single point is a boundary cell.

Every body is stored with exact rational parameters.  Membership and
intersection tests are done on integers after scaling by a common
denominator, vectorized with numpy (``int64`` when the magnitudes allow it,
Python integers otherwise), so counts are exact.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from . import _simplex
from ._numbers import as_fraction, exact_vector, format_number
from .geometry import Slab, strip_volume

_INT64_SAFE = 2 ** 62


def _int_array(values, bound: int):
    """Integer numpy array, ``int64`` if ``bound`` keeps products safe."""
    dtype = np.int64 if bound < _INT64_SAFE else object
    return np.array(values, dtype=dtype)


def _lcm_den(values) -> int:
    return math.lcm(1, *(as_fraction(x).denominator for x in values))


def _grid(lo: Sequence[int], hi: Sequence[int]) -> np.ndarray:
    """All integer points of the box ``lo <= x <= hi`` as an ``(N, d)`` array."""
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


class ConvexBody:
    """Common interface of the supported bodies."""

    kind = "body"
    dim: int

    def bounds(self) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
        raise NotImplementedError

    def contains(self, x) -> bool:
        return bool(self.contains_points(np.array([[as_fraction(c) for c in x]], dtype=object))[0])

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        """Exact closed membership for an ``(N, d)`` array of integer or
        rational points."""
        raise NotImplementedError

    def cells_meet(self, corners: np.ndarray) -> np.ndarray:
        """Exact test ``C(z) ∩ K != ∅`` for an ``(N, d)`` array of corners."""
        raise NotImplementedError

    def contains_float(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def volume(self):
        raise NotImplementedError

    def translate(self, shift) -> "ConvexBody":
        raise NotImplementedError

    def shrink(self, center, factor) -> "ConvexBody":
        """Homothetic copy ``center + factor * (K - center)``."""
        raise NotImplementedError

    def interior_point(self) -> tuple[Fraction, ...]:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """Up to ``m`` float points of ``K`` by rejection from the bounding box."""
        lo, hi = self.bounds()
        lo = np.array([float(x) for x in lo])
        hi = np.array([float(x) for x in hi])
        out = []
        tries = 0
        while sum(len(o) for o in out) < m and tries < 50:
            X = rng.uniform(lo, hi, size=(max(m, 64) * 4, self.dim))
            out.append(X[self.contains_float(X)])
            tries += 1
        pts = np.concatenate(out) if out else np.zeros((0, self.dim))
        return pts[:m]


# ---------------------------------------------------------------------------
# ball


@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    center: tuple
    radius: object
    kind = "ball"

    def __post_init__(self):
        c = exact_vector(self.center)
        r = as_fraction(self.radius)
        if r <= 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)
        den = _lcm_den(c + (r,))
        object.__setattr__(self, "_den", den)
        object.__setattr__(self, "_C", tuple(int(x * den) for x in c))
        object.__setattr__(self, "_R2", int(r * den) ** 2)

    @property
    def dim(self) -> int:
        return len(self.center)

    def bounds(self):
        return (tuple(x - self.radius for x in self.center),
                tuple(x + self.radius for x in self.center))

    def _scaled(self, pts: np.ndarray, reach: int):
        """Integer arrays ``pts * den`` and ``center * den`` with a safe dtype."""
        extent = int(np.max(np.abs(pts))) + reach if len(pts) else 0
        big = (max(abs(x) for x in self._C) + self._den * extent) ** 2 * self.dim + self._R2
        return _int_array(pts, big) * self._den, _int_array(self._C, big)

    def contains_points(self, pts):
        pts = np.asarray(pts)
        if pts.dtype == object:
            r2 = self.radius ** 2
            return np.array([sum((as_fraction(p) - c) ** 2 for p, c in zip(row, self.center)) <= r2
                             for row in pts], dtype=bool)
        P, C = self._scaled(pts, 0)
        diff = P - C
        return (diff * diff).sum(axis=1) <= self._R2

    def cells_meet(self, corners):
        corners = np.asarray(corners)
        if len(corners) == 0:
            return np.zeros(0, dtype=bool)
        Z, C = self._scaled(corners, 1)
        # nearest point of the cell to the center
        diff = np.minimum(np.maximum(C, Z), Z + self._den) - C
        return (diff * diff).sum(axis=1) <= self._R2

    def contains_float(self, X):
        c = np.array([float(x) for x in self.center])
        return ((X - c) ** 2).sum(axis=1) <= float(self.radius) ** 2

    def volume(self) -> float:
        d = self.dim
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * float(self.radius) ** d

    def translate(self, shift):
        return Ball(tuple(c + s for c, s in zip(self.center, shift)), self.radius)

    def shrink(self, center, factor):
        center, factor = exact_vector(center), as_fraction(factor)
        return Ball(tuple(p + factor * (c - p) for c, p in zip(self.center, center)),
                    self.radius * factor)

    def interior_point(self):
        return self.center

    def to_dict(self):
        return {"type": "ball", "center": [format_number(x) for x in self.center],
                "radius": format_number(self.radius)}

    def sample(self, rng, m):
        c = np.array([float(x) for x in self.center])
        u = rng.normal(size=(m, self.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        rad = float(self.radius) * rng.uniform(size=(m, 1)) ** (1 / self.dim)
        # include near-boundary points: that is where an inclusion fails first
        rad[: m // 4] = float(self.radius) * (1 - 1e-12)
        return c + rad * u


# ---------------------------------------------------------------------------
# H-polytope


def _solve_exact(M, rhs):
    """Solve a square rational system; ``None`` if singular."""
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(r)] for row, r in zip(M, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [x / p for x in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return tuple(row[n] for row in A)


def _det_exact(M) -> Fraction:
    A = [[Fraction(x) for x in row] for row in M]
    n = len(A)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            det = -det
        p = A[col][col]
        det *= p
        for r in range(col + 1, n):
            if A[r][col] != 0:
                f = A[r][col] / p
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return det


@dataclass(frozen=True, eq=False)
class HPolytope(ConvexBody):
    """``{x : a_j . x <= b_j}``, bounded, with a certified interior point."""

    A: tuple
    b: tuple
    interior: tuple = None
    kind = "hpolytope"

    def __post_init__(self):
        A = tuple(exact_vector(row) for row in self.A)
        b = exact_vector(self.b)
        if len(A) != len(b) or not A:
            raise ValueError("need matching nonempty rows A and b")
        d = len(A[0])
        if any(len(row) != d for row in A):
            raise ValueError("ragged constraint matrix")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        p = self.interior
        if p is None:
            if not _bounded(A):
                raise ValueError("polytope is unbounded")
            p = _chebyshev_point(A, b)
        p = exact_vector(p)
        if not all(sum(a * x for a, x in zip(row, p)) < bj for row, bj in zip(A, b)):
            raise ValueError("supplied point is not strictly interior")
        object.__setattr__(self, "interior", p)
        if not _bounded(A):
            raise ValueError("polytope is unbounded")
        object.__setattr__(self, "_verts", self._vertices())
        rows, rhs = [], []
        for row, bj in zip(A, b):
            den = _lcm_den(row + (bj,))
            rows.append(tuple(int(a * den) for a in row))
            rhs.append(int(bj * den))
        object.__setattr__(self, "_Ai", rows)
        object.__setattr__(self, "_bi", rhs)

    @property
    def dim(self) -> int:
        return len(self.A[0])

    @classmethod
    def from_simplex(cls, vertices) -> "HPolytope":
        """Facet description of the simplex with the given ``d + 1`` vertices."""
        V = [exact_vector(v) for v in vertices]
        d = len(V[0])
        if len(V) != d + 1:
            raise ValueError("a d-simplex needs d + 1 vertices")
        if _det_exact([[a - b for a, b in zip(v, V[0])] for v in V[1:]]) == 0:
            raise ValueError("degenerate simplex")
        rows, rhs = [], []
        for skip in range(d + 1):
            face = [V[i] for i in range(d + 1) if i != skip]
            normal = _facet_normal(face)
            off = sum(a * x for a, x in zip(normal, face[0]))
            if sum(a * x for a, x in zip(normal, V[skip])) > off:
                normal, off = tuple(-a for a in normal), -off
            rows.append(normal)
            rhs.append(off)
        centroid = tuple(sum(v[i] for v in V) / (d + 1) for i in range(d))
        return cls(tuple(rows), tuple(rhs), centroid)

    @classmethod
    def box(cls, lo, hi) -> "HPolytope":
        lo, hi = exact_vector(lo), exact_vector(hi)
        d = len(lo)
        rows, rhs = [], []
        for i in range(d):
            e = tuple(Fraction(int(j == i)) for j in range(d))
            rows += [e, tuple(-x for x in e)]
            rhs += [hi[i], -lo[i]]
        return cls(tuple(rows), tuple(rhs), tuple((a + b) / 2 for a, b in zip(lo, hi)))

    def _vertices(self):
        d = self.dim
        verts = set()
        for idx in itertools.combinations(range(len(self.A)), d):
            x = _solve_exact([self.A[i] for i in idx], [self.b[i] for i in idx])
            if x is None:
                continue
            if all(sum(a * xi for a, xi in zip(row, x)) <= bj for row, bj in zip(self.A, self.b)):
                verts.add(x)
        return sorted(verts)

    @property
    def vertices(self) -> list:
        return list(self._verts)

    def bounds(self):
        V = self._verts
        return (tuple(min(v[i] for v in V) for i in range(self.dim)),
                tuple(max(v[i] for v in V) for i in range(self.dim)))

    def _bound(self, extent):
        amax = max(abs(a) for row in self._Ai for a in row)
        bmax = max(abs(x) for x in self._bi)
        return self.dim * amax * (extent + 2) + bmax

    def contains_points(self, pts):
        pts = np.asarray(pts)
        if pts.dtype == object:
            return np.array([all(sum(a * as_fraction(x) for a, x in zip(row, p)) <= bj
                                 for row, bj in zip(self.A, self.b)) for p in pts], dtype=bool)
        extent = int(np.max(np.abs(pts))) if len(pts) else 0
        big = self._bound(extent)
        P = _int_array(pts, big)
        A = _int_array(self._Ai, big)
        bb = _int_array(self._bi, big)
        return np.all(P @ A.T <= bb, axis=1)

    def cells_meet(self, corners):
        corners = np.asarray(corners)
        if len(corners) == 0:
            return np.zeros(0, dtype=bool)
        extent = int(np.max(np.abs(corners))) + 1
        big = self._bound(extent)
        Z = _int_array(corners, big)
        A = _int_array(self._Ai, big)
        bb = _int_array(self._bi, big)
        # min of a.x over the cell is a.z + sum of the negative entries of a
        neg = _int_array([sum(min(0, a) for a in row) for row in self._Ai], big)
        cut = np.any(Z @ A.T + neg > bb, axis=1)
        # a cell corner inside K decides the rest cheaply
        meet = np.zeros(len(corners), dtype=bool)
        for off in itertools.product((0, 1), repeat=self.dim):
            meet |= np.all((Z + np.array(off)) @ A.T <= bb, axis=1)
        for i in np.nonzero(~cut & ~meet)[0]:
            meet[i] = self._cell_lp(corners[i])
        return meet

    def _cell_lp(self, z) -> bool:
        # y = x - z in [0, 1]^d
        d = self.dim
        rows = [list(row) for row in self.A]
        rhs = [bj - sum(a * int(zi) for a, zi in zip(row, z)) for row, bj in zip(self.A, self.b)]
        for i in range(d):
            rows.append([Fraction(int(j == i)) for j in range(d)])
            rhs.append(Fraction(1))
        return _simplex.feasible(rows, rhs)

    def contains_float(self, X):
        A = np.array([[float(a) for a in row] for row in self.A])
        b = np.array([float(x) for x in self.b])
        return np.all(X @ A.T <= b, axis=1)

    def volume(self) -> Fraction:
        """Exact volume: facets of the hull of the exact vertices, coned from
        an interior point, with rational determinants."""
        V = self._verts
        d = self.dim
        if d == 1:
            return V[-1][0] - V[0][0]
        hull = ConvexHull(np.array([[float(x) for x in v] for v in V]))
        p = self.interior
        total = Fraction(0)
        for simplex in hull.simplices:
            M = [[V[k][i] - p[i] for i in range(d)] for k in simplex]
            total += abs(_det_exact(M))
        return total / math.factorial(d)

    def translate(self, shift):
        shift = exact_vector(shift)
        b = tuple(bj + sum(a * s for a, s in zip(row, shift)) for row, bj in zip(self.A, self.b))
        return HPolytope(self.A, b, tuple(x + s for x, s in zip(self.interior, shift)))

    def shrink(self, center, factor):
        center, factor = exact_vector(center), as_fraction(factor)
        b = tuple(factor * bj + (1 - factor) * sum(a * c for a, c in zip(row, center))
                  for row, bj in zip(self.A, self.b))
        p = tuple(c + factor * (x - c) for x, c in zip(self.interior, center))
        return HPolytope(self.A, b, p)

    def linear_preimage(self, F) -> "HPolytope":
        """``{y : F^T y in K}`` for a unimodular integer matrix ``F`` (rows f_i)."""
        F = [list(map(int, row)) for row in F]
        d = self.dim
        A = tuple(tuple(sum(F[i][k] * row[k] for k in range(d)) for i in range(d)) for row in self.A)
        G = _inverse_transpose(F)
        p = tuple(sum(G[i][k] * self.interior[k] for k in range(d)) for i in range(d))
        return HPolytope(A, self.b, p)

    def interior_point(self):
        return self.interior

    def to_dict(self):
        return {"type": "hpolytope",
                "A": [[format_number(a) for a in row] for row in self.A],
                "b": [format_number(x) for x in self.b],
                "interior": [format_number(x) for x in self.interior]}

    def sample(self, rng, m):
        pts = super().sample(rng, max(m - len(self._verts), 1))
        verts = np.array([[float(x) for x in v] for v in self._verts])
        return np.concatenate([verts, pts])


def _facet_normal(points):
    """Normal of the hyperplane through ``d`` points in ``R^d`` (exact)."""
    d = len(points[0])
    diffs = [[a - b for a, b in zip(p, points[0])] for p in points[1:]]
    normal = []
    for i in range(d):
        minor = [[row[j] for j in range(d) if j != i] for row in diffs]
        normal.append((-1) ** i * _det_exact(minor) if minor else Fraction(1))
    return tuple(normal)


def _bounded(A) -> bool:
    """The recession cone ``{y : A y <= 0}`` is trivial."""
    d = len(A[0])
    Af = np.array([[float(a) for a in row] for row in A])
    for i in range(d):
        for sgn in (1, -1):
            c = np.zeros(d)
            c[i] = -sgn
            res = linprog(c, A_ub=Af, b_ub=np.zeros(len(A)), bounds=[(-1, 1)] * d, method="highs")
            if res.status != 0 or -res.fun > 1e-9:
                return False
    return True


def _chebyshev_point(A, b):
    Af = np.array([[float(a) for a in row] for row in A])
    bf = np.array([float(x) for x in b])
    norms = np.linalg.norm(Af, axis=1)
    d = Af.shape[1]
    c = np.zeros(d + 1)
    c[-1] = -1
    res = linprog(c, A_ub=np.hstack([Af, norms[:, None]]), b_ub=bf,
                  bounds=[(None, None)] * d + [(0, None)], method="highs")
    if res.status != 0 or res.x[-1] <= 0:
        raise ValueError("polytope has empty interior or is unbounded")
    return tuple(Fraction(x).limit_denominator(10 ** 9) for x in res.x[:d])


def _inverse_transpose(F):
    """``(F^{-1})^T`` for an integer unimodular matrix, as integers."""
    d = len(F)
    det = _det_exact(F)
    if abs(det) != 1:
        raise ValueError("matrix is not unimodular")
    G = []
    for i in range(d):
        e = [Fraction(int(k == i)) for k in range(d)]
        # column i of F^{-1} solves F x = e_i; row i of G is that column
        G.append(_solve_exact(F, e))
    # G currently holds columns of F^{-1} as rows, i.e. (F^{-1})^T
    return [[int(x) for x in row] for row in G]


# ---------------------------------------------------------------------------
# slab in a box


@dataclass(frozen=True, eq=False)
class SlabBox(ConvexBody):
    """``{x in [0, n]^d : lo <= v.x <= hi}``."""

    v: tuple
    lo: object
    hi: object
    n: object = 1
    kind = "slabbox"

    def __post_init__(self):
        v = exact_vector(self.v)
        lo, hi, n = as_fraction(self.lo), as_fraction(self.hi), as_fraction(self.n)
        if all(c == 0 for c in v):
            raise ValueError("zero normal")
        if not lo < hi:
            raise ValueError("slab needs lo < hi")
        if n <= 0:
            raise ValueError("box side must be positive")
        vmin = n * sum(min(0, c) for c in v)
        vmax = n * sum(max(0, c) for c in v)
        if not (lo < vmax and hi > vmin):
            raise ValueError("slab misses the interior of the box")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", n)
        den = _lcm_den(v + (lo, hi, n))
        object.__setattr__(self, "_den", den)
        object.__setattr__(self, "_V", tuple(int(c * den) for c in v))
        object.__setattr__(self, "_L", int(lo * den))
        object.__setattr__(self, "_U", int(hi * den))
        object.__setattr__(self, "_N", int(n * den))

    @property
    def dim(self) -> int:
        return len(self.v)

    def bounds(self):
        # the coordinate box is tight enough for scanning
        d = self.dim
        return (tuple(Fraction(0) for _ in range(d)), tuple(self.n for _ in range(d)))

    def _bound(self, extent):
        return (self.dim * max(abs(c) for c in self._V) + 1) * self._den * (extent + 2) + abs(self._L) + abs(self._U) + self._N

    def contains_points(self, pts):
        pts = np.asarray(pts)
        if pts.dtype == object:
            out = []
            for p in pts:
                p = [as_fraction(x) for x in p]
                s = sum(a * x for a, x in zip(self.v, p))
                out.append(all(0 <= x <= self.n for x in p) and self.lo <= s <= self.hi)
            return np.array(out, dtype=bool)
        extent = int(np.max(np.abs(pts))) if len(pts) else 0
        big = self._bound(extent)
        P = _int_array(pts, big)
        s = P @ _int_array(self._V, big)
        P = P * self._den
        inbox = np.all((P >= 0) & (P <= self._N), axis=1)
        return inbox & (s >= self._L) & (s <= self._U)

    def cells_meet(self, corners):
        corners = np.asarray(corners)
        if len(corners) == 0:
            return np.zeros(0, dtype=bool)
        extent = int(np.max(np.abs(corners))) + 1
        big = self._bound(extent)
        Z = _int_array(corners, big) * self._den
        lo = np.maximum(Z, 0)
        hi = np.minimum(Z + self._den, self._N)
        nonempty = np.all(lo <= hi, axis=1)
        V = _int_array(self._V, big)
        smin = (np.where(V >= 0, lo, hi) * V).sum(axis=1)
        smax = (np.where(V >= 0, hi, lo) * V).sum(axis=1)
        D = self._den
        return nonempty & (smin <= self._U * D) & (smax >= self._L * D)

    def contains_float(self, X):
        v = np.array([float(c) for c in self.v])
        s = X @ v
        n = float(self.n)
        return np.all((X >= 0) & (X <= n), axis=1) & (s >= float(self.lo)) & (s <= float(self.hi))

    def volume(self) -> Fraction:
        return strip_volume(Slab(self.v, self.hi, self.hi - self.lo), self.n)

    def slab(self) -> Slab:
        return Slab(self.v, self.hi, self.hi - self.lo)

    def to_hpolytope(self) -> HPolytope:
        d = self.dim
        rows, rhs = [], []
        for i in range(d):
            e = tuple(Fraction(int(j == i)) for j in range(d))
            rows += [e, tuple(-x for x in e)]
            rhs += [self.n, Fraction(0)]
        rows += [self.v, tuple(-c for c in self.v)]
        rhs += [self.hi, -self.lo]
        return HPolytope(tuple(rows), tuple(rhs))

    def translate(self, shift):
        return self.to_hpolytope().translate(shift)

    def shrink(self, center, factor):
        return self.to_hpolytope().shrink(center, factor)

    def interior_point(self):
        return self.to_hpolytope().interior

    def linear_preimage(self, F):
        return self.to_hpolytope().linear_preimage(F)

    def to_dict(self):
        return {"type": "slabbox", "v": [format_number(c) for c in self.v],
                "lo": format_number(self.lo), "hi": format_number(self.hi),
                "n": format_number(self.n)}


def body_from_dict(data: dict) -> ConvexBody:
    kind = data.get("type")
    if kind == "ball":
        return Ball(tuple(map(as_fraction, data["center"])), as_fraction(data["radius"]))
    if kind == "hpolytope":
        interior = data.get("interior")
        return HPolytope(tuple(tuple(map(as_fraction, r)) for r in data["A"]),
                         tuple(map(as_fraction, data["b"])),
                         tuple(map(as_fraction, interior)) if interior else None)
    if kind == "simplex":
        return HPolytope.from_simplex([tuple(map(as_fraction, v)) for v in data["vertices"]])
    if kind == "box":
        return HPolytope.box(tuple(map(as_fraction, data["lo"])), tuple(map(as_fraction, data["hi"])))
    if kind == "slabbox":
        return SlabBox(tuple(map(as_fraction, data["v"])), as_fraction(data["lo"]),
                       as_fraction(data["hi"]), as_fraction(data.get("n", 1)))
    raise ValueError(f"unknown body type {kind!r}")


# ---------------------------------------------------------------------------
# classification and counting

INSIDE, BOUNDARY, OUTSIDE = "inside", "boundary", "outside"


def classify_cell(K: ConvexBody, cell) -> str:
    z = np.array([list(map(int, cell))])
    corners = z + np.array(list(itertools.product((0, 1), repeat=K.dim)))
    if np.all(K.contains_points(corners)):
        return INSIDE
    if K.cells_meet(z)[0]:
        return BOUNDARY
    return OUTSIDE


@dataclass(frozen=True)
class CellScan:
    """Classes of every cell in a scan region (``corners[i]`` has class
    ``classes[i]``: 0 outside, 1 boundary, 2 inside)."""

    corners: np.ndarray
    classes: np.ndarray
    lattice_points: int


@dataclass(frozen=True)
class ClassCounts:
    inside: int
    boundary: int
    lattice_points: int
    volume: object

    def to_dict(self):
        return {"inside": str(self.inside), "boundary": str(self.boundary),
                "lattice": str(self.lattice_points), "volume": format_number(self.volume)}


def _scan_box(K: ConvexBody):
    lo, hi = K.bounds()
    # cells meeting the bounding box have corners in [ceil(lo) - 1, floor(hi)];
    # one extra layer on each side is certainly outside
    zlo = [math.ceil(x) - 2 for x in lo]
    zhi = [math.floor(x) + 1 for x in hi]
    return zlo, zhi


def scan_cells(K: ConvexBody) -> CellScan:
    """Classify every cell of the inflated integer bounding box of ``K``."""
    zlo, zhi = _scan_box(K)
    shape = tuple(b - a + 2 for a, b in zip(zlo, zhi))
    pts = _grid(zlo, [b + 1 for b in zhi])
    member = K.contains_points(pts).reshape(shape)
    d = K.dim
    inside = np.ones(tuple(s - 1 for s in shape), dtype=bool)
    anyv = np.zeros_like(inside)
    for off in itertools.product((0, 1), repeat=d):
        sl = tuple(slice(o, o + s - 1) for o, s in zip(off, shape))
        inside &= member[sl]
        anyv |= member[sl]
    corners = _grid(zlo, zhi)
    inside = inside.ravel()
    meet = anyv.ravel().copy()
    todo = np.nonzero(~meet)[0]
    if len(todo):
        meet[todo] = K.cells_meet(corners[todo])
    classes = np.where(inside, 2, np.where(meet, 1, 0)).astype(np.int8)
    return CellScan(corners, classes, int(member.sum()))


def count_cells(K: ConvexBody) -> ClassCounts:
    scan = scan_cells(K)
    return ClassCounts(
        inside=int(np.count_nonzero(scan.classes == 2)),
        boundary=int(np.count_nonzero(scan.classes == 1)),
        lattice_points=scan.lattice_points,
        volume=K.volume(),
    )


@dataclass(frozen=True)
class VolumeGap:
    gap: object
    boundary: int
    ok: bool


def check_volume_gap(K: ConvexBody, counts: ClassCounts | None = None) -> VolumeGap:
    """``|vol K - |K ∩ Z^d|| <= #boundary cells``."""
    counts = counts or count_cells(K)
    gap = abs(counts.volume - counts.lattice_points)
    return VolumeGap(gap, counts.boundary, bool(gap <= counts.boundary))


@dataclass(frozen=True)
class Monotonicity:
    inner: int
    outer: int
    ok: bool


def check_boundary_monotonicity(K: ConvexBody, L: ConvexBody, seed: int = 0,
                                samples: int = 2000) -> Monotonicity:
    """Boundary-cell count of ``K`` against that of ``L ⊇ K``.

    Inclusion is the caller's promise; it is spot-checked on sampled points
    of ``K`` and a violation raises ``ValueError``.
    """
    rng = np.random.default_rng(seed)
    X = K.sample(rng, samples)
    # float screen first, exact verdict only for the doubtful points
    doubtful = X[~L.contains_float(X)]
    if len(doubtful):
        pts = np.array([[Fraction(float(x)) for x in row] for row in doubtful], dtype=object)
        if not np.all(L.contains_points(pts)):
            raise ValueError("K is not contained in L (sampled point of K outside L)")
    bK = count_cells(K).boundary
    bL = count_cells(L).boundary
    return Monotonicity(bK, bL, bK <= bL)


def cell_report(K: ConvexBody) -> dict:
    counts = count_cells(K)
    return {"body": K.to_dict(), **counts.to_dict(), "eq_elem_ok": check_volume_gap(K, counts).ok}


# ---------------------------------------------------------------------------
# hyperplanes through inside cells


def _scaled_hyperplane(v, t):
    v = exact_vector(v)
    t = as_fraction(t)
    den = _lcm_den(v + (t,))
    return [int(c * den) for c in v], int(t * den)


def hyperplane_cells_in_body(K: ConvexBody, v, t) -> int:
    """Inside cells of ``K`` whose interior meets ``v.x = t`` (rational)."""
    for x in tuple(v) + (t,):
        if isinstance(x, float):
            raise TypeError("hyperplane must be given with rational coefficients")
    u, T = _scaled_hyperplane(v, t)
    if all(c == 0 for c in u):
        raise ValueError("zero normal")
    scan = scan_cells(K)
    Z = scan.corners[scan.classes == 2]
    if len(Z) == 0:
        return 0
    big = (int(np.max(np.abs(Z))) + 2) * sum(abs(c) for c in u) + abs(T)
    h = _int_array(Z, big) @ _int_array(u, big)
    lo = h + sum(min(0, c) for c in u)
    hi = h + sum(max(0, c) for c in u)
    return int(np.count_nonzero((lo < T) & (T < hi)))


@dataclass(frozen=True)
class BestHyperplane:
    count: int
    t: Fraction
    normal: tuple


def best_hyperplane_cells_in_body(K: ConvexBody, z) -> BestHyperplane:
    """Best threshold for an integer normal ``z``.

    The count only changes when ``t`` crosses an integer, and half-integers
    dominate their integer neighbours, so half-integer thresholds suffice.
    """
    z = [int(c) for c in z]
    scan = scan_cells(K)
    Z = scan.corners[scan.classes == 2]
    if len(Z) == 0:
        return BestHyperplane(0, Fraction(1, 2), tuple(z))
    big = (int(np.max(np.abs(Z))) + 1) * sum(abs(c) for c in z)
    h = _int_array(Z, big) @ _int_array(z, big)
    # the plane z.x = t meets cell h properly iff h + zmin < t < h + zmax,
    # so t = top + zmin + 1/2 catches the levels top - width + 1 .. top
    zmin = sum(min(0, c) for c in z)
    width = sum(abs(c) for c in z)
    hmin = int(h.min())
    hist = np.bincount(np.asarray(h - hmin, dtype=np.int64))
    csum = np.concatenate([[0], np.cumsum(hist)])
    m = len(hist)
    best, best_top = -1, 0
    for top in range(m + width - 1):
        s = int(csum[min(top + 1, m)] - csum[max(top + 1 - width, 0)])
        if s > best:
            best, best_top = s, top
    t = Fraction(hmin + best_top + zmin) + Fraction(1, 2)
    return BestHyperplane(best, t, tuple(z))


def unit_ball_v(d: int) -> float:
    """``V(B^d) = sqrt(d) * vol_{d-1}(B^{d-1})``: the central section times the
    largest ``|v|_1`` over unit ``v``."""
    kappa = math.pi ** ((d - 1) / 2) / math.gamma((d - 1) / 2 + 1)
    return math.sqrt(d) * kappa


@dataclass(frozen=True)
class MainKResult:
    n: int
    count: int
    scaled: float
    v_body: float
    relative_error: float
    t: Fraction


def mainK_experiment(n: int, normal=(1, 1)) -> MainKResult:
    """Cells of side ``1/n`` in the unit ball cut by the best hyperplane with
    the given normal, compared with ``V(K) n^{d-1}`` (run on ``n * B^d``)."""
    d = len(normal)
    K = Ball((0,) * d, n)
    best = best_hyperplane_cells_in_body(K, normal)
    scaled = best.count / n ** (d - 1)
    V = unit_ball_v(d)
    return MainKResult(n, best.count, scaled, V, abs(scaled - V) / V, best.t)


# ---------------------------------------------------------------------------
# V(K)


@dataclass(frozen=True)
class VEstimate:
    value: float
    stderr: float
    direction: tuple
    method: str


def v_of_body(K: ConvexBody, samples: int = 64, seed: int = 0, points: int = 1_000_000,
              bins: int = 400, window: int = 4) -> VEstimate:
    """``V(K) = max |v|_1 vol_{d-1}(K ∩ A(v, t))`` over unit ``v`` and ``t``.

    Balls use the closed form.  Other bodies go through Monte Carlo: a
    uniform cloud in the bounding box picks the best direction and offset
    (``samples`` random unit vectors plus the sign diagonals and the axes,
    section profiles read off a sliding thin slab), then an independent
    cloud re-estimates that section so the maximum is not biased upward.
    The standard error is binomial.
    """
    d = K.dim
    if isinstance(K, Ball):
        kappa = math.pi ** ((d - 1) / 2) / math.gamma((d - 1) / 2 + 1)
        value = math.sqrt(d) * kappa * float(K.radius) ** (d - 1)
        return VEstimate(value, 0.0, tuple([1 / math.sqrt(d)] * d), "closed-form")
    rng = np.random.default_rng(seed)
    lo, hi = (np.array([float(x) for x in b]) for b in K.bounds())
    box_vol = float(np.prod(hi - lo))

    def cloud():
        X = rng.uniform(lo, hi, size=(points, d))
        return X[K.contains_float(X)]

    X = cloud()
    dirs = [rng.normal(size=d) for _ in range(samples)]
    dirs += [np.array(s, dtype=float) for s in itertools.product((1, -1), repeat=d) if s[0] == 1]
    dirs += list(np.eye(d))
    best = (-1.0, None, 0.0, 0.0)
    for u in dirs:
        u = u / np.linalg.norm(u)
        s = X @ u
        smin, smax = s.min(), s.max()
        h = (smax - smin) / bins
        hist = np.bincount(np.minimum(((s - smin) / h).astype(int), bins - 1), minlength=bins)
        slab = np.convolve(hist, np.ones(window, dtype=int), mode="valid")
        k = int(np.argmax(slab))
        score = float(np.abs(u).sum()) * slab[k]
        if score > best[0]:
            best = (score, u, smin + k * h, smin + (k + window) * h)
    _, u, a, b = best
    s = cloud() @ u
    c = int(np.count_nonzero((s >= a) & (s < b)))
    scale = box_vol / (points * (b - a))
    l1 = float(np.abs(u).sum())
    se = math.sqrt(c * (1 - c / points)) * scale
    return VEstimate(float(l1 * c * scale), float(l1 * se), tuple(float(x) for x in u), "monte-carlo")


# ---------------------------------------------------------------------------
# F-cells


def count_fcells(K: ConvexBody, F) -> ClassCounts:
    """Inside/boundary counts for the cells of the basis ``F`` (rows f_i).

    Done by mapping ``K`` to ``{y : F^T y in K}`` and classifying unit cells;
    lattice points and volume are preserved because ``F`` is unimodular.
    """
    if isinstance(K, Ball):
        raise TypeError("F-cells are supported for polytopes and slab boxes")
    return count_cells(K.linear_preimage(F))


def report_json(K: ConvexBody) -> str:
    return json.dumps(cell_report(K), sort_keys=True)
