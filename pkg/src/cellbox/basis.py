"""Well-positioning a strip-in-box body with respect to a lattice basis.

Pipeline: an ellipsoid inscribed in the body seeds a quadratic form, LLL
under that form picks a unimodular basis ``F`` whose vectors follow the
long directions of the body, and the minimal ``F``-box of the body is then
computed exactly.  ``F``-coordinates of ``x`` are ``g_i . x`` where ``G`` is
the dual basis.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import qr

from ._numbers import as_fraction, exact_vector, format_number
from .cells import SlabBox, _det_exact
from .geometry import Slab, _coords
from .lattice import _primitive_scaling, level_counts

LLL_DELTA = Fraction(99, 100)


# ---------------------------------------------------------------------------
# inscribed ball of a slice and inscribed ellipsoid of a strip


@dataclass(frozen=True)
class SliceBall:
    center: tuple | None
    radius: float
    feasible: bool


def _unit_reflected(v, t, n):
    """Unit normal with nonnegative entries, threshold in Euclidean units and
    the reflected coordinates (``x_i -> n - x_i``)."""
    v = [float(c) for c in _coords(v)]
    norm = math.sqrt(math.fsum(c * c for c in v))
    flips = [c < 0 for c in v]
    t = float(t) - sum(c * n for c in v if c < 0)
    return [abs(c) / norm for c in v], t / norm, flips


def slice_chebyshev(v, t, n=1) -> SliceBall:
    """Largest ball of the slice ``{v.x = t} ∩ [0, n]^d`` within its hyperplane.

    An in-plane ball of radius ``r`` reaches ``r * s_i`` along axis ``i`` with
    ``s_i = sqrt(1 - u_i^2)`` for the unit normal ``u``, so it fits iff its
    center lies in the shrunk box ``[r s_i, n - r s_i]``.  The shrunk box
    meets the plane while ``sum u_i r s_i <= t <= sum u_i (n - r s_i)``,
    which gives the optimal radius in closed form.
    """
    n = float(n)
    u, t, flips = _unit_reflected(v, t, n)
    s = [math.sqrt(max(0.0, 1 - c * c)) for c in u]
    top = n * math.fsum(u)
    if not 0 < t < top:
        return SliceBall(None, 0.0, False)
    us = math.fsum(a * b for a, b in zip(u, s))
    caps = [n / (2 * si) for si in s if si > 0]
    if us > 0:
        caps += [t / us, (top - t) / us]
    r = min(caps)
    lo = [r * si for si in s]
    hi = [n - r * si for si in s]
    span = math.fsum(a * (h - l) for a, h, l in zip(u, hi, lo))
    lam = (t - math.fsum(a * l for a, l in zip(u, lo))) / span if span > 0 else 0.5
    lam = min(1.0, max(0.0, lam))
    center = [l + lam * (h - l) for l, h in zip(lo, hi)]
    center = tuple(n - c if f else c for c, f in zip(center, flips))
    return SliceBall(center, r, True)


@dataclass(frozen=True)
class EllipsoidSpec:
    """``{center + shape^{1/2} y : |y| <= 1}``."""

    center: np.ndarray
    shape: np.ndarray
    degenerate: bool = False
    axis_aligned: bool = False

    def half_axes(self) -> np.ndarray:
        return np.sqrt(np.clip(np.linalg.eigvalsh(self.shape), 0, None))

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        d = len(self.center)
        y = rng.normal(size=(m, d))
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        y *= rng.uniform(size=(m, 1)) ** (1 / d)
        w, Q = np.linalg.eigh(self.shape)
        root = Q @ np.diag(np.sqrt(np.clip(w, 0, None))) @ Q.T
        return self.center + y @ root


def strip_ellipsoid(slab: Slab, n=1) -> EllipsoidSpec:
    """Ellipsoid inside ``slab ∩ [0, n]^d``: the inscribed ball of the middle
    slice, shrunk so that it survives being thickened to the strip width."""
    v = [float(c) for c in slab.v]
    d = len(v)
    n = float(n)
    norm = math.sqrt(math.fsum(c * c for c in v))
    t_hi, t_lo = float(slab.t), float(slab.t) - float(slab.width)
    nonzero = [i for i, c in enumerate(v) if c != 0]
    if len(nonzero) == 1:
        # the body is a box: its inscribed ellipsoid is exact
        i = nonzero[0]
        a, b = sorted((t_lo / v[i], t_hi / v[i]))
        a, b = max(a, 0.0), min(b, n)
        if a >= b:
            raise ValueError("slab misses the box")
        center = np.full(d, n / 2)
        center[i] = (a + b) / 2
        half = np.full(d, n / 2)
        half[i] = (b - a) / 2
        return EllipsoidSpec(center, np.diag(half ** 2), False, True)
    u = np.array(v) / norm
    w = float(slab.width) / (2 * norm)
    ball = slice_chebyshev(v, (t_hi + t_lo) / 2, n)
    if not ball.feasible:
        raise ValueError("middle slice of the strip misses the box")
    s = np.sqrt(1 - u * u)
    rho0 = max(0.0, ball.radius - w * float(np.max(np.abs(u) / s)))
    P = np.outer(u, u)
    shape = rho0 ** 2 * (np.eye(d) - P) + w ** 2 * P
    return EllipsoidSpec(np.array(ball.center), shape, rho0 == 0.0)


# ---------------------------------------------------------------------------
# LLL


def _exact_inverse(M):
    d = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(d)] for i, row in enumerate(M)]
    for col in range(d):
        piv = next((r for r in range(col, d) if A[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular matrix")
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [x / p for x in A[col]]
        for r in range(d):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [row[d:] for row in A]


def _gso(B, M):
    """Gram-Schmidt data (``mu``, squared norms) of rows ``B`` under ``<x, y> = x^T M y``.

    Works for floats and for ``Fraction`` alike.
    """
    d = len(B)
    MB = [[sum(M[i][k] * b[k] for k in range(d)) for i in range(d)] for b in B]
    G = [[sum(bi[k] * mbj[k] for k in range(d)) for mbj in MB] for bi in B]
    mu = [[0] * d for _ in range(d)]
    norms = [0] * d
    for i in range(d):
        for j in range(i):
            mu[i][j] = (G[i][j] - sum(mu[j][k] * mu[i][k] * norms[k] for k in range(j))) / norms[j]
        norms[i] = G[i][i] - sum(mu[i][k] ** 2 * norms[k] for k in range(i))
    return mu, norms


def _lll(B, M, delta):
    B = [list(row) for row in B]
    d = len(B)
    k = 1
    steps = 0
    while k < d:
        steps += 1
        if steps > 100_000:
            raise ArithmeticError("LLL did not terminate")
        mu, _ = _gso(B, M)
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                B[k] = [a - q * b for a, b in zip(B[k], B[j])]
                mu, _ = _gso(B, M)
        mu, norms = _gso(B, M)
        if norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            B[k], B[k - 1] = B[k - 1], B[k]
            k = max(k - 1, 1)
    return B


def is_lll_reduced(B, M, delta=LLL_DELTA) -> bool:
    """Exact check of size reduction and the Lovász condition."""
    mu, norms = _gso(B, M)
    d = len(B)
    for i in range(d):
        if any(abs(mu[i][j]) > Fraction(1, 2) for j in range(i)):
            return False
        if i and norms[i] < (delta - mu[i][i - 1] ** 2) * norms[i - 1]:
            return False
    return True


def lll_reduce(basis, gram) -> list[list[int]]:
    """LLL-reduce the rows of ``basis`` under ``<x, y> = x^T gram^{-1} y``.

    Long axes of the ellipsoid ``gram`` become cheap, so the reduced basis
    follows them.  The float run is certified exactly and redone in
    rational arithmetic if the certificate fails.
    """
    B = [[int(x) for x in row] for row in basis]
    d = len(B)
    if any(len(row) != d for row in B) or abs(_det_exact(B)) != 1:
        raise ValueError("basis must be a square unimodular integer matrix")
    g = np.asarray(gram, dtype=float)
    if g.shape != (d, d) or not np.allclose(g, g.T):
        raise ValueError("gram must be a symmetric d x d matrix")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise ValueError("gram must be positive definite") from None
    gx = [[(Fraction(g[i, j]) + Fraction(g[j, i])) / 2 for j in range(d)] for i in range(d)]
    M_exact = _exact_inverse(gx)
    M_float = [[float(x) for x in row] for row in M_exact]
    out = None
    try:
        out = _lll(B, M_float, float(LLL_DELTA))
    except (ArithmeticError, ZeroDivisionError):
        out = None
    if out is None or not is_lll_reduced(out, M_exact):
        out = _lll(B, M_exact, LLL_DELTA)
    if abs(_det_exact(out)) != 1:
        raise ArithmeticError("reduction lost unimodularity")
    return out


def dual_basis(F) -> list[list[int]]:
    """Rows ``g_i`` with ``g_i . f_j = delta_ij``, i.e. ``(F^{-1})^T``, exact."""
    F = [[int(x) for x in row] for row in F]
    d = len(F)
    det = _det_exact(F)
    if abs(det) != 1:
        raise ValueError("basis is not unimodular")
    inv = _exact_inverse(F)
    return [[int(inv[j][i]) for j in range(d)] for i in range(d)]


# ---------------------------------------------------------------------------
# minimal F-box


def _knapsack_max(c, K: SlabBox):
    """Maximize ``c.x`` over ``{0 <= x <= n, lo <= v.x <= hi}`` exactly.

    Start at the box optimum; if the slab constraint is violated, move the
    coordinates in order of objective lost per unit of ``v.x`` recovered
    until the constraint is met.  One linear constraint makes this greedy
    optimal.  Returns ``(value, point)``.
    """
    v, n = K.v, K.n
    d = len(v)
    c = [as_fraction(x) for x in c]
    x = [n if ci > 0 else Fraction(0) for ci in c]
    s = sum(a * b for a, b in zip(v, x))
    if s > K.hi:
        need, sign = s - K.hi, -1
    elif s < K.lo:
        need, sign = K.lo - s, 1
    else:
        return sum(a * b for a, b in zip(c, x)), tuple(x)
    # moves that shift v.x by `sign`: (cost per unit of v.x, index)
    moves = []
    for j in range(d):
        if v[j] == 0:
            continue
        step_up = (v[j] > 0) == (sign > 0)  # raise x_j to move v.x the right way
        room = n - x[j] if step_up else x[j]
        if room > 0:
            moves.append((-sign * c[j] / v[j], j, step_up, room))
    moves.sort()
    for _, j, step_up, room in moves:
        if need <= 0:
            break
        gain = room * abs(v[j])
        take = min(gain, need)
        delta = take / abs(v[j])
        x[j] += delta if step_up else -delta
        need -= take
    if need > 0:
        raise ValueError("slab does not meet the box")
    return sum(a * b for a, b in zip(c, x)), tuple(x)


@dataclass(frozen=True)
class MinimalBox:
    alpha: tuple
    beta: tuple
    gamma: tuple
    argmin: tuple = field(repr=False)
    argmax: tuple = field(repr=False)

    @property
    def volume(self) -> Fraction:
        return math.prod(self.gamma, start=Fraction(1))


def minimal_box(K: SlabBox, F) -> MinimalBox:
    """Tightest ``F``-box around ``K``: ``alpha_i = min g_i.x``, ``beta_i = max g_i.x``."""
    G = dual_basis(F)
    alpha, beta, lo_pts, hi_pts = [], [], [], []
    for g in G:
        top, xmax = _knapsack_max(g, K)
        neg, xmin = _knapsack_max([-a for a in g], K)
        alpha.append(-neg)
        beta.append(top)
        lo_pts.append(xmin)
        hi_pts.append(xmax)
    gamma = tuple(b - a for a, b in zip(alpha, beta))
    return MinimalBox(tuple(alpha), tuple(beta), gamma, tuple(lo_pts), tuple(hi_pts))


def box_ratio(K: SlabBox, F) -> tuple[MinimalBox, Fraction]:
    box = minimal_box(K, F)
    return box, box.volume / K.volume()


@dataclass(frozen=True)
class WellPositioned:
    basis: list
    box: MinimalBox
    ratio: Fraction
    standard_ratio: Fraction
    used_fallback: bool
    degenerate_ellipsoid: bool

    def to_dict(self, K: SlabBox) -> dict:
        return {"gamma": [format_number(g) for g in self.box.gamma],
                "volK": format_number(K.volume()),
                "volBox": format_number(self.box.volume),
                "ratio": format_number(float(self.ratio)),
                "basis": [[str(x) for x in row] for row in self.basis]}


def well_position(K: SlabBox) -> WellPositioned:
    """Reduced basis for ``K`` and its minimal box, or the standard basis if
    that gives a smaller box."""
    d = K.dim
    identity = [[int(i == j) for j in range(d)] for i in range(d)]
    std_box, std_ratio = box_ratio(K, identity)
    ell = strip_ellipsoid(K.slab(), K.n)
    if ell.degenerate:
        return WellPositioned(identity, std_box, std_ratio, std_ratio, True, True)
    F = lll_reduce(identity, ell.shape)
    box, ratio = box_ratio(K, F)
    if std_ratio <= ratio:
        return WellPositioned(identity, std_box, std_ratio, std_ratio, True, False)
    return WellPositioned(F, box, ratio, std_ratio, False, False)


# ---------------------------------------------------------------------------
# lattice points against volume


def boundary_fcell_estimate(gamma) -> Fraction:
    """``2 * sum_i prod_{j != i} (gamma_j + 2)``."""
    g = [as_fraction(x) for x in gamma]
    if any(x < 0 for x in g):
        raise ValueError("gamma entries must be nonnegative")
    return 2 * sum(math.prod((g[j] + 2 for j in range(len(g)) if j != i), start=Fraction(1))
                   for i in range(len(g)))


def lattice_count(K: SlabBox) -> int:
    """Exact ``|K ∩ Z^d|`` for the closed slab-box (integer ``n``)."""
    if K.n.denominator != 1:
        raise ValueError("lattice counting needs an integer box side")
    u, lam = _primitive_scaling(K.v)
    lo, hi = K.lo / lam, K.hi / lam
    lc = level_counts(u, int(K.n) + 1)
    return lc.window_sum(math.ceil(lo), math.floor(hi))


def _lattice_points(K: SlabBox):
    """Lattice points of ``K`` as an integer array, one slab of ``x_0`` at a time."""
    n = int(K.n)
    d = K.dim
    V = np.array([int(c * K._den) for c in K.v], dtype=object if n * K._den * max(map(abs, K._V)) * d > 2 ** 60 else np.int64)
    rest = np.indices((n + 1,) * (d - 1)).reshape(d - 1, -1).T if d > 1 else np.zeros((1, 0), dtype=np.int64)
    for x0 in range(n + 1):
        P = np.hstack([np.full((len(rest), 1), x0), rest])
        s = P @ V
        yield P[(s >= K._L) & (s <= K._U)]


def affine_witness(K: SlabBox):
    """``d + 1`` affinely independent lattice points of ``K``, or ``None``."""
    d = K.dim
    pts = []
    for chunk in _lattice_points(K):
        if len(chunk) == 0:
            continue
        pts.append(chunk)
        allp = np.concatenate(pts)
        diffs = (allp[1:] - allp[0]).astype(float)
        if len(diffs) < d or np.linalg.matrix_rank(diffs) < d:
            # keep only a pivoted subset so the pool stays small
            if len(diffs):
                _, _, piv = qr(diffs.T, pivoting=True)
                r = np.linalg.matrix_rank(diffs)
                pts = [np.vstack([allp[:1], allp[1:][piv[:r]]])]
            continue
        _, _, piv = qr(diffs.T, pivoting=True)
        chosen = [allp[0]] + [allp[1:][p] for p in piv[:d]]
        M = [[int(a) - int(b) for a, b in zip(p, chosen[0])] for p in chosen[1:]]
        if _det_exact(M) != 0:
            return [tuple(int(x) for x in p) for p in chosen]
    return None


@dataclass(frozen=True)
class BasicCheck:
    gap: object
    bound: object
    ratio: float | None
    lattice_points: int
    volume: object
    gamma: tuple
    status: str
    witness: list | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def check_basic_inequality(K: SlabBox, F) -> BasicCheck:
    """``|vol K - |K ∩ Z^d||`` against ``vol K * sum 1/gamma_i``.

    The hidden constant of the estimate is unknown, so the ratio is reported
    rather than judged.  A body without ``d + 1`` affinely independent
    lattice points yields status ``"nondeg violated"``.
    """
    vol = K.volume()
    count = lattice_count(K)
    box = minimal_box(K, F)
    witness = affine_witness(K)
    gap = abs(vol - count)
    if witness is None:
        return BasicCheck(gap, None, None, count, vol, box.gamma, "nondeg violated")
    bound = vol * sum(1 / g for g in box.gamma)
    return BasicCheck(gap, bound, float(gap / bound), count, vol, box.gamma, "ok", witness)


def report_json(K: SlabBox) -> str:
    return json.dumps(well_position(K).to_dict(K), sort_keys=True)

