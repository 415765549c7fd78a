"""Volumes of halfspace, hyperplane-slice and strip sections of the box
``Q_n = [0, n]^d``, and the normalized central-section functional
``V_d(v) = |v|_1 / |v| * max_t vol_{d-1}(A(v, t) ∩ Q_1)``.

All section volumes come from the inclusion-exclusion closed form

    vol{x in Q_n : v.x <= t} = 1/(d! prod v_i) * sum_S (-1)^|S| (t - n v(S))_+^d

for positive ``v``, whose ``t``-derivative gives the slice volume.  Exact
inputs (``int``/``Fraction``) give exact results.  Float inputs use
``math.fsum`` plus a forward error bound; when the bound is too loose the
computation is repeated exactly on the binary values of the floats.
"""
from __future__ import annotations

import math
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from ._numbers import all_exact, as_fraction, exact_vector, simplify

MAX_FLOAT_DIM = 64
_EPS = 2.0 ** -52
_REL_TOL = 1e-10
_LD_EPS = float(np.finfo(np.longdouble).eps)


@dataclass(frozen=True)
class Direction:
    """A nonzero normal vector.  Coordinates may be exact or floating."""

    coords: tuple

    def __post_init__(self):
        coords = tuple(self.coords)
        if not coords:
            raise ValueError("direction needs at least one coordinate")
        if all(c == 0 for c in coords):
            raise ValueError("zero vector is not a direction")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def exact(self) -> bool:
        return all_exact(self.coords)

    def positive(self) -> tuple["Direction", tuple[bool, ...]]:
        """Positive-normalized copy and the coordinates that were reflected."""
        flips = tuple(c < 0 for c in self.coords)
        return Direction(tuple(-c if f else c for c, f in zip(self.coords, flips))), flips

    def norm(self) -> float:
        return math.sqrt(math.fsum(float(c) ** 2 for c in self.coords))

    def norm1(self):
        return sum(abs(c) for c in self.coords)


def _coords(v) -> tuple:
    if isinstance(v, Direction):
        return v.coords
    return Direction(tuple(v)).coords


@dataclass(frozen=True)
class Slab:
    """The open region ``t - width < v.x < t``; width is in ``v.x`` units."""

    v: tuple
    t: object
    width: object

    def __post_init__(self):
        object.__setattr__(self, "v", _coords(self.v))
        if not self.width > 0:
            raise ValueError("slab width must be positive")


class CentralParams(NamedTuple):
    t0: object
    t1: object
    t2: object


# ---------------------------------------------------------------------------
# inclusion-exclusion kernel


def _signed_subset_sums(values, limit, n):
    """Signed multiset of subset sums ``v(S)`` with ``n * v(S) < limit``.

    Equal coordinates are grouped, so ``v = e`` needs only ``d + 1`` states.
    """
    states = {0: 1}
    for w, mult in sorted(Counter(values).items()):
        nxt = defaultdict(int)
        for s, c in states.items():
            for k in range(mult + 1):
                sk = s + k * w
                if n * sk >= limit:
                    break
                nxt[sk] += c * math.comb(mult, k) * (-1 if k % 2 else 1)
        states = {s: c for s, c in nxt.items() if c}
    return states


def _alternating_sum_exact(v, t, n, power):
    """Exact ``sum_S (-1)^|S| (t - n v(S))_+^power`` over the rationals.

    Everything is scaled to one common denominator so the inner loop runs on
    Python integers rather than ``Fraction`` objects.
    """
    steps = [n * c for c in v]
    den = math.lcm(t.denominator, *(a.denominator for a in steps))
    scaled = [int(a * den) for a in steps]
    top = int(t * den)
    total = 0
    for s, c in _signed_subset_sums(scaled, top, 1).items():
        total += c * (top - s) ** power
    return Fraction(total, den ** power)


def _float_states(v, t, n):
    if len(set(v)) < len(v):
        states = _signed_subset_sums(v, t, n)
        return np.fromiter(states.keys(), float), np.fromiter(states.values(), float)
    sums = np.zeros(1)
    signs = np.ones(1)
    for w in v:
        grown = sums + w
        keep = n * grown < t
        sums = np.concatenate((sums, grown[keep]))
        signs = np.concatenate((signs, -signs[keep]))
    return sums, signs


def _alternating_sum_float(v, t, n, power):
    """Return ``(sum, error_bound)``, accumulated in extended precision."""
    sums, signs = _float_states(v, t, n)
    ld = np.longdouble
    base = ld(t) - ld(n) * sums.astype(ld)
    terms = signs.astype(ld) * base ** power
    fbase = base.astype(float)
    # relative error of each term; zero terms contribute nothing
    ratio = np.divide(abs(t) + np.abs(n * sums), fbase, out=np.zeros_like(fbase), where=fbase > 0)
    cond = power * ratio + 2.0 + math.log2(len(terms) + 1)
    bound = float(np.sum(np.abs(terms).astype(float) * cond)) * _LD_EPS
    return float(np.sum(terms)), bound


def _box_sum(v, t, n, power):
    """``sum_S (-1)^|S| (t - n v(S))_+^power / (power! prod v)`` for v > 0.

    Returned exactly when every input is exact, as float otherwise.
    """
    if all_exact(v) and all_exact((t, n)):
        v = exact_vector(v)
        total = _alternating_sum_exact(v, as_fraction(t), as_fraction(n), power)
        return total / (math.factorial(power) * math.prod(v))
    if len(v) > MAX_FLOAT_DIM:
        raise ValueError(f"floating path is capped at d <= {MAX_FLOAT_DIM}")
    fv = [float(x) for x in v]
    ft, fn = float(t), float(n)
    total, err = _alternating_sum_float(fv, ft, fn, power)
    if err > _REL_TOL * abs(total):
        # cancellation ate the digits; floats are exact rationals, redo exactly
        exact = _alternating_sum_exact(exact_vector(fv), Fraction(ft), Fraction(fn), power)
        return float(exact / (math.factorial(power) * math.prod(exact_vector(fv))))
    return total / (math.factorial(power) * math.prod(fv))


def _reduce(v, t, n):
    """Reflect negative coordinates and drop zero ones.

    Returns ``(positive nonzero coords, shifted t, number of zero coords)``.
    Reflection ``x_i -> n - x_i`` maps the box to itself and changes the
    threshold by ``-n * v_i``.
    """
    shift = sum(n * c for c in v if c < 0)
    pos = [abs(c) for c in v if c != 0]
    return pos, t - shift, len(v) - len(pos)


def _scalar(x):
    return simplify(x) if isinstance(x, Fraction) else x


# ---------------------------------------------------------------------------
# public volumes


def halfspace_box_volume(v, t, n=1):
    """Volume of ``{x in [0, n]^d : v.x <= t}`` for strictly positive ``v``.

    >>> halfspace_box_volume((1, 1), 1)
    Fraction(1, 2)
    """
    v = _coords(v)
    if any(c <= 0 for c in v):
        raise ValueError("halfspace_box_volume needs all coordinates > 0; factor out zeros first")
    if not n > 0:
        raise ValueError("box side n must be positive")
    return _halfspace_general(v, t, n)


def _halfspace_general(v, t, n):
    pos, t, zeros = _reduce(v, t, n)
    d = len(pos)
    exact = all_exact(pos) and all_exact((t, n))
    prism = n ** zeros
    if t <= 0:
        return Fraction(0) if exact else 0.0
    top = sum(n * c for c in pos)
    if t >= top:
        full = n ** d * prism
        return Fraction(full) if exact else float(full)
    core = _box_sum(pos, t, n, d)
    return core * prism


def slice_volume(v, t, n=1):
    """True ``(d-1)``-volume of ``A(v, t) ∩ [0, n]^d``.

    Any nonzero ``v`` is accepted; the result is scale invariant in ``(v, t)``.
    Exact (``Fraction``) when the inputs are exact and ``|v|`` is rational,
    float otherwise.
    """
    v = _coords(v)
    if not n > 0:
        raise ValueError("box side n must be positive")
    pos, t, zeros = _reduce(v, t, n)
    d = len(pos)
    exact = all_exact(pos) and all_exact((t, n))
    top = sum(n * c for c in pos)
    if t < 0 or t > top:
        return Fraction(0) if exact else 0.0
    prism = n ** zeros
    if d == 1:
        # the slice is a whole facet-parallel section of the prism
        return Fraction(prism) if exact else float(prism)
    core = _box_sum(pos, t, n, d - 1) * prism
    return _times_norm(core, v)


def _times_norm(core, v):
    if isinstance(core, Fraction):
        sq = sum(as_fraction(c) ** 2 for c in v)
        num, den = math.isqrt(sq.numerator), math.isqrt(sq.denominator)
        if num * num == sq.numerator and den * den == sq.denominator:
            return core * Fraction(num, den)
        return float(core) * math.sqrt(sq)
    return core * math.sqrt(math.fsum(float(c) ** 2 for c in v))


def strip_volume(slab: Slab, n=1):
    """Volume of ``slab ∩ [0, n]^d``, clamped to ``[0, n^d]``."""
    if not n > 0:
        raise ValueError("box side n must be positive")
    v = slab.v
    hi = _halfspace_general(v, slab.t, n)
    lo = _halfspace_general(v, slab.t - slab.width, n)
    vol = hi - lo
    full = n ** len(v)
    exact = isinstance(vol, Fraction)
    if vol < 0:
        return Fraction(0) if exact else 0.0
    if vol > full:
        return Fraction(full) if exact else float(full)
    return vol


def central_params(v, n=1) -> CentralParams:
    """Thresholds of the central slice ``t0`` and of the central strip
    ``(t1, t2)``, whose width is ``|v|_1``."""
    v = _coords(v)
    if all_exact(v) and all_exact((n,)):
        v = exact_vector(v)
        t0 = as_fraction(n) * sum(v) / 2
        half = sum(abs(c) for c in v) / 2
        return CentralParams(_scalar(t0), _scalar(t0 - half), _scalar(t0 + half))
    t0 = float(n) * math.fsum(map(float, v)) / 2
    half = math.fsum(abs(float(c)) for c in v) / 2
    return CentralParams(t0, t0 - half, t0 + half)


def vd_of_direction(v):
    """``V_d(v)``: ``|v|_1 / |v|`` times the central unit-cube section volume.

    The ``|v|`` factors cancel, so rational ``v`` yields an exact rational.

    >>> vd_of_direction((1, 1, 1))
    Fraction(9, 4)
    """
    v = _coords(v)
    pos = [abs(c) for c in v if c != 0]
    d = len(pos)
    exact = all_exact(pos)
    if d == 1:
        return Fraction(1) if exact else 1.0
    l1 = sum(pos)
    t0 = l1 / 2 if not exact else Fraction(l1) / 2
    core = _box_sum(pos, t0, 1, d - 1)
    return l1 * core


# ---------------------------------------------------------------------------
# maximizing V_d over the sphere


@dataclass
class VdMaxResult:
    direction: tuple
    value: float
    converged: bool
    starts: int
    evaluations: int
    message: str = ""
    values: list = field(default_factory=list, repr=False)

    def __iter__(self):
        yield self.direction
        yield self.value


def _sphere_point(theta):
    # softmax weights on the positive orthant; the last logit is pinned to 0
    z = np.append(theta, 0.0)
    z = z - z.max()
    w = np.exp(z)
    return np.sqrt(w / w.sum())


def vd_max(d: int, starts: int = 32, seed: int = 0, tol: float = 1e-10,
           maxiter: int = 20000) -> VdMaxResult:
    """Multi-start Nelder-Mead maximization of ``V_d`` over unit ``v >= 0``.

    Starts are drawn from a seeded generator and reduced in start order;
    ties within ``1e-9`` go to the lexicographically smallest direction.
    Non-convergence is reported on the result (and warned), never hidden.
    """
    if d < 2:
        raise ValueError("vd_max needs d >= 2")
    if starts < 1:
        raise ValueError("need at least one start")
    rng = np.random.default_rng(seed)
    evals = 0

    def objective(theta):
        nonlocal evals
        evals += 1
        return -float(vd_of_direction(tuple(_sphere_point(theta))))

    opts = {"xatol": tol, "fatol": tol * 1e-2, "maxiter": maxiter, "maxfev": maxiter}
    found = []
    for theta0 in rng.normal(scale=1.5, size=(starts, d - 1)):
        res = minimize(objective, theta0, method="Nelder-Mead", options=opts)
        # a restart shakes the simplex loose from kinks of the objective
        res2 = minimize(objective, res.x, method="Nelder-Mead", options=opts)
        best = res2 if res2.fun <= res.fun else res
        found.append((-best.fun, tuple(map(float, _sphere_point(best.x))), bool(res2.success)))

    top = max(val for val, _, _ in found)
    tied = [f for f in found if f[0] >= top - 1e-9]
    value, direction, ok = min(tied, key=lambda f: f[1])
    message = "" if ok else "Nelder-Mead hit its iteration limit; returning best-so-far"
    if not ok:
        warnings.warn(message, RuntimeWarning, stacklevel=2)
    return VdMaxResult(direction=direction, value=value, converged=ok, starts=starts,
                       evaluations=evals, message=message, values=[f[0] for f in found])
