"""Seeded random bodies and the property suites built on them.

Parameters use awkward denominators (997, 991, 97, 89) so that exact
tangencies between a body and the integer grid are practically excluded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cells import (Ball, ConvexBody, HPolytope, SlabBox, _det_exact,
                    check_boundary_monotonicity, check_volume_gap, count_cells)


def _rational(rng, lo: float, hi: float, den: int) -> Fraction:
    return Fraction(int(rng.integers(math.ceil(lo * den), math.floor(hi * den) + 1)), den)


def random_ball(rng: np.random.Generator, d: int) -> Ball:
    center = tuple(_rational(rng, 0, 6, 997) for _ in range(d))
    return Ball(center, _rational(rng, 0.6, 3.0, 991))


def random_simplex(rng: np.random.Generator, d: int) -> HPolytope:
    while True:
        V = [tuple(_rational(rng, 0, 6, 97) for _ in range(d)) for _ in range(d + 1)]
        det = _det_exact([[a - b for a, b in zip(v, V[0])] for v in V[1:]])
        # avoid slivers: the volume should not be tiny
        if abs(det) / math.factorial(d) > Fraction(1, 2):
            return HPolytope.from_simplex(V)


def random_slabbox(rng: np.random.Generator, d: int) -> SlabBox:
    while True:
        v = tuple(int(c) for c in rng.integers(-4, 5, size=d))
        if any(v):
            break
    n = int(rng.integers(2, 6))
    vmin = n * sum(min(0, c) for c in v)
    vmax = n * sum(max(0, c) for c in v)
    lo = _rational(rng, vmin - 0.4, vmax - 0.5, 89)
    width = _rational(rng, 0.5, max(1.0, (vmax - vmin) / 2), 83)
    return SlabBox(v, lo, lo + width, n)


GENERATORS = {"ball": random_ball, "simplex": random_simplex, "slabbox": random_slabbox}


def random_body(rng: np.random.Generator, d: int, kind: str | None = None) -> ConvexBody:
    kind = kind or ("ball", "simplex", "slabbox")[int(rng.integers(3))]
    return GENERATORS[kind](rng, d)


def nested_pair(rng: np.random.Generator, d: int, kind: str | None = None):
    """``(K, L)`` with ``K`` a homothetic shrink of ``L`` (factor 0.3 to 0.9)
    about an interior point, hence ``K ⊆ L``."""
    L = random_body(rng, d, kind)
    factor = _rational(rng, 0.3, 0.9, 101)
    return L.shrink(L.interior_point(), factor), L


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    ok: bool
    details: str


def elem_suite(cases: int = 200, seed: int = 0, dims=(2, 3)) -> list[CaseResult]:
    """``|vol K - |K ∩ Z^d|| <= #boundary cells`` on random exact-volume bodies."""
    out = []
    for i in range(cases):
        rng = np.random.default_rng([seed, i])
        d = dims[i % len(dims)]
        K = random_body(rng, d)
        counts = count_cells(K)
        res = check_volume_gap(K, counts)
        out.append(CaseResult(f"elem-{i}", res.ok,
                              f"{K.kind} d={d} gap={float(res.gap):.6g} boundary={res.boundary}"))
    return out


def monotone_suite(cases: int = 200, seed: int = 0, dims=(2, 3)) -> list[CaseResult]:
    """Boundary-cell monotonicity on random nested pairs."""
    out = []
    for i in range(cases):
        rng = np.random.default_rng([seed, i])
        d = dims[i % len(dims)]
        K, L = nested_pair(rng, d)
        res = check_boundary_monotonicity(K, L, seed=i)
        out.append(CaseResult(f"monotone-{i}", res.ok,
                              f"{L.kind} d={d} bK={res.inner} bL={res.outer}"))
    return out


def random_thin_strip(rng: np.random.Generator, d: int, n: int = 50) -> SlabBox:
    """Strip of width ``|v|_1`` (in ``v.x`` units) near the center of ``[0, n]^d``,
    with a random primitive normal having at least two nonzero entries."""
    while True:
        z = [int(c) for c in rng.integers(-6, 7, size=d)]
        if sum(c != 0 for c in z) >= 2 and math.gcd(*z) == 1:
            break
    w = sum(abs(c) for c in z)
    mid = Fraction(n * sum(z), 2) + Fraction(int(rng.integers(-200, 201)), 97) * w
    return SlabBox(tuple(z), mid - Fraction(w, 2), mid + Fraction(w, 2), n)
