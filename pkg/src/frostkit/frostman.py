"""Frostman measures on dyadic CubeSets.

``greedy_frostman`` builds a measure supported on a CubeSet with
``nu(Q) <= side(Q)**s`` for every dyadic cube of level ``0..L``; its total
mass is the dyadic ``s``-content of the set.  ``ball_growth_normalize``
converts the cube bound into a ball bound at the represented scales.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .ballratio import RatioSup, ratio_sup
from .dyadic import AtomicMeasure, CubeSet, DyadicCube


class EnumerationTooLarge(ValueError):
    """Raised instead of silently truncating a brute-force enumeration."""


@dataclass(frozen=True)
class DyadicContent:
    s: float
    value: float
    witness: tuple  # antichain of DyadicCube

    def __post_init__(self):
        object.__setattr__(self, "witness", tuple(sorted(self.witness)))


def _check_exponent(s: float, n: int):
    if not 0 < s < n:
        raise ValueError(f"exponent s={s} must satisfy 0 < s < n={n}")


def _groups(keys: np.ndarray):
    """Start offsets and member order of equal rows of ``keys``."""
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(len(uniq) + 1))
    return uniq, order, bounds


def _cap_slice(masses: np.ndarray, members: np.ndarray, cap: float) -> None:
    total = math.fsum(masses[members])
    if total <= cap:
        return
    masses[members] *= cap / total
    shrink = math.nextafter(1.0, 0.0)
    while math.fsum(masses[members]) > cap:
        masses[members] *= shrink


def greedy_frostman(S: CubeSet, s: float) -> AtomicMeasure:
    """Frostman measure on ``S`` by bottom-up proportional capping.

    Every member starts with mass ``2**(-L s)``; sweeping levels ``L-1 .. 0``,
    the descendants of any cube whose mass exceeds ``side**s`` are scaled
    down onto the cap.  Scaling never raises a mass, so caps checked at
    finer levels stay satisfied.
    """
    if len(S) == 0:
        raise ValueError("CubeSet is empty")
    _check_exponent(s, S.n)
    L = S.level
    idx = S.indices
    masses = np.full(len(idx), 2.0 ** (-L * s))
    for j in range(L - 1, -1, -1):
        cap = 2.0 ** (-j * s)
        _, order, bounds = _groups(idx >> (L - j))
        for g in range(len(bounds) - 1):
            _cap_slice(masses, order[bounds[g] : bounds[g + 1]], cap)
    return AtomicMeasure(S.centers(), masses, r_min=S.side, n=S.n)


def greedy_content(S: CubeSet, s: float) -> DyadicContent:
    """Dyadic content by the tree recursion ``c(Q) = min(side(Q)^s, sum c(children))``."""
    if len(S) == 0:
        raise ValueError("CubeSet is empty")
    L = S.level
    achieved = {(L, tuple(m)): 2.0 ** (-L * s) for m in S}
    children: dict = {}
    frontier = {tuple(m) for m in S}
    for j in range(L - 1, -1, -1):
        parents: dict = {}
        for m in frontier:
            parents.setdefault(tuple(i >> 1 for i in m), []).append(m)
        for par, kids in parents.items():
            total = math.fsum(achieved[(j + 1, k)] for k in kids)
            achieved[(j, par)] = min(2.0 ** (-j * s), total)
            children[(j, par)] = sorted(kids)
        frontier = set(parents)

    witness = []
    stack = [(0, r) for r in sorted(frontier)]
    while stack:
        j, q = stack.pop()
        if j == L or achieved[(j, q)] >= 2.0 ** (-j * s):
            witness.append(DyadicCube(j, q))
        else:
            stack.extend((j + 1, k) for k in children[(j, q)])
    value = math.fsum(c.side**s for c in witness)
    return DyadicContent(s, value, tuple(witness))


def _cover_tree(S: CubeSet):
    L = S.level
    kids: dict = {}
    frontier = {tuple(m) for m in S}
    for j in range(L - 1, -1, -1):
        parents: dict = {}
        for m in frontier:
            parents.setdefault(tuple(i >> 1 for i in m), []).append(m)
        for par, ks in parents.items():
            kids[(j, par)] = sorted(ks)
        frontier = set(parents)
    return kids, sorted(frontier)


def count_antichain_covers(S: CubeSet) -> int:
    kids, roots = _cover_tree(S)
    L = S.level

    def count(j, q):
        if j == L:
            return 1
        return 1 + math.prod(count(j + 1, k) for k in kids[(j, q)])

    return math.prod(count(0, r) for r in roots)


def dyadic_content_bruteforce(S: CubeSet, s: float, max_covers: int = 1_000_000) -> DyadicContent:
    """Minimum of ``sum side(Q)**s`` over every dyadic antichain cover of ``S``.

    Covers use cubes of level ``0..L`` meeting ``S``; all of them are
    enumerated.  Ties go to the coarser cover (fewer cubes, then smaller
    levels).  Instances with more than ``max_covers`` covers are refused.
    """
    if len(S) == 0:
        raise ValueError("CubeSet is empty")
    total = count_antichain_covers(S)
    if total > max_covers:
        raise EnumerationTooLarge(f"{total} antichain covers exceed the limit {max_covers}")
    kids, roots = _cover_tree(S)
    L = S.level

    def covers(j, q):
        here = [((j, q),)]
        if j == L:
            return here
        parts = [covers(j + 1, k) for k in kids[(j, q)]]
        return here + [sum(combo, ()) for combo in itertools.product(*parts)]

    best = None
    per_root = [covers(0, r) for r in roots]
    for combo in itertools.product(*per_root):
        cubes = sum(combo, ())
        value = math.fsum(2.0 ** (-j * s) for j, _ in cubes)
        key = (len(cubes), sorted(cubes))
        if best is None or value < best[0] * (1 - 1e-12) or (value <= best[0] * (1 + 1e-12) and key < best[1]):
            best = (value, key, cubes)
    value, _, cubes = best
    return DyadicContent(s, value, tuple(DyadicCube(j, q) for j, q in cubes))


def cube_masses(mu: AtomicMeasure, level: int) -> dict:
    """``{index: mu(Q)}`` for the level-``level`` cubes holding atoms (half-open cubes)."""
    keys = np.floor(np.ldexp(mu.positions, level)).astype(np.int64)
    uniq, order, bounds = _groups(keys)
    return {
        tuple(int(v) for v in uniq[g]): math.fsum(mu.masses[order[bounds[g] : bounds[g + 1]]])
        for g in range(len(uniq))
    }


def cube_constraint_violations(mu: AtomicMeasure, s: float, max_level: int) -> list:
    """All dyadic cubes of level ``0..max_level`` with ``mu(Q) > side(Q)**s``."""
    bad = []
    for j in range(max_level + 1):
        cap = 2.0 ** (-j * s)
        for idx, m in sorted(cube_masses(mu, j).items()):
            if m > cap:
                bad.append((DyadicCube(j, idx), m, cap))
    return bad


def ball_growth_normalize(
    nu: AtomicMeasure,
    s: float,
    centers,
    delta: float,
    rtol: float = 0.0,
) -> tuple[AtomicMeasure, float, RatioSup]:
    """Rescale ``nu`` so that ``nu(B[x, r + delta]) <= r**s`` at every candidate centre.

    ``M`` is the supremum over candidates and all ``r >= r_min`` of
    ``nu(B[x, r + delta]) / r**s``.  If the candidates are a ``delta``-net of
    a region, the bound ``nu(B[y, r]) <= r**s`` then holds for every ``y`` in
    that region.  Returns ``(nu / M, M, certificate)``.
    """
    if len(nu) == 0:
        raise ValueError("cannot normalize an empty measure")
    res = ratio_sup(nu, centers, s, delta=delta, rtol=rtol)
    if res.bound <= 0:
        raise ValueError("no candidate centre sees any mass; the net does not cover the support")
    M = res.bound
    return nu.scaled(1.0 / M), M, res
