"""Dyadic geometry, atomic measures and the test sets used downstream.

Every measure in the package is an :class:`AtomicMeasure`: a finite list of
weighted points together with a resolution ``r_min`` below which the
measure makes no claim.  Balls are closed, annuli ``A_k = {k <= |x| < k+1}``
are half-open.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

MAX_LEVEL = 62


_WORKERS = 1


def set_workers(k: int) -> None:
    """Thread count for KD-tree queries (``-1`` uses every core)."""
    global _WORKERS
    if k == 0 or k < -1:
        raise ValueError("workers must be >= 1 or -1")
    _WORKERS = int(k)


def workers() -> int:
    return _WORKERS


def norms(v):
    """Euclidean norms along the last axis.

    All distance computations go through here so that closed-ball tests are
    bitwise consistent between modules.
    """
    v = np.asarray(v, dtype=float)
    return np.sqrt(np.sum(v * v, axis=-1))


@dataclass(frozen=True, order=True)
class DyadicCube:
    """Cube of side ``2**-level`` with lower corner ``index * 2**-level``."""

    level: int
    index: tuple

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be >= 0")
        if self.level > MAX_LEVEL:
            raise OverflowError(f"level {self.level} exceeds {MAX_LEVEL}")
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))

    @property
    def n(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return math.ldexp(1.0, -self.level)

    @property
    def corner(self) -> np.ndarray:
        return np.array([math.ldexp(i, -self.level) for i in self.index])

    @property
    def center(self) -> np.ndarray:
        return np.array([math.ldexp(2 * i + 1, -self.level - 1) for i in self.index])

    def children(self) -> list["DyadicCube"]:
        return [
            DyadicCube(self.level + 1, tuple(2 * i + b for i, b in zip(self.index, bits)))
            for bits in itertools.product((0, 1), repeat=self.n)
        ]

    def parent(self) -> "DyadicCube":
        if self.level == 0:
            raise ValueError("level-0 cubes have no parent")
        return DyadicCube(self.level - 1, tuple(i >> 1 for i in self.index))

    def ancestor(self, level: int) -> "DyadicCube":
        if not 0 <= level <= self.level:
            raise ValueError("ancestor level out of range")
        shift = self.level - level
        return DyadicCube(level, tuple(i >> shift for i in self.index))

    def contains(self, other: "DyadicCube") -> bool:
        return other.level >= self.level and other.ancestor(self.level) == self


@dataclass(frozen=True)
class CubeSet:
    """Finite union of dyadic cubes, all at the same level."""

    n: int
    level: int
    members: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.level <= MAX_LEVEL:
            raise OverflowError(f"level {self.level} not indexable in 64-bit integers")
        members = frozenset(tuple(int(i) for i in m) for m in self.members)
        for m in members:
            if len(m) != self.n:
                raise ValueError(f"index {m} has arity {len(m)}, expected {self.n}")
        object.__setattr__(self, "members", members)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    def __contains__(self, index):
        return tuple(index) in self.members

    @property
    def side(self) -> float:
        return math.ldexp(1.0, -self.level)

    @cached_property
    def indices(self) -> np.ndarray:
        """Member indices as an ``(N, n)`` int64 array in lexicographic order."""
        if not self.members:
            return np.zeros((0, self.n), dtype=np.int64)
        arr = np.array(sorted(self.members), dtype=np.int64)
        arr.setflags(write=False)
        return arr

    def cubes(self) -> list[DyadicCube]:
        return [DyadicCube(self.level, m) for m in self]

    def centers(self) -> np.ndarray:
        return (self.indices.astype(float) + 0.5) * self.side

    def coarsen(self, level: int) -> "CubeSet":
        """The set of level-``level`` cubes containing at least one member."""
        if not 0 <= level <= self.level:
            raise ValueError("can only coarsen to a level between 0 and the set's level")
        shift = self.level - level
        return CubeSet(self.n, level, frozenset(map(tuple, (self.indices >> shift).tolist())))

    def union(self, other: "CubeSet") -> "CubeSet":
        if (other.n, other.level) != (self.n, self.level):
            raise ValueError("union needs matching n and level")
        return CubeSet(self.n, self.level, self.members | other.members)


@dataclass(frozen=True)
class BallQuery:
    """Closed ball ``B[x, r]``."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise ValueError("radius must be >= 0")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


class AtomicMeasure:
    """Finite positive combination of Dirac masses.

    Atoms are stored in lexicographic order of position, which fixes the
    summation order of every reduction.  Instances are immutable.
    """

    def __init__(self, positions, masses, r_min: float, n: int | None = None):
        positions = np.array(positions, dtype=float)
        masses = np.array(masses, dtype=float).reshape(-1)
        if positions.size == 0:
            if n is None:
                raise ValueError("n is required for an empty measure")
            positions = positions.reshape(0, n)
        if positions.ndim != 2:
            raise ValueError("positions must be an (N, n) array")
        if n is not None and positions.shape[1] != n:
            raise ValueError(f"positions have dimension {positions.shape[1]}, expected {n}")
        if len(positions) != len(masses):
            raise ValueError("positions and masses differ in length")
        if not np.all(np.isfinite(positions)) or not np.all(np.isfinite(masses)):
            raise ValueError("non-finite position or mass")
        if np.any(masses <= 0):
            raise ValueError("atom masses must be strictly positive")
        if not (math.isfinite(r_min) and r_min > 0):
            raise ValueError("r_min must be finite and > 0")
        order = np.lexsort(positions.T[::-1]) if len(positions) else np.arange(0)
        positions = positions[order]
        masses = masses[order]
        if len(positions) > 1 and np.any(np.all(positions[1:] == positions[:-1], axis=1)):
            raise ValueError("atom positions must be pairwise distinct")
        positions.setflags(write=False)
        masses.setflags(write=False)
        self._positions = positions
        self._masses = masses
        self._r_min = float(r_min)

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    @property
    def masses(self) -> np.ndarray:
        return self._masses

    @property
    def r_min(self) -> float:
        return self._r_min

    @property
    def n(self) -> int:
        return self._positions.shape[1]

    def __len__(self):
        return len(self._masses)

    def __repr__(self):
        return f"AtomicMeasure(n={self.n}, atoms={len(self)}, total={self.total_mass:.6g}, r_min={self.r_min:.6g})"

    def __eq__(self, other):
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return (
            self.r_min == other.r_min
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.masses, other.masses)
        )

    @property
    def total_mass(self) -> float:
        return math.fsum(self._masses)

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self._positions) if len(self) else cKDTree(np.zeros((0, self.n)))

    @cached_property
    def radii(self) -> np.ndarray:
        """Distance of every atom from the origin."""
        return norms(self._positions)

    def with_masses(self, masses) -> "AtomicMeasure":
        return AtomicMeasure(self._positions, masses, self._r_min, n=self.n)

    def scaled(self, c: float) -> "AtomicMeasure":
        if not c > 0:
            raise ValueError("scale factor must be > 0")
        return self.with_masses(self._masses * c)

    def with_r_min(self, r_min: float) -> "AtomicMeasure":
        return AtomicMeasure(self._positions, self._masses, r_min, n=self.n)

    def ball_mass(self, center, r: float) -> float:
        return ball_mass(self, BallQuery(tuple(center), r))


def ball_mass(mu: AtomicMeasure, q: BallQuery) -> float:
    """Mass of the closed ball ``B[x, r]``, summed exactly with ``math.fsum``."""
    if len(mu) == 0:
        return 0.0
    x = np.asarray(q.center, dtype=float)
    if x.shape != (mu.n,):
        raise ValueError(f"center has dimension {x.size}, measure has n={mu.n}")
    inside = norms(mu.positions - x) <= q.radius
    return math.fsum(mu.masses[inside])


def annulus_index(x) -> int:
    """The ``k`` with ``k <= |x| < k + 1``."""
    return int(math.floor(float(norms(np.asarray(x, dtype=float)))))


def annulus_indices(positions) -> np.ndarray:
    return np.floor(norms(positions)).astype(np.int64)


def annulus_masses(mu: AtomicMeasure) -> dict[int, float]:
    """``{k: mu(A_k)}`` over the occupied annuli."""
    ks = annulus_indices(mu.positions)
    return {int(k): math.fsum(mu.masses[ks == k]) for k in np.unique(ks)}


# ---------------------------------------------------------------------------
# generators


def _snap_interval(lo: Fraction, hi: Fraction, scale: int) -> range:
    # dyadic cells [i, i+1]/scale with interior overlap with [lo, hi]
    first = math.floor(lo * scale)
    last = math.ceil(hi * scale) - 1
    return range(first, last + 1)


def gen_four_corner_cantor(ratio: float, level: int, n: int = 2, dyadic_level: int | None = None) -> CubeSet:
    """Outer dyadic approximation of the corner Cantor set of contraction ``ratio``.

    ``level`` is the generation: ``2**n * level`` squares of side
    ``ratio**level``.  Each square is replaced by the dyadic cubes that
    overlap it with positive volume.  ``dyadic_level`` defaults to the
    coarsest level whose cubes are no larger than a generation square.
    """
    if not 0 < ratio < 0.5:
        raise ValueError("ratio must lie in (0, 1/2)")
    if level < 0:
        raise ValueError("level must be >= 0")
    lam = Fraction(ratio)
    if dyadic_level is None:
        dyadic_level = 0
        while Fraction(1, 2**dyadic_level) > lam**level:
            dyadic_level += 1
            if dyadic_level > MAX_LEVEL:
                break
    if dyadic_level > MAX_LEVEL:
        raise OverflowError(f"generation {level} needs dyadic level > {MAX_LEVEL}")
    scale = 2**dyadic_level

    # corners of the generation squares, one coordinate at a time
    starts = [Fraction(0)]
    side = Fraction(1)
    for _ in range(level):
        starts = [a + b for a in starts for b in (Fraction(0), (1 - lam) * side)]
        side *= lam
    cells_1d = [_snap_interval(a, a + side, scale) for a in starts]

    members = set()
    for combo in itertools.product(cells_1d, repeat=n):
        members.update(itertools.product(*combo))
    return CubeSet(n, dyadic_level, frozenset(members))


def gen_full_cube(n: int, level: int) -> CubeSet:
    """All level-``level`` dyadic subcubes of ``[0, 1]^n``."""
    side = 2**level
    return CubeSet(n, level, frozenset(itertools.product(range(side), repeat=n)))


def gen_power_density(n: int, m: float, outer_radius: float, h: float) -> AtomicMeasure:
    """Discretized ``|x|^-m dx``: one atom per cell of the grid ``h Z^n`` inside ``B[0, R]``.

    The cell centred at the origin is dropped since the density is singular
    there.
    """
    if not 0 < m < n:
        raise ValueError("need 0 < m < n")
    if not h > 0:
        raise ValueError("grid step must be > 0")
    if outer_radius <= h:
        raise ValueError("outer radius must exceed the grid step")
    k = int(math.floor(outer_radius / h))
    axis = np.arange(-k, k + 1)
    grid = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    pts = grid * h
    r = norms(pts)
    keep = (r <= outer_radius) & np.any(grid != 0, axis=1)
    pts, r = pts[keep], r[keep]
    return AtomicMeasure(pts, r ** (-m) * h**n, r_min=h, n=n)


def gen_random_branching(
    rng: np.random.Generator,
    n: int,
    level: int,
    roots: int = 4,
    keep_prob: float = 0.5,
    box: int = 4,
) -> CubeSet:
    """Random tree-like CubeSet.

    Starts from ``roots`` distinct unit cubes with integer corners in
    ``[-box, box)^n``; every child of a kept cube is kept with probability
    ``keep_prob`` (at least one child always survives).
    """
    if roots > (2 * box) ** n:
        raise ValueError("more roots than unit cubes in the box")
    flat = rng.choice((2 * box) ** n, size=roots, replace=False)
    current = [tuple(int(c) - box for c in np.unravel_index(f, (2 * box,) * n)) for f in flat]
    offsets = list(itertools.product((0, 1), repeat=n))
    for _ in range(level):
        nxt = []
        for idx in current:
            keep = rng.random(len(offsets)) < keep_prob
            if not keep.any():
                keep[rng.integers(len(offsets))] = True
            nxt.extend(tuple(2 * i + b for i, b in zip(idx, off)) for off, k in zip(offsets, keep) if k)
        current = nxt
    return CubeSet(n, level, frozenset(current))


def cubeset_measure(cubes: CubeSet, masses=None) -> AtomicMeasure:
    """Atoms at member-cube centres (unit masses by default), ``r_min`` = cube side."""
    pts = cubes.centers()
    if masses is None:
        masses = np.ones(len(pts))
    return AtomicMeasure(pts, masses, r_min=cubes.side, n=cubes.n)


# ---------------------------------------------------------------------------
# box counting


def box_counts(cubes: CubeSet, levels: Iterable[int]) -> list[tuple[int, int]]:
    return [(j, len(cubes.coarsen(j))) for j in levels]


def box_dimension_estimate(sets: Sequence[CubeSet]) -> float:
    """Least-squares slope of ``log(count)`` against ``level * log 2``."""
    if len(sets) < 3:
        raise ValueError("box counting needs at least 3 levels")
    levels = np.array([c.level for c in sets], dtype=float)
    counts = np.array([len(c) for c in sets], dtype=float)
    if np.any(counts == 0):
        raise ValueError("empty CubeSet in box-counting sequence")
    if np.all(counts == counts[0]):
        return 0.0
    if np.all(levels == levels[0]):
        raise ValueError("box counting needs distinct levels")
    slope, _ = np.polyfit(levels * math.log(2), np.log(counts), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# delta-nets


def cube_net(cubes: CubeSet) -> tuple[np.ndarray, float]:
    """Centres of member cubes and their neighbours.

    Every point within one cube side of the set lies in one of these cubes,
    hence within ``side * sqrt(n) / 2`` of a returned centre; that covering
    radius is returned alongside.
    """
    idx = cubes.indices
    if len(idx) == 0:
        return np.zeros((0, cubes.n)), 0.0
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=cubes.n)), dtype=np.int64)
    allidx = np.unique((idx[:, None, :] + offsets[None]).reshape(-1, cubes.n), axis=0)
    return (allidx + 0.5) * cubes.side, cubes.side * math.sqrt(cubes.n) / 2


def lattice_net(positions, delta: float, margin: float | None = None) -> np.ndarray:
    """Points of a cubic lattice with covering radius ``delta`` near ``positions``.

    Returns all lattice points lying within ``margin`` (sup-norm, default
    ``delta``) of some atom, widened by one lattice step so that the
    ``margin``-neighbourhood of the atoms is covered at radius ``delta``.
    """
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[1]
    if not delta > 0:
        raise ValueError("delta must be > 0")
    if margin is None:
        margin = delta
    step = 2 * delta / math.sqrt(n)
    reach = int(math.ceil(margin / step)) + 1
    base = np.floor(positions / step).astype(np.int64)
    offsets = np.array(list(itertools.product(range(-reach, reach + 1), repeat=n)), dtype=np.int64)
    pts = np.unique((base[:, None, :] + offsets[None]).reshape(-1, n), axis=0)
    return (pts + 0.5) * step
