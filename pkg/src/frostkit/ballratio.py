"""Exact suprema of ball-growth ratios over finitely many centres.

Every growth certificate in the package has the form::

    sup   w(x) * mu(B[x, r + delta]) / r**p
    x in centres, r_min <= r <= r_hi(x)

For a fixed centre the numerator is a right-continuous step function of
``r`` that jumps at ``r = |x - y| - delta`` for the atoms ``y``; between jumps
the ratio decreases.  The supremum is therefore attained at one of the
finitely many critical radii ``max(r_min, |x - y| - delta)`` and can be
evaluated exactly by sorting distances.

Doing that for every centre costs ``O(centres * atoms)``.  For large inputs
the radii are grouped into geometric shells and each (centre, shell) pair is
first bounded from above with a summed-area table of the atom masses; only
pairs whose bound can beat the best value found so far are evaluated
exactly.  Pruning only discards pairs that provably cannot exceed the
incumbent, so the result is exact (or within ``rtol`` when requested, in
which case ``bound`` still upper-bounds the true supremum).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dyadic import AtomicMeasure, norms, workers

_PAIR_BUDGET = 2_000_000
_DIRECT_LIMIT = 4_000_000
_SHELL_RATIO = 2.0 ** 0.25
_INFLATE = 1.0 + 1e-12


@dataclass
class RatioSup:
    sup: float
    bound: float
    center: np.ndarray | None
    radius: float
    mass: float
    exact: bool
    evaluated: int = 0

    @property
    def attained(self) -> bool:
        return self.center is not None


def _prepare(mu, centers, r_min, r_max, weights):
    centers = np.asarray(centers, dtype=float).reshape(-1, mu.n)
    c = len(centers)
    if r_max is None:
        r_hi = np.full(c, np.inf)
    else:
        r_hi = np.broadcast_to(np.asarray(r_max, dtype=float), (c,)).copy()
    w = np.ones(c) if weights is None else np.broadcast_to(np.asarray(weights, dtype=float), (c,)).copy()
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("centre weights must be finite and >= 0")
    return centers, r_hi, w


def _far_radius(mu: AtomicMeasure, centers: np.ndarray) -> np.ndarray:
    """Upper bound on the distance from each centre to the farthest atom."""
    lo = mu.positions.min(axis=0)
    hi = mu.positions.max(axis=0)
    far = np.maximum(np.abs(centers - lo), np.abs(centers - hi))
    return norms(far) * _INFLATE


def _exact_batch(mu, centers, caps, weights, p, delta, r_min):
    """Exact per-centre sup over ``r in [r_min, cap]``.

    Returns (values, radii, masses, balls) where ``balls`` is the radius of
    the closed ball whose mass is the numerator; value 0 / radius nan where
    no atom contributes.
    """
    c = len(centers)
    values = np.zeros(c)
    radii = np.full(c, np.nan)
    masses = np.zeros(c)
    balls = np.full(c, np.nan)
    live = np.flatnonzero((caps >= r_min) & (weights > 0))
    if len(live) == 0 or len(mu) == 0:
        return values, radii, masses, balls
    tree = mu.tree
    reach = (caps[live] + delta) * _INFLATE + 1e-300
    counts = np.asarray(tree.query_ball_point(centers[live], reach, return_length=True, workers=workers()))
    order = np.argsort(counts, kind="stable")
    padded_mass = np.append(mu.masses, 0.0)
    start = 0
    while start < len(order):
        kmax = max(int(counts[order[start]]), 1)
        stop = start + 1
        while stop < len(order):
            k_next = max(int(counts[order[stop]]), 1)
            if (stop - start + 1) * k_next > _PAIR_BUDGET and stop > start:
                break
            kmax = k_next
            stop += 1
        sel = live[order[start:stop]]
        start = stop
        if kmax == 0:
            continue
        k = min(kmax, len(mu))
        _, idx = tree.query(centers[sel], k=k, distance_upper_bound=float(np.max(reach[np.searchsorted(live, sel)])), workers=workers())
        idx = np.asarray(idx).reshape(len(sel), k)
        missing = idx >= len(mu)
        safe = np.where(missing, 0, idx)
        d = norms(mu.positions[safe] - centers[sel][:, None, :])
        d[missing] = np.inf
        srt = np.argsort(d, axis=1, kind="stable")
        d = np.take_along_axis(d, srt, axis=1)
        idx = np.take_along_axis(np.where(missing, len(mu), idx), srt, axis=1)
        cum = np.cumsum(padded_mass[idx], axis=1)
        r = np.maximum(r_min, d - delta)
        ok = np.isfinite(d) & (r <= caps[sel][:, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(ok, weights[sel][:, None] * cum / r**p, -np.inf)
        j = np.argmax(val, axis=1)
        rows = np.arange(len(sel))
        best = val[rows, j]
        good = np.isfinite(best)
        values[sel[good]] = best[good]
        radii[sel[good]] = r[rows, j][good]
        masses[sel[good]] = cum[rows, j][good]
        balls[sel[good]] = d[rows, j][good]
    return values, radii, masses, balls


class _BoxSums:
    """Summed-area table of atom masses on a uniform grid (upper bounds for ball masses)."""

    def __init__(self, mu: AtomicMeasure, min_cell: float, max_cells: int = 4_000_000):
        n = mu.n
        self.origin = mu.positions.min(axis=0)
        extent = float(np.max(mu.positions.max(axis=0) - self.origin))
        per_axis = max(1, int(max_cells ** (1.0 / n)))
        self.cell = max(min_cell, extent / per_axis * (1 + 1e-9), 1e-300)
        self.shape = tuple(int(s) for s in np.floor((mu.positions.max(axis=0) - self.origin) / self.cell) + 1)
        grid = np.zeros(self.shape)
        cell_idx = np.floor((mu.positions - self.origin) / self.cell).astype(np.int64)
        cell_idx = np.minimum(cell_idx, np.array(self.shape) - 1)
        np.add.at(grid, tuple(cell_idx.T), mu.masses)
        sat = np.pad(grid, [(1, 0)] * n)
        for ax in range(n):
            sat = np.cumsum(sat, axis=ax)
        self.sat = sat
        self.total = mu.total_mass
        self.n = n

    def upper(self, centers: np.ndarray, rho: np.ndarray) -> np.ndarray:
        """Mass of atoms in the cells meeting ``[x - rho, x + rho]``; shape of ``rho``."""
        # centers (c, n), rho (c, k)
        shape = np.array(self.shape)
        lo = np.floor((centers[:, None, :] - rho[..., None] - self.origin) / self.cell).astype(np.int64)
        hi = np.floor((centers[:, None, :] + rho[..., None] - self.origin) / self.cell).astype(np.int64)
        empty = np.any((hi < 0) | (lo > shape - 1), axis=-1)
        lo = np.clip(lo, 0, shape - 1)
        hi = np.clip(hi, 0, shape - 1) + 1
        out = np.zeros(rho.shape)
        for corner in itertools.product((0, 1), repeat=self.n):
            sign = (-1) ** (self.n - sum(corner))
            ix = tuple(np.where(corner[a], hi[..., a], lo[..., a]) for a in range(self.n))
            out += sign * self.sat[ix]
        out = np.maximum(out, 0.0) * _INFLATE + 1e-13 * self.total
        out[empty] = 0.0
        return out


def ratio_sup(
    mu: AtomicMeasure,
    centers,
    p: float,
    delta: float = 0.0,
    r_min: float | None = None,
    r_max=None,
    weights=None,
    rtol: float = 0.0,
) -> RatioSup:
    """Supremum of ``w(x) mu(B[x, r + delta]) / r**p`` over centres and ``r`` in ``[r_min, r_max(x)]``."""
    if p <= 0:
        raise ValueError("exponent must be > 0")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if r_min is None:
        r_min = mu.r_min
    centers, r_hi, w = _prepare(mu, centers, r_min, r_max, weights)
    none = RatioSup(0.0, 0.0, None, math.nan, 0.0, True)
    if len(mu) == 0 or len(centers) == 0:
        return none
    far = _far_radius(mu, centers)
    caps = np.minimum(r_hi, np.maximum(r_min, far - delta))
    caps[(r_hi < r_min) | (w == 0)] = -np.inf
    live = np.flatnonzero(np.isfinite(caps))
    if len(live) == 0:
        return none

    if len(live) * len(mu) <= _DIRECT_LIMIT:
        res = _exact_batch(mu, centers, caps, w, p, delta, r_min)
        return _finish(mu, centers, res, p, w, exact=True, bound=None, evaluated=len(live))

    # incumbent: a spread-out sample at full radius plus every centre at small radii
    stride = max(1, len(live) // 32)
    sample = live[::stride]
    acc = (np.zeros(len(centers)), np.full(len(centers), np.nan), np.zeros(len(centers)), np.full(len(centers), np.nan))
    sample_caps = np.full(len(centers), -np.inf)
    sample_caps[sample] = caps[sample]
    _merge(acc, _exact_batch(mu, centers, sample_caps, w, p, delta, r_min))
    small_caps = np.minimum(caps, 2.0 * r_min)
    _merge(acc, _exact_batch(mu, centers, small_caps, w, p, delta, r_min))
    best = float(acc[0].max())

    # shell bounds
    top = float(np.max(caps[live]))
    nshell = max(1, int(math.ceil(math.log(top / r_min) / math.log(_SHELL_RATIO))) + 1) if top > r_min else 1
    edges = r_min * _SHELL_RATIO ** np.arange(nshell + 1)
    boxes = _BoxSums(mu, min_cell=r_min)
    need = np.full(len(centers), -np.inf)
    ub_max = np.zeros(len(centers))
    chunk = max(1, _PAIR_BUDGET // (nshell * 2**mu.n))
    for s in range(0, len(live), chunk):
        sel = live[s : s + chunk]
        cap = caps[sel][:, None]
        lo_r = edges[None, :-1]
        hi_r = np.minimum(edges[None, 1:], cap)
        admissible = lo_r <= cap
        ub = boxes.upper(centers[sel], np.where(admissible, hi_r + delta, 0.0))
        ub = w[sel][:, None] * ub / lo_r**p
        ub[~admissible] = 0.0
        ub_max[sel] = ub.max(axis=1)
        over = ub > best * (1 + rtol)
        any_over = over.any(axis=1)
        last = nshell - 1 - np.argmax(over[:, ::-1], axis=1)
        need[sel[any_over]] = hi_r[any_over, last[any_over]]

    # exact evaluation, most promising first, re-pruning as the incumbent grows
    pending = np.flatnonzero(need > -np.inf)
    pending = pending[np.argsort(-ub_max[pending], kind="stable")]
    evaluated = len(sample)
    batch = 64
    pos = 0
    while pos < len(pending):
        sel = pending[pos : pos + batch]
        pos += batch
        sel = sel[ub_max[sel] > best * (1 + rtol)]
        if len(sel) == 0:
            if ub_max[pending[pos - 1]] <= best * (1 + rtol):
                break
            continue
        sel_caps = np.full(len(centers), -np.inf)
        sel_caps[sel] = need[sel]
        _merge(acc, _exact_batch(mu, centers, sel_caps, w, p, delta, r_min))
        best = float(acc[0].max())
        evaluated += len(sel)
        batch = min(batch * 2, 4096)
    bound = best * (1 + rtol) if rtol > 0 else None
    return _finish(mu, centers, acc, p, w, exact=rtol == 0, bound=bound, evaluated=evaluated)


def _merge(acc, new):
    better = new[0] > acc[0]
    for a, b in zip(acc, new):
        a[better] = b[better]


def _finish(mu, centers, res, p, w, exact, bound, evaluated):
    vals, rad, _, balls = res
    if not np.any(vals > 0):
        return RatioSup(0.0, 0.0 if bound is None else bound, None, math.nan, 0.0, exact, evaluated)
    top = float(vals.max())
    # deterministic tie-break: lexicographically smallest centre, then smallest radius
    ties = np.flatnonzero(vals == top)
    if len(ties) > 1:
        keys = np.column_stack([centers[ties], rad[ties]])
        ties = ties[np.lexsort(keys.T[::-1])]
    i = int(ties[0])
    r = float(rad[i])
    # numerator again, summed exactly over the same closed ball
    inside = norms(mu.positions - centers[i]) <= balls[i]
    exact_mass = math.fsum(mu.masses[inside])
    value = max(float(w[i] * exact_mass / r**p), top)
    return RatioSup(
        sup=value,
        bound=value if bound is None else max(bound, value),
        center=centers[i].copy(),
        radius=r,
        mass=exact_mass,
        exact=exact,
        evaluated=evaluated,
    )
