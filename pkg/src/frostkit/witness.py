"""Bounded solutions of ``div f = mu`` via the Newtonian kernel.

``f = K * mu`` with ``K(x) = x / (sigma_{n-1} |x|^n)`` solves ``div f = mu``
in the sense of distributions.  For atomic measures the field is summed
directly.  Boundedness cannot be certified by any finite computation; it is
assessed from the trend of ``sup |f|`` under refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import AtomicMeasure, norms, workers
from .report import format_table

_CHUNK = 1_000_000


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in ``R^n``."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


class RieszKernel:
    """``K(x) = x / (sigma_{n-1} |x|^n)``, homogeneous of degree ``1 - n``."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("kernel needs n >= 2")
        self.n = n
        self.sigma = sphere_area(n)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = norms(x)
        if np.any(r == 0):
            raise ValueError("kernel is singular at x = 0")
        return x / (self.sigma * r[..., None] ** self.n)


def kernel_eval(n: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise ValueError(f"x has dimension {x.shape[-1]}, expected {n}")
    return RieszKernel(n)(x)


def field_values(mu: AtomicMeasure, points) -> np.ndarray:
    """``sum_i m_i K(x - y_i)`` at each point; points must avoid the atoms."""
    points = np.asarray(points, dtype=float).reshape(-1, mu.n)
    out = np.zeros_like(points)
    if len(mu) == 0 or len(points) == 0:
        return out
    sigma = sphere_area(mu.n)
    w = mu.masses / sigma
    step = max(1, _CHUNK // len(mu))
    for s in range(0, len(points), step):
        diff = points[s : s + step, None, :] - mu.positions[None, :, :]
        r = norms(diff)
        if np.any(r == 0):
            raise ValueError("evaluation point coincides with an atom")
        coef = w / r**mu.n
        out[s : s + step] = np.einsum("pa,pad->pd", coef, diff)
    return out


@dataclass
class WitnessField:
    points: np.ndarray
    values: np.ndarray
    rho: float
    skipped: int
    notes: list = field(default_factory=list)

    @property
    def magnitudes(self) -> np.ndarray:
        return norms(self.values)

    @property
    def sup_norm(self) -> float:
        return float(self.magnitudes.max()) if len(self.values) else math.nan

    @property
    def argmax(self) -> np.ndarray | None:
        return self.points[int(np.argmax(self.magnitudes))] if len(self.values) else None


def solve_divergence(mu: AtomicMeasure, points, rho: float | None = None) -> WitnessField:
    """Evaluate the Newtonian-gradient solution of ``div f = mu``.

    Points closer than ``rho`` (default ``mu.r_min``) to an atom are
    skipped and counted.
    """
    if mu.n < 2:
        raise ValueError("divergence witness needs n >= 2")
    points = np.asarray(points, dtype=float).reshape(-1, mu.n)
    rho = mu.r_min if rho is None else float(rho)
    keep = np.ones(len(points), dtype=bool)
    if len(mu) and len(points):
        dist, _ = mu.tree.query(points, k=1, workers=workers())
        keep = dist >= rho
    pts = points[keep]
    notes = []
    if len(points) and not keep.any():
        notes.append("all evaluation points fall within rho of an atom")
    return WitnessField(pts, field_values(mu, pts), rho, int(np.sum(~keep)), notes)


def grid_points(lo, hi, cells: int) -> np.ndarray:
    """Cell centres of a uniform ``cells^n`` grid on the box ``[lo, hi]``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    axes = [lo[i] + (np.arange(cells) + 0.5) * (hi[i] - lo[i]) / cells for i in range(len(lo))]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))


# ---------------------------------------------------------------------------
# weak form


@dataclass(frozen=True)
class Bump:
    """Gaussian profile with a polynomial cutoff, ``phi(center) = 1``::

        phi(x) = exp(-t / (2 w^2)) (1 - t / R^2)^q,   t = |x - c|^2 < R^2
    """

    center: tuple
    radius: float = 1.0
    width: float | None = None
    power: int = 4

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError("bump radius must be > 0")
        if self.width is None:
            object.__setattr__(self, "width", self.radius / 3)

    @property
    def n(self) -> int:
        return len(self.center)

    def value(self, x) -> np.ndarray:
        d = np.asarray(x, dtype=float) - np.array(self.center)
        t = np.sum(d * d, axis=-1)
        inside = t < self.radius**2
        with np.errstate(invalid="ignore", over="ignore"):
            v = np.exp(-t / (2 * self.width**2)) * np.clip(1 - t / self.radius**2, 0, None) ** self.power
        return np.where(inside, v, 0.0)

    def grad(self, x) -> np.ndarray:
        d = np.asarray(x, dtype=float) - np.array(self.center)
        t = np.sum(d * d, axis=-1)
        inside = t < self.radius**2
        safe = np.where(inside, self.radius**2 - t, 1.0)
        dphi_dt = self.value(x) * (-1 / (2 * self.width**2) - self.power / safe)
        return np.where(inside[..., None], 2 * d * dphi_dt[..., None], 0.0)

    def sup_grad(self) -> float:
        rr = np.linspace(0, self.radius, 200_001)
        pts = np.zeros((len(rr), self.n))
        pts[:, 0] = rr
        pts += np.array(self.center)
        return float(norms(self.grad(pts)).max())


@dataclass
class WeakResidual:
    residual: float
    flux: float
    source: float
    excluded_bound: float
    h: float
    rho: float
    nodes: int
    scale: float

    @property
    def relative(self) -> float:
        return self.residual / self.scale if self.scale > 0 else self.residual


def weak_divergence_residual(
    mu: AtomicMeasure,
    bump: Bump,
    cells: int,
    bounds=None,
    rho: float | None = None,
) -> WeakResidual:
    """``|int f . grad(phi) dx + int phi dmu|`` by midpoint quadrature.

    Quadrature nodes within ``rho`` (default: the grid step) of an atom are
    dropped; the mass they could carry is at most ``m rho sup|grad phi|``
    per atom, reported as ``excluded_bound``.
    """
    n = mu.n
    if bump.n != n:
        raise ValueError("bump and measure dimensions differ")
    c = np.array(bump.center)
    if bounds is None:
        lo, hi = c - 1.25 * bump.radius, c + 1.25 * bump.radius
    else:
        lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    steps = (hi - lo) / cells
    if not np.allclose(steps, steps[0], rtol=1e-12):
        raise ValueError("quadrature grid must have equal steps along every axis")
    h = float(steps[0])
    if h > bump.radius / 16:
        raise ValueError("grid too coarse: need at least 16 cells per bump radius")
    if np.any(c - bump.radius < lo + h) or np.any(c + bump.radius > hi - h):
        raise ValueError("bump support too close to the edge of the quadrature domain")
    rho = h if rho is None else float(rho)

    # only nodes inside the support carry weight
    kmin = np.floor((c - bump.radius - lo) / h).astype(int)
    kmax = np.ceil((c + bump.radius - lo) / h).astype(int)
    axes = [lo[i] + (np.arange(kmin[i], kmax[i]) + 0.5) * h for i in range(n)]
    nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    nodes = nodes[norms(nodes - c) < bump.radius]
    wf = solve_divergence(mu, nodes, rho=rho)
    g = bump.grad(wf.points)
    flux = math.fsum(np.sum(wf.values * g, axis=1)) * h**n
    source = math.fsum(mu.masses * bump.value(mu.positions)) if len(mu) else 0.0
    sup_g = bump.sup_grad()
    near = norms(mu.positions - c) < bump.radius + rho if len(mu) else np.zeros(0, bool)
    excluded = math.fsum(mu.masses[near]) * rho * sup_g
    scale = (mu.total_mass if len(mu) else 0.0) * sup_g
    return WeakResidual(abs(flux + source), flux, source, excluded, h, rho, len(wf.points), scale)


def empirical_orders(hs, residuals) -> list:
    """``log(e_k / e_{k+1}) / log(h_k / h_{k+1})`` for consecutive refinements."""
    return [
        math.log(residuals[i] / residuals[i + 1]) / math.log(hs[i] / hs[i + 1])
        for i in range(len(hs) - 1)
    ]


# ---------------------------------------------------------------------------
# refinement study


@dataclass
class StudyRow:
    label: object
    points: int
    rho: float
    sup: float
    ratio: float


@dataclass
class RefinementStudy:
    rows: list
    spread: float
    trend: str
    bounded_tol: float
    diverging_factor: float

    def to_table(self) -> str:
        return format_table(
            ["level", "grid", "rho", "sup", "ratio"],
            [(r.label, r.points, r.rho, r.sup, r.ratio) for r in self.rows],
        )


def supnorm_refinement_study(entries, bounded_tol: float = 0.10, diverging_factor: float = 5.0) -> RefinementStudy:
    """``sup |f|`` per refinement level.

    ``entries`` is a sequence of ``(label, measure, points, rho)``.  The trend
    is ``bounded`` when the sups vary by less than ``bounded_tol`` (relative
    to the largest), ``diverging`` when every step grows by at least
    ``diverging_factor``, otherwise ``indeterminate``.
    """
    entries = list(entries)
    if len(entries) < 3:
        raise ValueError("a refinement study needs at least 3 levels")
    fields = [(label, solve_divergence(mu, points, rho=rho)) for label, mu, points, rho in entries]
    return study_from_fields(fields, bounded_tol, diverging_factor)


def study_from_fields(fields, bounded_tol: float = 0.10, diverging_factor: float = 5.0) -> RefinementStudy:
    """Same as :func:`supnorm_refinement_study` for ``(label, WitnessField)`` pairs."""
    fields = list(fields)
    if len(fields) < 3:
        raise ValueError("a refinement study needs at least 3 levels")
    rows = []
    prev = None
    for label, wf in fields:
        sup = wf.sup_norm
        rows.append(StudyRow(label, len(wf.points), wf.rho, sup, math.nan if prev is None else sup / prev))
        prev = sup
    sups = np.array([r.sup for r in rows])
    if np.any(np.isnan(sups)):
        return RefinementStudy(rows, math.nan, "indeterminate", bounded_tol, diverging_factor)
    spread = float((sups.max() - sups.min()) / sups.max())
    ratios = np.array([r.ratio for r in rows[1:]])
    if spread < bounded_tol:
        trend = "bounded"
    elif np.all(ratios >= diverging_factor):
        trend = "diverging"
    else:
        trend = "indeterminate"
    return RefinementStudy(rows, spread, trend, bounded_tol, diverging_factor)


def far_field_bound(total_mass: float, n: int, support_radius: float, x) -> float:
    """``|f(x)| <= M / (sigma (|x| - R)^(n-1))`` for atoms inside ``B[0, R]``."""
    d = float(norms(np.asarray(x, dtype=float))) - support_radius
    if d <= 0:
        raise ValueError("x must lie outside the support ball")
    return total_mass / (sphere_area(n) * d ** (n - 1))
