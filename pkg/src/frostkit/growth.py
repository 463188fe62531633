"""Growth hypotheses of the L-infinity solvability theorem, checked exactly.

* origin growth: ``sup_r |mu|(B[0, r]) / r**(n-m)``
* Dini condition: ``int_0^{a|x|} |mu|(B[x, r]) / r**(n-m+1) dr`` uniformly in ``x``
* pointwise regularity ``mu(B[x, r]) <= C2 |x|**-m r**n`` for ``r < a|x|``,
  which implies the Dini condition with constant ``C2 a**m / m``.

Integrals of the step function ``r -> mu(B[x, r])`` are evaluated in closed
form.  All checks start at ``r_min``; the piece below ``r_min`` is reported
separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ballratio import ratio_sup
from .decay import _origin_sup
from .dyadic import AtomicMeasure, norms
from .report import Certificate


@dataclass(frozen=True)
class OperatorOrderParams:
    n: int
    m: int

    def __post_init__(self):
        if not 0 < self.m < self.n:
            raise ValueError(f"need 0 < m < n, got n={self.n}, m={self.m}")

    @property
    def codim(self) -> int:
        return self.n - self.m


@dataclass
class DiniReport:
    center: np.ndarray
    value: float
    upper: float
    r_min: float
    below_r_min: float
    threshold: float | None = None

    @property
    def passed(self) -> bool | None:
        return None if self.threshold is None else bool(self.value <= self.threshold)


def bp1_sup(mu: AtomicMeasure, params: OperatorOrderParams, r_min: float | None = None) -> Certificate:
    """Exact ``sup_{r >= r_min} mu(B[0, r]) / r**(n - m)`` and the radius attaining it."""
    return _origin_sup(mu, float(params.codim), r_min, "bp1", None)


def _step_integral(dist, masses, lo, hi, p):
    """``int_lo^hi M(r) r**-(p+1) dr`` with ``M(r) = sum masses[dist <= r]``."""
    if hi <= lo or len(dist) == 0:
        return 0.0
    order = np.argsort(dist, kind="stable")
    dist = dist[order]
    masses = masses[order]
    keep = dist <= hi
    dist, masses = dist[keep], masses[keep]
    if len(dist) == 0:
        return 0.0
    # each atom contributes m * int_{max(d, lo)}^{hi} r^-(p+1) dr
    start = np.maximum(dist, lo)
    if np.any(start == 0):
        return math.inf
    return math.fsum(masses * (start**-p - hi**-p)) / p


def dini_integral(
    mu: AtomicMeasure,
    x,
    params: OperatorOrderParams,
    r_min: float | None = None,
    a: float = 0.5,
    exponent: float | None = None,
) -> DiniReport:
    """Closed-form Dini integral over ``[r_min, a|x|]`` at the centre ``x``.

    ``exponent`` replaces ``n - m`` when given (any real ``p > 0``).
    """
    x = np.asarray(x, dtype=float).reshape(mu.n)
    rx = float(norms(x))
    if rx == 0:
        raise ValueError("the Dini integral is only defined at x != 0")
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    r_min = mu.r_min if r_min is None else r_min
    upper = a * rx
    p = params.codim if exponent is None else float(exponent)
    if not p > 0:
        raise ValueError("Dini exponent must be > 0")
    if len(mu) == 0:
        return DiniReport(x, 0.0, upper, r_min, 0.0)
    idx = mu.tree.query_ball_point(x, upper * (1 + 1e-12))
    idx = np.asarray(sorted(idx), dtype=np.int64)
    d = norms(mu.positions[idx] - x)
    m = mu.masses[idx]
    value = _step_integral(d, m, r_min, upper, p)
    below = _step_integral(d, m, 0.0, min(r_min, upper), p)
    return DiniReport(x, value, upper, r_min, below)


def bp2_uniform(
    mu: AtomicMeasure,
    params: OperatorOrderParams,
    centers,
    threshold: float | None = None,
    a: float = 0.5,
    r_min: float | None = None,
    exponent: float | None = None,
) -> Certificate:
    """Largest Dini integral over the sample centres."""
    centers = np.asarray(centers, dtype=float).reshape(-1, mu.n)
    if len(centers) == 0:
        raise ValueError("need at least one sample centre")
    if np.any(norms(centers) == 0):
        raise ValueError("sample centres must be nonzero")
    reports = [dini_integral(mu, x, params, r_min=r_min, a=a, exponent=exponent) for x in centers]
    vals = np.array([r.value for r in reports])
    i = int(np.argmax(vals))
    best = reports[i]
    below = max(r.below_r_min for r in reports)
    return Certificate(
        "bp2",
        best.value,
        threshold,
        center=best.center,
        radius=best.upper,
        r_min=best.r_min,
        notes=["lower integration limit is r_min; the piece below r_min is reported separately"],
        extra={"a": a, "samples": len(centers), "below_r_min_max": below,
               "exponent": float(params.codim if exponent is None else exponent)},
    )


def pointwise_regularity_check(
    mu: AtomicMeasure,
    params: OperatorOrderParams,
    c2: float,
    centers,
    delta: float,
    a: float = 0.5,
    r_min: float | None = None,
) -> tuple[Certificate, float]:
    """Sup of ``mu(B[x, r + delta]) |x|**m / r**n`` for ``r_min <= r <= a|x|``.

    Returns the certificate (threshold ``c2``) and the Dini threshold
    ``c2 a**m / m`` that passing it implies.
    """
    r_min = mu.r_min if r_min is None else r_min
    centers = np.asarray(centers, dtype=float).reshape(-1, mu.n)
    rad = norms(centers)
    centers = centers[a * rad >= r_min]
    rad = norms(centers)
    res = ratio_sup(mu, centers, params.n, delta=delta, r_min=r_min, r_max=a * rad, weights=rad**params.m)
    implied = c2 * a**params.m / params.m
    cert = Certificate(
        "pointwise",
        res.sup,
        c2,
        res.bound,
        res.center,
        res.radius,
        r_min,
        extra={"delta": delta, "a": a, "implied_dini_threshold": implied},
    )
    if not res.attained:
        cert.notes.append("no admissible (x, r) pair; implication vacuous")
    return cert, implied


class CovectorMeasure:
    """``mu_e(B) = mu(B) e`` for a fixed covector ``e``; ``|mu_e| = |e| mu``."""

    def __init__(self, base: AtomicMeasure, e):
        e = np.asarray(e, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(e))
        if norm == 0:
            raise ValueError("covector must be nonzero")
        self.base = base
        self.e = e
        self.norm = norm

    def total_variation(self) -> AtomicMeasure:
        return self.base.scaled(self.norm)

    def ball_mass(self, center, r: float) -> float:
        return self.norm * self.base.ball_mass(center, r)

    def value(self, center, r: float) -> np.ndarray:
        return self.base.ball_mass(center, r) * self.e


def vectorize(mu: AtomicMeasure, e) -> CovectorMeasure:
    return CovectorMeasure(mu, e)
