"""Annular reweighting of a Frostman measure and its two decay certificates.

Given ``nu`` with ``nu(B[x, r]) <= r**s``, the reweighted measure
``mu = sum_k 2**(-k alpha) nu|A_k`` satisfies

* ``mu(B[0, r]) <= C(alpha, s) r**(s - alpha)`` for all ``r``, and
* ``mu(B[x, r]) <= K(alpha) |x|**(-alpha) r**s`` for ``r <= |x| / 2``,

with the explicit constants of :func:`constant_C_alpha_s` and
:func:`cond2_constant`.  Both certificates are evaluated exactly at the
represented scales ``r >= r_min``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ballratio import ratio_sup
from .dyadic import AtomicMeasure, annulus_indices, norms
from .report import Certificate


@dataclass(frozen=True)
class DecayParams:
    alpha: float
    s: float
    n: int

    def __post_init__(self):
        if not 0 < self.alpha < self.s < self.n:
            raise ValueError(f"need 0 < alpha < s < n, got alpha={self.alpha}, s={self.s}, n={self.n}")


def reweight(nu: AtomicMeasure, alpha: float) -> AtomicMeasure:
    """Multiply each atom in ``A_k`` by ``2**(-k alpha)``."""
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    k = annulus_indices(nu.positions)
    return nu.with_masses(nu.masses * np.exp2(-k * alpha))


def constant_C_alpha_s(alpha: float, s: float) -> float:
    """``1 + sum_k 2**(-k alpha) (k+1)**s``, rounded up by a geometric tail bound."""
    if not (alpha > 0 and s > 0):
        raise ValueError("alpha and s must be > 0")
    half = 2.0 ** (-alpha / 2)
    # past k0 consecutive terms shrink by at least 2**(-alpha/2)
    x = alpha / (2 * s) * math.log(2.0)
    k0 = 0 if x > 700 else max(0, math.ceil(1.0 / math.expm1(x) - 1.0))
    terms = [1.0]
    k = 0
    while True:
        term = 2.0 ** (-k * alpha) * (k + 1) ** s
        terms.append(term)
        k += 1
        if k > k0 and term < 1e-15 * math.fsum(terms):
            break
    nxt = 2.0 ** (-k * alpha) * (k + 1) ** s
    return math.fsum(terms) + nxt / (1.0 - half)


def cond2_constant(alpha: float) -> float:
    """``2**(alpha/2) 3**alpha / (1 - 2**-alpha)``."""
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    return 2.0 ** (alpha / 2) * 3.0**alpha / (1.0 - 2.0**-alpha)


def annulus_window(j: int) -> tuple[int, int]:
    """Annuli that a ball ``B[x, r]`` with ``j <= |x| < j+1``, ``r <= |x|/2`` can meet."""
    return (j - 1) // 2, math.ceil(1.5 * (j + 1))


def _origin_sup(mu: AtomicMeasure, p: float, r_min: float | None, kind: str, threshold):
    r_min = mu.r_min if r_min is None else r_min
    origin = np.zeros((1, mu.n))
    if len(mu) and np.any(mu.radii == 0):
        return Certificate(
            kind,
            math.inf,
            threshold,
            center=origin[0],
            radius=0.0,
            r_min=r_min,
            notes=["atom at the origin: ratio diverges as r -> 0"],
        )
    res = ratio_sup(mu, origin, p, r_min=r_min)
    return Certificate(kind, res.sup, threshold, res.bound, res.center, res.radius, r_min, extra={"exponent": p})


def certify_cond1(mu: AtomicMeasure, params: DecayParams, r_min: float | None = None) -> Certificate:
    """Exact ``sup_{r >= r_min} mu(B[0, r]) / r**(s - alpha)`` against ``C(alpha, s)``."""
    cert = _origin_sup(mu, params.s - params.alpha, r_min, "cond1", constant_C_alpha_s(params.alpha, params.s))
    cert.notes.append("threshold: explicit series constant")
    return cert


def certify_cond2(
    mu: AtomicMeasure,
    params: DecayParams,
    centers,
    delta: float,
    a: float = 0.5,
    r_min: float | None = None,
    rtol: float = 0.0,
) -> Certificate:
    """Exact sup of ``mu(B[x, r + delta]) |x|**alpha / r**s`` over centres and ``r_min <= r <= a|x|``."""
    if not 0 < a < 1:
        raise ValueError("a must lie in (0, 1)")
    r_min = mu.r_min if r_min is None else r_min
    centers = np.asarray(centers, dtype=float).reshape(-1, mu.n)
    rad = norms(centers)
    centers = centers[a * rad >= r_min]
    rad = norms(centers)
    threshold = cond2_constant(params.alpha)
    notes = ["threshold: explicit constant of the annular decay bound"]
    res = ratio_sup(mu, centers, params.s, delta=delta, r_min=r_min, r_max=a * rad, weights=rad**params.alpha, rtol=rtol)
    if not res.attained:
        notes.append("warning: no admissible (x, r) pair; certificate holds vacuously")
    return Certificate(
        "cond2",
        res.sup,
        threshold,
        res.bound,
        res.center,
        res.radius,
        r_min,
        notes=notes,
        extra={"delta": delta, "a": a, "centers": len(centers), "exact": res.exact},
    )
