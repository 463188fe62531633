"""End-to-end construction: set -> Frostman measure -> reweighting -> certificates -> witness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .decay import DecayParams, certify_cond1, certify_cond2, constant_C_alpha_s, reweight
from .dyadic import AtomicMeasure, CubeSet, cube_net, gen_four_corner_cantor, gen_full_cube, gen_random_branching, norms
from .frostman import ball_growth_normalize, greedy_frostman
from .growth import OperatorOrderParams, bp1_sup, bp2_uniform
from .report import failed, format_block
from .witness import WitnessField, grid_points, solve_divergence

SET_KINDS = ("four-corner", "full-cube", "random-branching")


@dataclass
class PipelineConfig:
    set_kind: str = "four-corner"
    ratio: float = 0.35
    level: int = 6
    n: int = 2
    m: int = 1
    alpha: float = 0.2
    s: float | None = None
    a: float = 0.5
    seed: int = 0
    samples: int = 100
    witness_grid: int = 64
    rtol: float = 0.0

    def __post_init__(self):
        if self.set_kind not in SET_KINDS:
            raise ValueError(f"unknown set kind {self.set_kind!r}; choose from {', '.join(SET_KINDS)}")
        OperatorOrderParams(self.n, self.m)
        target = self.n - self.m + self.alpha
        if self.s is None:
            self.s = target
        elif not math.isclose(self.s, target, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"pipeline requires s = n - m + alpha = {target!r}, got s={self.s!r}")
        DecayParams(self.alpha, self.s, self.n)
        if self.level < 0:
            raise ValueError("level must be >= 0")
        if self.samples < 1 or self.witness_grid < 2:
            raise ValueError("samples must be >= 1 and witness grid >= 2")


def build_set(cfg: PipelineConfig) -> CubeSet:
    if cfg.set_kind == "four-corner":
        return gen_four_corner_cantor(cfg.ratio, cfg.level, n=cfg.n)
    if cfg.set_kind == "full-cube":
        return gen_full_cube(cfg.n, cfg.level)
    return gen_random_branching(np.random.default_rng(cfg.seed), cfg.n, cfg.level)


def normalization_candidates(S: CubeSet) -> tuple[np.ndarray, float]:
    """Cube net of ``S`` plus the origin, and the matching ``delta``."""
    net, _ = cube_net(S)
    return np.vstack([np.zeros((1, S.n)), net]), S.side


def frostman_normalized(S: CubeSet, s: float, rtol: float = 0.0):
    """Greedy Frostman measure of ``S`` scaled so every candidate ball obeys ``r**s``."""
    centers, delta = normalization_candidates(S)
    nu, M, res = ball_growth_normalize(greedy_frostman(S, s), s, centers, delta, rtol=rtol)
    return nu, M, res, centers, delta


def sample_centers(centers, a: float, r_min: float, count: int, seed: int) -> np.ndarray:
    """``count`` nonzero candidate centres admissible for the Dini check, seeded."""
    centers = np.asarray(centers, dtype=float)
    ok = centers[a * norms(centers) >= r_min]
    if len(ok) == 0:
        raise ValueError("no admissible nonzero sample centres")
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(ok), size=min(count, len(ok)), replace=False)
    return ok[np.sort(pick)]


def witness_sup(mu: AtomicMeasure, S: CubeSet, grid: int, rho: float | None = None) -> WitnessField:
    """``sup |f|`` for ``mu`` scaled to unit mass, on a fixed grid around the unit cube."""
    unit = mu.scaled(1.0 / mu.total_mass)
    lo = np.full(S.n, -0.25)
    hi = np.full(S.n, 1.25)
    return solve_divergence(unit, grid_points(lo, hi, grid), rho=rho)


@dataclass
class PipelineResult:
    config: PipelineConfig
    cubes: CubeSet
    nu: AtomicMeasure
    mu: AtomicMeasure
    normalizer: float
    certificates: list
    witness: WitnessField
    stages: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures()

    def failures(self) -> list:
        return [c for c in self.certificates if failed(c)]

    def report(self) -> str:
        return "".join(self.stages) + format_block("summary", [("pass", self.passed)])


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    stages = []
    S = build_set(cfg)
    if len(S) == 0:
        raise ValueError("generated set is empty")
    stages.append(format_block("generate", [
        ("set", cfg.set_kind), ("ratio", cfg.ratio if cfg.set_kind == "four-corner" else None),
        ("generation", cfg.level), ("dyadic_level", S.level), ("cubes", len(S)), ("n", cfg.n),
    ]))

    nu, M, res, centers, delta = frostman_normalized(S, cfg.s, rtol=cfg.rtol)
    stages.append(format_block("frostman", [
        ("s", cfg.s), ("atoms", len(nu)), ("greedy_mass", nu.total_mass * M), ("normalizer", M),
        ("normalized_mass", nu.total_mass), ("delta", delta), ("candidates", len(centers)),
        ("worst_center", res.center), ("worst_radius", res.radius),
    ]))

    mu = reweight(nu, cfg.alpha)
    stages.append(format_block("reweight", [
        ("alpha", cfg.alpha), ("mass_before", nu.total_mass), ("mass_after", mu.total_mass),
    ]))

    dp = DecayParams(cfg.alpha, cfg.s, cfg.n)
    op = OperatorOrderParams(cfg.n, cfg.m)
    c1 = certify_cond1(mu, dp)
    c2 = certify_cond2(mu, dp, centers, delta, a=cfg.a, rtol=cfg.rtol)
    b1 = bp1_sup(mu, op)
    b1.threshold = constant_C_alpha_s(cfg.alpha, cfg.s)
    pts = sample_centers(centers, cfg.a, mu.r_min, cfg.samples, cfg.seed)
    b2 = bp2_uniform(mu, op, pts, threshold=c2.bound * 2.0**-cfg.alpha / cfg.alpha, a=cfg.a)
    b2.notes.append("threshold: certified cond2 bound times 2**-alpha / alpha")
    certs = [c1, c2, b1, b2]
    stages.append(format_block("certify", [(c.kind, not failed(c)) for c in certs]))
    stages.append("".join(c.to_block() for c in certs))

    wf = witness_sup(mu, S, cfg.witness_grid)
    stages.append(format_block("witness", [
        ("grid", cfg.witness_grid), ("points", len(wf.points)), ("skipped", wf.skipped),
        ("rho", wf.rho), ("mass", 1.0), ("sup", wf.sup_norm), ("argmax", wf.argmax),
    ]))
    return PipelineResult(cfg, S, nu, mu, M, certs, wf, stages)
