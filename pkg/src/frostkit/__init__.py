"""Frostman measures with annular decay, growth certificates, operator symbols
and divergence witnesses for removability questions."""

from .dyadic import (
    AtomicMeasure,
    BallQuery,
    CubeSet,
    DyadicCube,
    annulus_index,
    ball_mass,
    box_dimension_estimate,
    gen_four_corner_cantor,
    gen_power_density,
)

from .decay import DecayParams, certify_cond1, certify_cond2, cond2_constant, constant_C_alpha_s, reweight
from .frostman import ball_growth_normalize, dyadic_content_bruteforce, greedy_frostman
from .growth import OperatorOrderParams, bp1_sup, bp2_uniform, dini_integral
from .pipeline import PipelineConfig, run_pipeline
from .witness import solve_divergence, weak_divergence_residual

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure",
    "BallQuery",
    "CubeSet",
    "DyadicCube",
    "annulus_index",
    "ball_mass",
    "box_dimension_estimate",
    "gen_four_corner_cantor",
    "gen_power_density",
    "DecayParams",
    "certify_cond1",
    "certify_cond2",
    "cond2_constant",
    "constant_C_alpha_s",
    "reweight",
    "ball_growth_normalize",
    "dyadic_content_bruteforce",
    "greedy_frostman",
    "OperatorOrderParams",
    "bp1_sup",
    "bp2_uniform",
    "dini_integral",
    "PipelineConfig",
    "run_pipeline",
    "solve_divergence",
    "weak_divergence_residual",
]
