import math

import numpy as np
import pytest

from frostkit.pipeline import PipelineConfig, normalization_candidates, run_pipeline, sample_centers
from frostkit.dyadic import gen_four_corner_cantor


def test_config_enforces_parameter_relation():
    assert PipelineConfig(alpha=0.2).s == pytest.approx(1.2)
    with pytest.raises(ValueError):
        PipelineConfig(alpha=0.2, s=1.5)
    with pytest.raises(ValueError):
        PipelineConfig(n=2, m=2)
    with pytest.raises(ValueError):
        PipelineConfig(set_kind="sierpinski")


def test_candidates_include_origin():
    S = gen_four_corner_cantor(0.35, 2)
    centers, delta = normalization_candidates(S)
    assert np.array_equal(centers[0], [0.0, 0.0])
    assert delta == S.side


def test_sample_centers_seeded_and_admissible():
    S = gen_four_corner_cantor(0.35, 3)
    centers, delta = normalization_candidates(S)
    a = sample_centers(centers, 0.5, delta, 100, seed=3)
    b = sample_centers(centers, 0.5, delta, 100, seed=3)
    assert np.array_equal(a, b) and len(a) == 100
    assert np.all(0.5 * np.linalg.norm(a, axis=1) >= delta)


def test_pipeline_level4_frozen():
    res = run_pipeline(PipelineConfig(level=4))
    assert res.passed
    assert res.normalizer == pytest.approx(3.4638163536307816, rel=1e-12)
    kinds = [c.kind for c in res.certificates]
    assert kinds == ["cond1", "cond2", "bp1", "bp2"]
    rep = res.report()
    for stage in ("[generate]", "[frostman]", "[reweight]", "[certify]", "[witness]"):
        assert stage in rep
    assert rep == run_pipeline(PipelineConfig(level=4)).report()


def test_full_cube_pipeline_runs():
    res = run_pipeline(PipelineConfig(set_kind="full-cube", level=3))
    assert res.passed
    assert math.isfinite(res.witness.sup_norm)
