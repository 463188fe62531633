import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frostkit.dyadic import AtomicMeasure, CubeSet, DyadicCube, gen_four_corner_cantor, gen_random_branching
from frostkit.frostman import (
    EnumerationTooLarge,
    ball_growth_normalize,
    count_antichain_covers,
    cube_constraint_violations,
    dyadic_content_bruteforce,
    greedy_content,
    greedy_frostman,
)


def test_single_cube():
    S = CubeSet(2, 3, frozenset({(2, 5)}))
    mu = greedy_frostman(S, 1.5)
    assert len(mu) == 1
    assert mu.masses[0] == 2.0 ** (-3 * 1.5)


def test_lebesgue_on_full_interval():
    S = CubeSet(1, 2, frozenset({(i,) for i in range(4)}))
    mu = greedy_frostman(S, 0.999999999)
    assert mu.total_mass == pytest.approx(1.0, rel=1e-8)


def test_root_cap_binds():
    S = CubeSet(1, 1, frozenset({(0,), (1,)}))
    mu = greedy_frostman(S, 0.5)
    assert mu.total_mass == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(mu.masses, 0.5)


def test_bruteforce_examples():
    single = dyadic_content_bruteforce(CubeSet(1, 2, frozenset({(1,)})), 0.999999)
    assert single.value == pytest.approx(0.25, rel=1e-5)
    assert single.witness == (DyadicCube(2, (1,)),)
    full = CubeSet(1, 2, frozenset({(i,) for i in range(4)}))
    c = dyadic_content_bruteforce(full, 0.999999)
    assert c.witness == (DyadicCube(0, (0,)),)
    # two separated quarters at s = 1/2: leaves and root tie at 1, coarsest wins
    two = CubeSet(1, 2, frozenset({(0,), (2,)}))
    c = dyadic_content_bruteforce(two, 0.5)
    assert c.value == 1.0
    assert c.witness == (DyadicCube(0, (0,)),)
    assert count_antichain_covers(two) == 5


def test_bruteforce_refuses_large_instances():
    S = gen_four_corner_cantor(0.25, 3)
    with pytest.raises(EnumerationTooLarge):
        dyadic_content_bruteforce(S, 1.0, max_covers=100)


def test_greedy_content_witness_is_a_cover():
    rng = np.random.default_rng(7)
    S = gen_random_branching(rng, 2, 5)
    c = greedy_content(S, 1.2)
    for m in S:
        leaf = DyadicCube(S.level, m)
        assert sum(q.contains(leaf) for q in c.witness) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 2**16 - 1), st.sampled_from([0.3, 0.5, 0.8, 1.2, 1.7]))
def test_greedy_equals_bruteforce(mask, s):
    leaves = [idx for idx in itertools.product(range(4), repeat=2)]
    members = frozenset(leaves[i] for i in range(16) if mask >> i & 1)
    S = CubeSet(2, 2, members)
    mu = greedy_frostman(S, s)
    oracle = dyadic_content_bruteforce(S, s)
    assert abs(mu.total_mass - oracle.value) <= 1e-12 * max(1.0, oracle.value)
    assert abs(greedy_content(S, s).value - oracle.value) <= 1e-12 * max(1.0, oracle.value)
    assert cube_constraint_violations(mu, s, S.level) == []


def test_frostman_on_cantor_respects_every_cube():
    S = gen_four_corner_cantor(0.35, 4)
    mu = greedy_frostman(S, 1.2)
    assert cube_constraint_violations(mu, 1.2, S.level) == []
    assert mu.total_mass == pytest.approx(greedy_content(S, 1.2).value, rel=1e-12)


def test_normalize_single_atom():
    nu = AtomicMeasure([[0.0, 0.0]], [1.0], 1.0)
    out, M, res = ball_growth_normalize(nu, 1.0, [[0.0, 0.0]], 0.0)
    assert M == 1.0
    assert out == nu
    assert res.radius == 1.0


def test_normalize_enforces_ball_bound():
    S = gen_four_corner_cantor(0.35, 3)
    nu = greedy_frostman(S, 1.2)
    centers = S.centers()
    out, M, _ = ball_growth_normalize(nu, 1.2, centers, 0.0)
    for x in centers:
        d = np.sort(np.sqrt(((out.positions - x) ** 2).sum(axis=1)))
        for r in np.maximum(d, out.r_min):
            assert out.ball_mass(x, r) <= r**1.2 * (1 + 1e-12)


def test_normalize_rejects_blind_net():
    nu = AtomicMeasure([[0.0, 0.0]], [1.0], 1.0)
    with pytest.raises(ValueError):
        ball_growth_normalize(nu, 1.0, np.zeros((0, 2)), 0.0)


def test_exponent_range():
    S = CubeSet(2, 1, frozenset({(0, 0)}))
    for s in (0.0, 2.0, -1.0):
        with pytest.raises(ValueError):
            greedy_frostman(S, s)
    with pytest.raises(ValueError):
        greedy_frostman(CubeSet(2, 1, frozenset()), 1.0)


def test_uniform_square_normalizer_regression():
    # uniform mass 4**-L on the full square, s = n = 2
    from frostkit.dyadic import cubeset_measure, gen_full_cube
    from frostkit.pipeline import normalization_candidates

    S = gen_full_cube(2, 5)
    mu = cubeset_measure(S, np.full(len(S), 4.0**-5))
    centers, delta = normalization_candidates(S)
    assert ball_growth_normalize(mu, 2.0, centers, delta)[1] == pytest.approx(13.744678440936946, rel=1e-12)
    # without inflation the worst ball is B[centre, r_min]: five atoms over r_min**2
    assert ball_growth_normalize(mu, 2.0, S.centers(), 0.0)[1] == pytest.approx(5.0, rel=1e-12)
