import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frostkit.dyadic import (
    AtomicMeasure,
    BallQuery,
    CubeSet,
    DyadicCube,
    annulus_index,
    annulus_indices,
    annulus_masses,
    ball_mass,
    box_counts,
    box_dimension_estimate,
    cube_net,
    cubeset_measure,
    gen_four_corner_cantor,
    gen_full_cube,
    gen_power_density,
    gen_random_branching,
    lattice_net,
    norms,
)


def test_cube_geometry():
    q = DyadicCube(2, (1, 3))
    assert q.side == 0.25
    assert np.allclose(q.corner, [0.25, 0.75])
    assert np.allclose(q.center, [0.375, 0.875])
    assert q.parent() == DyadicCube(1, (0, 1))
    assert q.ancestor(0) == DyadicCube(0, (0, 0))
    assert len(q.children()) == 4
    assert all(q.contains(c) for c in q.children())
    assert not q.contains(DyadicCube(2, (0, 0)))


def test_cube_negative_indices_floor_correctly():
    q = DyadicCube(3, (-1, -5))
    assert q.parent() == DyadicCube(2, (-1, -3))


def test_cubeset_validation():
    with pytest.raises(ValueError):
        CubeSet(2, 1, frozenset({(0,)}))
    with pytest.raises(OverflowError):
        CubeSet(1, 70, frozenset({(0,)}))


def test_coarsen_and_union():
    S = gen_full_cube(2, 3)
    assert len(S) == 64
    assert len(S.coarsen(1)) == 4
    assert S.coarsen(3) == S
    T = CubeSet(2, 3, frozenset({(8, 8)}))
    assert len(S.union(T)) == 65


def test_ball_mass_closed_ball_examples():
    mu = AtomicMeasure([[0.0, 0.0]], [1.0], 0.1)
    assert ball_mass(mu, BallQuery((0.0, 0.0), 0.0)) == 1.0
    mu = AtomicMeasure([[2.5, 0.0]], [1.0], 0.1)
    assert ball_mass(mu, BallQuery((0.0, 0.0), 2.0)) == 0.0
    mu = AtomicMeasure([[1.0, 0.0], [-1.0, 0.0]], [0.5, 0.5], 0.1)
    assert ball_mass(mu, BallQuery((0.0, 0.0), 1.0)) == 1.0


def test_measure_validation():
    with pytest.raises(ValueError):
        AtomicMeasure([[0.0, 0.0]], [0.0], 0.1)
    with pytest.raises(ValueError):
        AtomicMeasure([[0.0, 0.0]], [1.0], 0.0)
    with pytest.raises(ValueError):
        AtomicMeasure([[0.0, 0.0], [0.0, 0.0]], [1.0, 1.0], 0.1)
    with pytest.raises(ValueError):
        AtomicMeasure([[np.nan, 0.0]], [1.0], 0.1)
    empty = AtomicMeasure(np.zeros((0, 2)), [], 0.1, n=2)
    assert len(empty) == 0 and empty.total_mass == 0.0


def test_measure_is_canonically_ordered():
    a = AtomicMeasure([[1.0, 0.0], [0.0, 1.0]], [1.0, 2.0], 0.1)
    b = AtomicMeasure([[0.0, 1.0], [1.0, 0.0]], [2.0, 1.0], 0.1)
    assert a == b


def test_annulus_index_examples():
    assert annulus_index((2.5, 0.0)) == 2
    assert annulus_index((0.0, 0.0)) == 0
    assert annulus_index((3.0, 4.0)) == 5


def test_annulus_masses_partition_total():
    rng = np.random.default_rng(1)
    pos = rng.uniform(-5, 5, (200, 2))
    mu = AtomicMeasure(pos, rng.uniform(0.1, 1, 200), 0.01)
    am = annulus_masses(mu)
    assert math.isclose(math.fsum(am.values()), mu.total_mass, rel_tol=1e-14)
    assert set(am) == set(annulus_indices(mu.positions).tolist())


def test_cantor_quarter_is_exactly_dyadic():
    S = gen_four_corner_cantor(0.25, 1)
    assert S.level == 2
    assert sorted(S) == [(0, 0), (0, 3), (3, 0), (3, 3)]
    for k in range(4):
        S = gen_four_corner_cantor(0.25, k)
        assert len(S) == 4**k and S.level == 2 * k


def test_cantor_box_dimension():
    est = box_dimension_estimate([gen_four_corner_cantor(0.35, k) for k in range(3, 7)])
    assert abs(est - math.log(4) / math.log(1 / 0.35)) < 0.05
    assert abs(est - 1.308573501339799) < 1e-9  # frozen


def test_box_dimension_examples():
    assert box_dimension_estimate([gen_full_cube(2, j) for j in range(1, 6)]) == pytest.approx(2.0, abs=1e-12)
    quarter = box_dimension_estimate([gen_four_corner_cantor(0.25, k) for k in range(1, 5)])
    assert abs(quarter - 1.0) < 0.01
    points = [CubeSet(2, j, frozenset({(0, 0)})) for j in range(1, 5)]
    assert box_dimension_estimate(points) == 0.0
    with pytest.raises(ValueError):
        box_dimension_estimate(points[:2])


def test_box_counts():
    S = gen_full_cube(2, 3)
    assert box_counts(S, [0, 1, 2, 3]) == [(0, 1), (1, 4), (2, 16), (3, 64)]


def test_power_density_cell_mass():
    mu = gen_power_density(2, 1, 1.05, 0.1)
    i = int(np.argmin(norms(mu.positions - np.array([1.0, 0.0]))))
    assert np.allclose(mu.positions[i], [1.0, 0.0])
    assert mu.masses[i] == pytest.approx(0.01, rel=1e-12)
    assert not np.any(norms(mu.positions) == 0)
    assert mu.r_min == 0.1


def test_random_branching_is_seeded():
    a = gen_random_branching(np.random.default_rng(5), 2, 5)
    b = gen_random_branching(np.random.default_rng(5), 2, 5)
    assert a == b and len(a) > 0


def test_cube_net_covers_neighbourhood():
    S = gen_four_corner_cantor(0.35, 3)
    net, radius = cube_net(S)
    rng = np.random.default_rng(0)
    atoms = S.centers()
    probe = atoms[rng.integers(len(atoms), size=300)] + rng.uniform(-S.side, S.side, (300, 2))
    d = np.min(norms(probe[:, None, :] - net[None]), axis=1)
    assert np.all(d <= radius * (1 + 1e-12))


def test_lattice_net_covering_radius():
    rng = np.random.default_rng(3)
    pos = rng.uniform(0, 1, (30, 2))
    delta = 0.05
    net = lattice_net(pos, delta)
    probe = pos[rng.integers(30, size=500)] + rng.uniform(-delta, delta, (500, 2))
    d = np.min(norms(probe[:, None, :] - net[None]), axis=1)
    assert np.all(d <= delta * (1 + 1e-12))


def test_cubeset_measure_uses_centres():
    S = gen_full_cube(1, 2)
    mu = cubeset_measure(S)
    assert np.allclose(mu.positions[:, 0], [0.125, 0.375, 0.625, 0.875])
    assert mu.r_min == 0.25


@settings(max_examples=40, deadline=None)
@given(
    pts=st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=20, unique=True),
    r=st.floats(0, 5),
    cx=st.floats(-3, 3),
    cy=st.floats(-3, 3),
)
def test_ball_mass_matches_direct_sum(pts, r, cx, cy):
    mu = AtomicMeasure(pts, np.ones(len(pts)), 0.01)
    direct = sum(1.0 for p in pts if math.hypot(p[0] - cx, p[1] - cy) <= r)
    got = mu.ball_mass((cx, cy), r)
    # tree and direct distance may disagree only for atoms on the sphere
    d = norms(np.array(pts) - np.array([cx, cy]))
    if not np.any(np.isclose(d, r, rtol=1e-12, atol=1e-15)):
        assert got == direct


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_coarsen_is_monotone(seed):
    S = gen_random_branching(np.random.default_rng(seed), 2, 5)
    counts = [len(S.coarsen(j)) for j in range(S.level + 1)]
    assert counts == sorted(counts)
