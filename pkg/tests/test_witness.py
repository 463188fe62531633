import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frostkit.dyadic import AtomicMeasure, norms
from frostkit.witness import (
    Bump,
    RieszKernel,
    empirical_orders,
    far_field_bound,
    field_values,
    grid_points,
    kernel_eval,
    solve_divergence,
    sphere_area,
    supnorm_refinement_study,
    weak_divergence_residual,
)


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_kernel_values():
    assert np.allclose(kernel_eval(2, [1.0, 0.0]), [1 / (2 * math.pi), 0.0])
    assert np.linalg.norm(kernel_eval(3, [0.0, 0.6, 0.8])) == pytest.approx(1 / (4 * math.pi))
    with pytest.raises(ValueError):
        kernel_eval(2, [0.0, 0.0])
    with pytest.raises(ValueError):
        RieszKernel(1)


def test_kernel_homogeneity():
    x = np.array([0.3, -1.1, 0.4])
    assert np.allclose(kernel_eval(3, 2.5 * x), 2.5**-2 * kernel_eval(3, x))


def test_unit_atom_field():
    mu = AtomicMeasure([[0.0, 0.0]], [1.0], 0.01)
    wf = solve_divergence(mu, [[1.0, 0.0]])
    assert np.allclose(wf.values, [[1 / (2 * math.pi), 0.0]], rtol=1e-15)


def test_points_near_atoms_are_skipped():
    mu = AtomicMeasure([[0.0, 0.0]], [1.0], 0.1)
    wf = solve_divergence(mu, [[0.05, 0.0], [1.0, 0.0]])
    assert wf.skipped == 1 and len(wf.points) == 1
    empty = solve_divergence(mu, [[0.05, 0.0]])
    assert len(empty.values) == 0 and empty.notes and math.isnan(empty.sup_norm)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_linearity_and_translation(seed):
    rng = np.random.default_rng(seed)
    p1, p2 = rng.uniform(-1, 1, (6, 2)), rng.uniform(-1, 1, (5, 2))
    m1, m2 = rng.uniform(0.1, 1, 6), rng.uniform(0.1, 1, 5)
    pts = rng.uniform(2, 3, (10, 2))
    a = AtomicMeasure(p1, m1, 0.01)
    b = AtomicMeasure(p2, m2, 0.01)
    both = AtomicMeasure(np.vstack([p1, p2]), np.concatenate([m1, m2]), 0.01)
    assert np.allclose(field_values(both, pts), field_values(a, pts) + field_values(b, pts), rtol=1e-12)
    shift = rng.uniform(-5, 5, 2)
    moved = AtomicMeasure(p1 + shift, m1, 0.01)
    assert np.allclose(field_values(moved, pts + shift), field_values(a, pts), rtol=1e-9, atol=1e-14)
    assert np.allclose(field_values(a.scaled(3.0), pts), 3 * field_values(a, pts), rtol=1e-14)


def test_far_field_bound():
    rng = np.random.default_rng(0)
    mu = AtomicMeasure(rng.uniform(-0.5, 0.5, (50, 2)), rng.uniform(0.1, 1, 50), 0.01)
    R = float(norms(mu.positions).max())
    pts = rng.normal(size=(200, 2))
    pts = pts / norms(pts)[:, None] * rng.uniform(2 * R, 10 * R, (200, 1))
    vals = norms(field_values(mu, pts))
    bounds = np.array([far_field_bound(mu.total_mass, 2, R, x) for x in pts])
    assert np.all(vals <= bounds)


def test_bump_gradient_matches_finite_difference():
    b = Bump((0.2, -0.1), 0.8)
    x = np.array([0.5, 0.1])
    eps = 1e-6
    fd = [(b.value(x + eps * e) - b.value(x - eps * e)) / (2 * eps) for e in np.eye(2)]
    assert np.allclose(b.grad(x), fd, rtol=1e-6)
    assert b.value(b.center) == 1.0
    assert b.value([2.0, 2.0]) == 0.0


def test_residual_zero_measure():
    mu = AtomicMeasure(np.zeros((0, 2)), [], 0.01, n=2)
    r = weak_divergence_residual(mu, Bump((0.0, 0.0), 1.0), 64)
    assert r.residual == 0.0


def test_residual_guards():
    mu = AtomicMeasure([[0.0, 0.0]], [1.0], 0.01)
    with pytest.raises(ValueError):
        weak_divergence_residual(mu, Bump((0.0, 0.0), 1.0), 16)
    with pytest.raises(ValueError):
        weak_divergence_residual(mu, Bump((0.0, 0.0), 1.0), 128, bounds=([-1.0, -1.0], [1.0, 1.0]))


def test_residual_converges_at_origin_atom():
    mu = AtomicMeasure([[0.0, 0.0]], [1.0], 0.01)
    b = Bump((0.0, 0.0), 1.0)
    res = [weak_divergence_residual(mu, b, c) for c in (64, 128, 256)]
    orders = empirical_orders([r.h for r in res], [r.residual for r in res])
    assert min(orders) >= 0.9
    assert res[-1].relative <= 1e-3
    assert res[-1].source == 1.0


def test_grid_points():
    g = grid_points([0, 0], [1, 1], 2)
    assert np.allclose(g, [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]])


def test_study_trends():
    pts = grid_points([-1, -1], [1, 1], 8)
    flat = [(k, AtomicMeasure([[5.0, 5.0]], [1.0], 0.1), pts, None) for k in range(3)]
    assert supnorm_refinement_study(flat).trend == "bounded"
    # point mass probed at distance rho: |f| = 1 / (2 pi rho)
    entries = []
    for k, rho in enumerate((1e-1, 1e-2, 1e-3)):
        mu = AtomicMeasure([[0.0, 0.0]], [1.0], rho)
        entries.append((k, mu, [[rho, 0.0]], rho))
    study = supnorm_refinement_study(entries)
    assert study.trend == "diverging"
    assert all(r.ratio == pytest.approx(10.0) for r in study.rows[1:])
    assert study.to_table().splitlines()[0] == "level,grid,rho,sup,ratio"
    with pytest.raises(ValueError):
        supnorm_refinement_study(entries[:2])
