import math

import numpy as np
import pytest
from scipy.integrate import quad

from frostkit.dyadic import AtomicMeasure, gen_power_density, lattice_net, norms
from frostkit.growth import (
    OperatorOrderParams,
    bp1_sup,
    bp2_uniform,
    dini_integral,
    pointwise_regularity_check,
    vectorize,
)

OP = OperatorOrderParams(2, 1)


def test_params():
    assert OP.codim == 1
    with pytest.raises(ValueError):
        OperatorOrderParams(2, 2)


def test_bp1_single_atom():
    mu = AtomicMeasure([[1.0, 0.0]], [1.0], 0.5)
    cert = bp1_sup(mu, OP)
    assert cert.sup == 1.0 and cert.radius == 1.0


def test_bp1_detects_point_mass_growth():
    sups = []
    for d in (1e-2, 1e-3, 1e-4):
        mu = AtomicMeasure([[d, 0.0]], [1.0], d)
        sups.append(bp1_sup(mu, OP).sup)
    assert sups[1] / sups[0] == pytest.approx(10.0)
    assert sups[2] / sups[1] == pytest.approx(10.0)


def test_bp1_origin_atom():
    mu = AtomicMeasure([[0.0, 0.0]], [1.0], 0.1)
    cert = bp1_sup(mu, OP)
    assert math.isinf(cert.sup) and cert.radius == 0.0


def test_bp1_power_density_is_bounded_under_refinement():
    # continuum value mu(B[0, r]) / r = 2 pi
    sups = [bp1_sup(gen_power_density(2, 1, 2.0, h), OP).sup for h in (0.2, 0.1, 0.05)]
    assert sups == pytest.approx([5.9861431066661765, 6.126424111038741, 6.1963888451888485], rel=1e-12)
    assert max(sups) < 2 * math.pi
    assert max(sups) / min(sups) < 1.05


def test_dini_single_atom_closed_form():
    x = np.array([4.0, 0.0])
    d = 0.5
    mu = AtomicMeasure([[4.0 + d, 0.0]], [1.0], 0.01)
    rep = dini_integral(mu, x, OP)
    assert rep.value == pytest.approx(1 / d - 2 / 4.0, rel=1e-14)
    assert rep.below_r_min == 0.0


def test_dini_no_atoms():
    mu = AtomicMeasure([[10.0, 0.0]], [1.0], 0.01)
    assert dini_integral(mu, [1.0, 0.0], OP).value == 0.0
    with pytest.raises(ValueError):
        dini_integral(mu, [0.0, 0.0], OP)


def test_dini_matches_quadrature():
    rng = np.random.default_rng(4)
    mu = AtomicMeasure(rng.uniform(-2, 2, (40, 2)), rng.uniform(0.1, 1, 40), 0.05)
    x = np.array([1.5, -0.7])
    rep = dini_integral(mu, x, OP)
    d = norms(mu.positions - x)
    breaks = sorted(v for v in d if 0.05 < v < rep.upper)
    f = lambda r: math.fsum(mu.masses[d <= r]) / r**2
    edges = [0.05, *breaks, rep.upper]
    want = math.fsum(quad(f, a, b)[0] for a, b in zip(edges, edges[1:]) if b > a)
    assert rep.value == pytest.approx(want, rel=1e-8)


def test_dini_below_r_min_infinite_on_atom():
    mu = AtomicMeasure([[1.0, 0.0]], [1.0], 0.01)
    assert math.isinf(dini_integral(mu, [1.0, 0.0], OP).below_r_min)


def test_bp2_zero_measure_and_threshold():
    mu = AtomicMeasure(np.zeros((0, 2)), [], 0.1, n=2)
    cert = bp2_uniform(mu, OP, [[1.0, 0.0]], threshold=1.0)
    assert cert.sup == 0.0 and cert.passed
    with pytest.raises(ValueError):
        bp2_uniform(mu, OP, [[0.0, 0.0]])


def test_pointwise_regularity_power_density():
    h = 0.1
    mu = gen_power_density(2, 1, 2.0, h)
    net = lattice_net(mu.positions, h)
    net = net[norms(net) >= 0.5]
    cert, implied = pointwise_regularity_check(mu, OP, 16.0, net, h)
    assert cert.passed
    assert cert.sup == pytest.approx(14.228717773026704, rel=1e-12)  # frozen
    assert implied == 8.0
    samples = net[:: max(1, len(net) // 50)]
    dini = bp2_uniform(mu, OP, samples, threshold=implied)
    assert dini.passed


def test_pointwise_vacuous():
    mu = AtomicMeasure([[10.0, 0.0]], [1.0], 0.01)
    cert, _ = pointwise_regularity_check(mu, OP, 1.0, [[1.0, 0.0]], 0.0)
    assert cert.sup == 0.0
    assert any("vacuous" in t for t in cert.notes)


def test_covector_scaling():
    mu = AtomicMeasure([[1.0, 0.0], [0.0, 2.0]], [1.0, 0.5], 0.1)
    v = vectorize(mu, [3.0, 0.0])
    assert v.norm == 3.0
    assert bp1_sup(v.total_variation(), OP).sup == pytest.approx(3 * bp1_sup(mu, OP).sup, rel=1e-15)
    assert v.ball_mass([0, 0], 1.0) == 3.0
    assert np.allclose(v.value([0, 0], 1.0), [3.0, 0.0])
    unit = vectorize(mu, [0.6, 0.8])
    assert bp1_sup(unit.total_variation(), OP).sup == pytest.approx(bp1_sup(mu, OP).sup, rel=1e-15)
    with pytest.raises(ValueError):
        vectorize(mu, [0.0, 0.0])
