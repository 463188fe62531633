import math

import numpy as np
import pytest


def brute_ratio_sup(positions, masses, centers, p, delta=0.0, r_min=1e-3, r_max=None, weights=None):
    """Direct double loop over (centre, atom) pairs; slow but obviously right."""
    positions = np.asarray(positions, dtype=float)
    masses = np.asarray(masses, dtype=float)
    centers = np.asarray(centers, dtype=float)
    best = 0.0
    for i, x in enumerate(centers):
        cap = math.inf if r_max is None else np.broadcast_to(r_max, (len(centers),))[i]
        w = 1.0 if weights is None else np.broadcast_to(weights, (len(centers),))[i]
        d = np.sqrt(((positions - x) ** 2).sum(axis=1))
        for dj in d:
            r = max(r_min, dj - delta)
            if r > cap:
                continue
            m = math.fsum(masses[d <= r + delta])
            best = max(best, w * m / r**p)
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
