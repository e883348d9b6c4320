"""Shared fixtures: the expensive barrier bundles are built once per session."""
import numpy as np
import pytest

from mconvex import barrier as bar
from mconvex import geometry as geo
from mconvex import meshes


@pytest.fixture(scope="session")
def ball_domain():
    return geo.domain_ball(radius=1.0)


@pytest.fixture(scope="session")
def north_pole():
    return np.array([0.0, 0.0, 1.0])


@pytest.fixture(scope="session")
def ball_bundle(ball_domain, north_pole):
    return bar.build_barrier(ball_domain, north_pole, m=2, eta=1.0)


@pytest.fixture(scope="session")
def scaled_ball_domain():
    # constant conformal factor exp(2f) with f = -log 2: metric = (1/4) euclidean
    return geo.domain_ball(radius=1.0, metric=geo.metric_conformal("0 - log(2)"))


@pytest.fixture(scope="session")
def scaled_ball_bundle(scaled_ball_domain, north_pole):
    return bar.build_barrier(scaled_ball_domain, north_pole, m=2)


@pytest.fixture(scope="session")
def tube_points(ball_bundle):
    """1000 chart points with 0 <= u < eps and phi(u) > 0, plus tube data."""
    b = ball_bundle
    rng = np.random.default_rng(7)
    lo, hi = b.chart[:, 0], b.chart[:, 1]
    collected = []
    while sum(len(c) for c in collected) < 1000:
        pts = lo + (hi - lo) * rng.random((4000, 3))
        data = bar.tube_eval(b.sigma, pts, b.scale_factor)
        live = data.valid & (data.u >= 0.0) & (data.u < 0.95 * b.epsilon)
        live &= np.asarray(b.domain.contains(pts), dtype=bool)
        live &= bar.cutoff(np.where(live, data.u, b.epsilon), b.epsilon) > 0.0
        collected.append(pts[live])
    return np.concatenate(collected)[:1000]


@pytest.fixture(scope="session")
def unit_disk_mesh():
    return meshes.disk_mesh(radius=1.0, rings=24, segments=256)
