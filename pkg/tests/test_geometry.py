import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from einmax.errors import ChartError, GeometryError
from einmax.geometry import (
    ObserverRegion,
    WarpedMetric,
    earliest_observation_set,
    fermi_chart,
    first_conjugate_time,
    geodesic_trace,
    hausdorff_distance,
    metric_from_json,
    minkowski,
    null_direction,
    observation_set,
    perturbed_flat,
    round_sphere,
    write_observation_csv,
)


def scalar_jacobi_zero(R, rtol):
    """First zero of f'' = -f / R^2, f(0) = 0, f'(0) = 1 (transverse Jacobi field on a round sphere)."""
    def rhs(s, y):
        return [y[1], -y[0] / (R * R)]

    def hit(s, y):
        return y[0]

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(rhs, (1e-3, 10 * R), [1e-3, 1.0], method="DOP853", rtol=rtol, atol=1e-15,
                    events=hit)
    return float(sol.t_events[0][0])


def test_minkowski_geodesics_are_straight():
    g = minkowski()
    x = np.array([0.3, -1.0, 0.5, 2.0])
    for theta in ([1.0, 0.6, 0.8, 0.0], [2.0, 0.3, -0.4, 0.1], [1.0, 0.0, 0.0, 0.0]):
        theta = np.array(theta)
        c = geodesic_trace(g, x, theta, 5.0)
        assert c.status == "horizon"
        assert np.allclose(c.points, x + np.outer(c.s, theta), atol=1e-12)
        assert c.norm_drift(g) < 1e-10


def test_no_conjugate_points_in_minkowski():
    g = minkowski()
    for spatial in ([1, 0, 0], [0.3, -0.2, 0.9]):
        theta = null_direction(g, np.zeros(4), spatial)
        assert first_conjugate_time(g, np.zeros(4), theta, 20.0) is None


def test_conjugate_search_requires_null_direction():
    with pytest.raises(GeometryError):
        first_conjugate_time(minkowski(), np.zeros(4), np.array([1.0, 0.0, 0.0, 0.0]), 1.0)


def equator_start(R):
    g = round_sphere(R)
    x = np.array([0.0, 1.0, 0.0, 0.0])
    return g, x, null_direction(g, x, [0.0, 1.0, 0.0])


@pytest.mark.parametrize("R", [1.0, 2.0, 0.7])
def test_sphere_conjugate_point_matches_scalar_jacobi(R):
    g, x, theta = equator_start(R)
    ref = scalar_jacobi_zero(R, rtol=1e-12)
    assert ref == pytest.approx(math.pi * R, rel=1e-9)
    got = first_conjugate_time(g, x, theta, 4 * R, rtol=1e-11)
    assert got == pytest.approx(ref, rel=1e-6)


def test_sphere_conjugate_point_beyond_horizon():
    g, x, theta = equator_start(1.0)
    assert first_conjugate_time(g, x, theta, 0.9 * math.pi) is None


def test_sphere_great_circle():
    R = 1.5
    g, x, theta = equator_start(R)
    c = geodesic_trace(g, x, theta, 2.5 * R)
    phi = c.s / R
    want = np.stack([c.s, np.cos(phi), np.sin(phi), np.zeros_like(phi)], axis=1)
    assert np.abs(c.points - want).max() < 1e-9
    assert c.norm_drift(g) < 1e-10


def test_geodesic_leaves_chart():
    g = perturbed_flat(chart_radius=1.0)
    c = geodesic_trace(g, np.zeros(4), null_direction(g, np.zeros(4), [1, 0, 0]), 5.0)
    assert c.status == "left_chart"
    assert c.end == pytest.approx(1.0, abs=0.02)


def test_finite_difference_fallback_agrees():
    fast, slow = perturbed_flat(analytic=True), perturbed_flat(analytic=False)
    X = np.array([[0.1, 0.3, -0.2, 0.5], [0.0, -0.4, 0.1, 0.2]])
    assert np.allclose(fast.christoffel(X), slow.christoffel(X), atol=1e-8)
    assert np.allclose(fast.christoffel_derivative(X), slow.christoffel_derivative(X), atol=1e-5)
    theta = null_direction(fast, X[0], [0.2, 1.0, -0.3])
    a = geodesic_trace(fast, X[0], theta, 1.0)
    b = geodesic_trace(slow, X[0], theta, 1.0)
    assert np.allclose(a.points[-1], b.points[-1], atol=1e-7)


def test_perturbed_flat_geodesic_conserves_norm():
    g = perturbed_flat(eps=0.1)
    x = np.array([0.0, 0.2, 0.1, -0.3])
    c = geodesic_trace(g, x, null_direction(g, x, [1, 1, 0]), 1.5)
    assert c.norm_drift(g) < 1e-10
    assert np.abs(c.points[-1, 1:] - c.points[0, 1:] - 1.5 * c.velocities[0, 1:]).max() > 1e-4


def test_metric_validation():
    bad = WarpedMetric(beta=lambda X: -np.ones(X.shape[:-1]), kappa=lambda X: np.broadcast_to(np.eye(3), X.shape[:-1] + (3, 3)))
    with pytest.raises(GeometryError):
        bad.validate_at(np.zeros(4))
    with pytest.raises(GeometryError):
        metric_from_json({"family": "torus"})
    assert metric_from_json({"family": "round_sphere", "radius": 2.0}).params["radius"] == 2.0


def test_fermi_chart_identity_and_boost():
    g = minkowski()
    chart = fermi_chart(g, np.zeros(4), np.eye(4))
    z = np.array([0.3, 0.2, -0.1, 0.4])
    assert np.allclose(chart(z), z, atol=1e-12)
    v = 0.6
    gam = 1 / math.sqrt(1 - v * v)
    F = np.eye(4)
    F[0, 0] = F[1, 1] = gam
    F[0, 1] = F[1, 0] = gam * v
    boosted = fermi_chart(g, np.zeros(4), F)
    assert np.allclose(boosted(z), z @ F, atol=1e-12)
    assert np.allclose(boosted.gram(0.7), np.diag([-1.0, 1, 1, 1]), atol=1e-12)


def test_fermi_frame_stays_orthonormal_on_sphere():
    R = 1.0
    g = round_sphere(R)
    x0 = np.zeros(4)
    frame = np.eye(4)
    frame[1:, 1:] /= 2 * R  # kappa = 4 R^2 delta at the origin
    chart = fermi_chart(g, x0, frame, s_range=(-2.0, 2.0))
    for s in (-2.0, 0.5, 2.0):
        assert np.allclose(chart.gram(s), np.diag([-1.0, 1, 1, 1]), atol=1e-10)
        assert np.allclose(chart.base_point(s), [s, 0, 0, 0], atol=1e-12)
    p = chart([0.0, 0.5, 0.0, 0.0])
    # spatial distance 0.5 on the unit sphere from the stereographic origin
    assert np.linalg.norm(p[1:]) == pytest.approx(math.tan(0.25), rel=1e-9)
    with pytest.raises(ChartError):
        chart([3.0, 0.0, 0.0, 0.0])
    with pytest.raises(GeometryError):
        fermi_chart(g, x0, np.eye(4))


def test_fermi_chart_fails_past_conjugate_point():
    chart = fermi_chart(round_sphere(1.0), np.zeros(4), np.diag([1.0, 0.5, 0.5, 0.5]))
    chart.check_injective([0.0, 1.0, 0.0, 0.0])
    with pytest.raises(ChartError):
        chart.check_injective([0.0, 3.3, 0.0, 0.0])


REGION = ObserverRegion(((1.0, 0.0, 0.0), (0.0, -0.7, 0.7), (0.5, 0.5, -0.5)), -1.0, 3.0, 0.1)


@pytest.fixture(scope="module")
def minkowski_obs():
    obs = observation_set(minkowski(), np.zeros(4), REGION, resolution=(16, 32))
    return obs, earliest_observation_set(obs)


def test_earliest_arrival_matches_closed_form(minkowski_obs):
    obs, first = minkowski_obs
    assert len(first) == len(REGION.positions)
    for smp in first.samples:
        p = np.array(REGION.positions[smp.observer])
        r = np.linalg.norm(p)
        assert smp.earliest
        assert abs(smp.point[0] - r) <= r * obs.cell
        assert smp.distance <= REGION.radius
        # first cone crossing of the worldline within the tube is at t = r - radius at the earliest
        assert smp.point[0] >= r - REGION.radius - 1e-12
    for smp in obs.samples:
        assert abs(smp.point[0] - np.linalg.norm(smp.point[1:])) < 1e-9  # points on the cone


def test_observation_set_monotone_in_radius(minkowski_obs):
    obs, _ = minkowski_obs
    wide = ObserverRegion(REGION.positions, REGION.t_min, REGION.t_max, 0.2)
    big = observation_set(minkowski(), np.zeros(4), wide, resolution=(16, 32))
    assert obs.keys() <= big.keys()
    assert len(big) > len(obs)


def test_observation_set_empty_when_region_is_in_the_past():
    past = ObserverRegion(REGION.positions, -3.0, -1.0, 0.1)
    assert len(observation_set(minkowski(), np.zeros(4), past, resolution=(8, 16))) == 0
    late = ObserverRegion(((2.0, 0.0, 0.0),), -1.0, 1.0, 0.1)
    assert len(observation_set(minkowski(), np.zeros(4), late, resolution=(8, 16))) == 0


def test_distinct_sources_give_distinct_sets():
    a = observation_set(minkowski(), np.zeros(4), REGION, resolution=(12, 24))
    b = observation_set(minkowski(), np.array([0.0, 0.2, 0.0, 0.0]), REGION, resolution=(12, 24))
    c = observation_set(minkowski(), np.array([0.3, 0.0, 0.0, 0.0]), REGION, resolution=(12, 24))
    assert hausdorff_distance(a.points(), a.points()) == 0.0
    assert hausdorff_distance(a.points(), b.points()) > 0.05
    assert hausdorff_distance(a.points(), c.points()) > 0.05


def test_observation_on_sphere_background():
    g = round_sphere(1.0)
    region = ObserverRegion(((0.5, 0.0, 0.0),), 0.0, 3.0, 0.2)
    obs = observation_set(g, np.zeros(4), region, resolution=(13, 24))
    first = earliest_observation_set(obs)
    # stereographic radius 0.5 is at angle 2 atan(0.5) on the unit sphere
    want = 2 * math.atan(0.5)
    assert len(first) == 1
    assert abs(first.samples[0].point[0] - want) <= want * obs.cell


def test_observation_csv_is_deterministic(tmp_path, minkowski_obs):
    obs, first = minkowski_obs
    write_observation_csv(tmp_path / "a.csv", obs, first)
    write_observation_csv(tmp_path / "b.csv", obs, first)
    text = (tmp_path / "a.csv").read_text()
    assert text == (tmp_path / "b.csv").read_text()
    rows = text.splitlines()
    assert rows[0].startswith("ray,")
    assert sum(r.endswith(",1") for r in rows[1:]) == len(first)
