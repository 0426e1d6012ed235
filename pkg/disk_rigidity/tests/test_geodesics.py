import numpy as np
import pytest

from disk_rigidity.errors import ChartEscape, DegenerateBoundaryPair, NotEscaped
from disk_rigidity.geometry import hyperbolic as hyp
from disk_rigidity.geometry.fields import SymTensorField, conformal_factor
from disk_rigidity.geometry.geodesics import (chord, distance, escape_radius, geodesic_between_ideals, hyp_distance,
                                              ideal_endpoint, integrate_ivp, ray_from)


def test_escape_radius(flat_perturbation):
    assert escape_radius(flat_perturbation) == pytest.approx(0.55)


def test_integrate_ivp_rejects_non_unit_velocity(g0):
    with pytest.raises(ValueError):
        integrate_ivp(g0, [0.0, 0.0], [1.0, 0.0], 1.0)


def test_integrate_ivp_radial_geodesic(flat_perturbation):
    path = integrate_ivp(flat_perturbation, [0.0, 0.0], [0.5, 0.0], 3.0)
    x, _ = path.end
    assert np.allclose(x, [np.tanh(1.5), 0.0], atol=1e-9)
    assert path.forward_ideal.theta == pytest.approx(0.0, abs=1e-9)
    assert np.max(path.speed_defect()) < 1e-8


def test_integrate_ivp_without_closed_form_escapes_chart(g0):
    with pytest.raises(ChartEscape):
        integrate_ivp(g0, [0.0, 0.0], [0.5, 0.0], 40.0, closed_form_exterior=False)


def test_ideal_endpoint_of_exit_state(flat_perturbation):
    assert ideal_endpoint(flat_perturbation, ([0.8, 0.0], [0.1, 0.0])).theta == pytest.approx(0.0)
    with pytest.raises(NotEscaped):
        ideal_endpoint(flat_perturbation, ([0.3, 0.0], [0.1, 0.0]))
    with pytest.raises(NotEscaped):
        ideal_endpoint(flat_perturbation, ([0.8, 0.0], [-0.1, 0.0]))


def test_ideal_endpoint_matches_long_integration(g0, rng):
    for _ in range(3):
        angle = rng.uniform(0.0, 2.0 * np.pi)
        point = 0.3 * np.array([np.cos(angle), np.sin(angle)])
        heading = angle + rng.uniform(-0.5, 0.5)
        velocity = np.array([np.cos(heading), np.sin(heading)]) * (1.0 - 0.09) / 2.0
        theta = ideal_endpoint(g0, (point, velocity)).theta
        # stays 1e-6 away from the unit circle, where the remaining angular drift is below 1e-5
        far = integrate_ivp(g0, point, velocity, 13.0, closed_form_exterior=False).end[0]
        assert abs(np.angle(np.exp(1j * (np.arctan2(far[1], far[0]) - theta)))) < 1e-5


@pytest.mark.parametrize("p, q", [((0.3, 0.1), (-0.2, 0.25)), ((0.8, 0.0), (-0.3, 0.2)), ((0.9, 0.3), (-0.7, -0.6))])
def test_numeric_distance_matches_closed_form(flat_perturbation, p, q):
    d, path = distance(flat_perturbation, p, q)
    assert d == pytest.approx(hyp_distance(p, q), abs=1e-6)
    assert np.allclose(path.start[0], p, atol=1e-9)
    assert np.allclose(path.end[0], q, atol=1e-6)


def test_distance_is_symmetric(conformal):
    p, q = np.array([0.7, 0.2]), np.array([-0.6, -0.1])
    d_pq, path = distance(conformal, p, q)
    d_qp, _ = distance(conformal, q, p)
    assert d_pq == pytest.approx(d_qp, abs=1e-8)
    assert d_pq > hyp_distance(p, q)
    assert np.max(path.speed_defect()) < 1e-7


def test_distance_needs_distinct_points(g0):
    with pytest.raises(ValueError):
        distance(g0, [0.1, 0.1], [0.1, 0.1])


def test_ray_reaches_its_ideal_point(conformal):
    for xi in (0.0, 2.0, 4.5):
        ray = ray_from(conformal, [0.1, -0.2], xi)
        assert abs(np.angle(np.exp(1j * (ray.forward_ideal.theta - xi)))) < 1e-8
        assert np.hypot(*ray.forward_exit.point) >= 0.55 - 1e-9


def test_bi_infinite_geodesic_endpoints(conformal):
    path = geodesic_between_ideals(conformal, 0.4, 3.0)
    assert path.forward_ideal.theta == pytest.approx(0.4, abs=1e-6)
    assert path.backward_ideal.theta == pytest.approx(3.0, abs=1e-6)
    assert path.inside_length > 0.0
    assert np.max(path.speed_defect()) < 1e-7


def test_bi_infinite_geodesic_missing_the_support_is_closed_form(conformal):
    path = geodesic_between_ideals(conformal, 0.2, 0.9)
    m, _ = hyp.ideal_geodesic(0.2, 0.9)
    assert abs(m) > 0.5
    assert path.inside_length == 0.0
    with pytest.raises(DegenerateBoundaryPair):
        geodesic_between_ideals(conformal, 1.0, 1.0 + 2.0 * np.pi)


def test_chord_leaves_disk(conformal):
    path = chord(conformal, [0.0, 0.0], [0.5 / np.sqrt(1.05), 0.0], 0.7)
    assert np.hypot(*path.forward_exit.point) == pytest.approx(0.7, abs=1e-9)
    assert path.length > 2.0 * np.arctanh(0.7)


def test_path_integral_of_constant_tensor_is_length(flat_perturbation):
    g0_tensor = SymTensorField(lambda x: conformal_factor(x)[0][..., None, None] * np.eye(2), 0.5)
    _, path = distance(flat_perturbation, [0.45, 0.0], [-0.45, 0.0])
    assert path.integrate_tensor(g0_tensor).value == pytest.approx(2.0 * 2.0 * np.arctanh(0.45), rel=1e-9)


def test_path_export(conformal, tmp_path):
    path = geodesic_between_ideals(conformal, 0.3, 2.5)
    target = tmp_path / "path.csv"
    path.to_csv(str(target))
    table = np.loadtxt(target, delimiter=",", skiprows=1)
    assert table.shape[1] == 6
    assert np.all(np.diff(table[:, 0]) > 0.0)
    assert np.max(table[:, 5]) < 1e-7


def test_numeric_distance_matches_closed_form_on_random_pairs(flat_perturbation, rng):
    for k in range(100):
        # hyperbolic radii up to 14 keep every distance below 30
        rho = rng.uniform(0.0, 14.0, 2)
        a = rng.uniform(0.0, 2.0 * np.pi)
        b = a + np.pi + rng.uniform(-0.3, 0.3) if k % 2 else rng.uniform(0.0, 2.0 * np.pi)
        p = np.tanh(rho[0] / 2.0) * np.array([np.cos(a), np.sin(a)])
        q = np.tanh(rho[1] / 2.0) * np.array([np.cos(b), np.sin(b)])
        if np.allclose(p, q):
            continue
        expected = hyp_distance(p, q)
        assert expected <= 30.0
        assert distance(flat_perturbation, p, q)[0] == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("p, q", [((0.3, 0.1), (-0.2, 0.25)), ((0.8, 0.0), (-0.3, 0.2)), ((0.9, 0.3), (-0.7, -0.6))])
def test_initial_tangent_reproduces_endpoint(conformal, p, q):
    d, path = distance(conformal, p, q)
    x0, u0 = path.start
    end = integrate_ivp(conformal, x0, u0, d).end[0]
    assert np.allclose(end, q, atol=1e-8)


def test_radius_is_monotone_after_exit(conformal):
    for path in (geodesic_between_ideals(conformal, 0.4, 3.0), ray_from(conformal, [0.1, -0.2], 2.0)):
        s, x, _ = path.samples()
        r = np.hypot(x[:, 0], x[:, 1])
        forward = s >= path.forward_exit.s
        assert np.count_nonzero(forward) > 2
        assert np.all(np.diff(r[forward]) >= -1e-12)
        if path.backward_exit is not None:
            backward = s <= path.backward_exit.s
            assert np.all(np.diff(r[backward]) <= 1e-12)
