import numpy as np
import pytest

from disk_rigidity.geometry import hyperbolic as hyp


def test_mobius_moves_origin():
    a = 0.3 - 0.2j
    assert hyp.mobius(a, 0.0) == pytest.approx(a)
    assert hyp.mobius(-a, hyp.mobius(a, 0.5j)) == pytest.approx(0.5j)


def test_distance_from_origin():
    for r in (0.1, 0.5, 0.9, 0.999):
        assert hyp.hyp_distance([0.0, 0.0], [r, 0.0]) == pytest.approx(2.0 * np.arctanh(r), rel=1e-12)


def test_exp_map_has_unit_speed_and_length():
    p, angle = 0.2 + 0.4j, 1.1
    for s in (0.5, 2.0, 7.0):
        q = hyp.exp_map(p, angle, s)
        assert hyp.hyp_distance(hyp.to_point(p), hyp.to_point(q)) == pytest.approx(s, rel=1e-9)
        speed = abs(hyp.geodesic_velocity(p, angle, s)) * hyp.conformal_speed(q)
        assert speed == pytest.approx(1.0, rel=1e-12)
    assert hyp.direction_to(p, hyp.exp_map(p, angle, 1.0)) == pytest.approx(angle)


def test_ideal_endpoints():
    assert hyp.ideal_endpoint_of(0.8 + 0.0j, 0.0) == pytest.approx(0.0)
    assert hyp.ideal_endpoint_of(0.0j, 2.0) == pytest.approx(2.0)
    p = 0.3 - 0.5j
    assert hyp.ideal_endpoint_of(p, hyp.direction_to_ideal(p, 4.0)) == pytest.approx(4.0)


def test_busemann_at_origin_and_along_rays():
    assert hyp.busemann0(1.3, 0.0) == pytest.approx(0.0)
    for r in (0.2, 0.7):
        assert hyp.busemann0(0.0, r) == pytest.approx(-2.0 * np.arctanh(r))
        assert hyp.busemann0(np.pi, r) == pytest.approx(2.0 * np.arctanh(r))


def test_gromov_product_at_origin():
    assert hyp.gromov_product_at_origin(0.0, np.pi) == pytest.approx(0.0, abs=1e-15)
    assert hyp.gromov_product_at_origin(0.3, 0.3 + np.pi / 2) == pytest.approx(-np.log(np.sin(np.pi / 4)))


def test_ideal_geodesic():
    m, angle = hyp.ideal_geodesic(np.pi, 0.0)
    assert abs(m) < 1e-15
    assert np.cos(angle) == pytest.approx(-1.0)
    m, angle = hyp.ideal_geodesic(1.0, 2.5)
    assert hyp.ideal_endpoint_of(m, angle) == pytest.approx(1.0)
    assert hyp.ideal_endpoint_of(m, angle + np.pi) == pytest.approx(2.5)


def test_circle_crossings_and_min_radius():
    s_in, s_out = hyp.circle_crossings(0.0j, 0.3, 0.5)
    assert s_out == pytest.approx(2.0 * np.arctanh(0.5))
    assert s_in == pytest.approx(-s_out)
    m, angle = hyp.ideal_geodesic(0.4, 2.2)
    assert hyp.circle_crossings(m, angle, 0.9 * abs(m)) is None
    assert hyp.min_radius(m, angle, -np.inf) == pytest.approx(abs(m))
    s_in, s_out = hyp.circle_crossings(m, angle, 0.8)
    assert abs(hyp.exp_map(m, angle, s_out)) == pytest.approx(0.8)
    assert abs(hyp.exp_map(m, angle, s_in)) == pytest.approx(0.8)
