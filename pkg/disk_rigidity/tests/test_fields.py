import numpy as np
import pytest

from disk_rigidity.errors import PointOutsideChart
from disk_rigidity.geometry.families import (anisotropic_bump, build_family, bump_one_form, conformal_bump, twist_map,
                                             twist_pullback)
from disk_rigidity.geometry.fields import (Bump, ChartPoint, IdealPoint, SymTensorField, as_points, central_difference,
                                           conformal_factor, wrap_angle)
from disk_rigidity.geometry.operators import sym_derivative


def test_points_outside_chart_rejected():
    with pytest.raises(PointOutsideChart):
        as_points([1.0, 0.0])
    with pytest.raises(PointOutsideChart):
        ChartPoint(0.8, 0.7)
    assert np.array_equal(np.asarray(ChartPoint(0.1, -0.2)), [0.1, -0.2])


def test_ideal_point_angle_normalized():
    assert IdealPoint(-np.pi / 2).theta == pytest.approx(1.5 * np.pi)
    assert IdealPoint(5 * np.pi).theta == pytest.approx(np.pi)
    assert wrap_angle(1.5 * np.pi) == pytest.approx(-0.5 * np.pi)


def test_hyperbolic_metric_at_origin(g0):
    assert np.allclose(g0.matrix([0.0, 0.0]), 4.0 * np.eye(2))
    x = np.array([0.3, -0.4])
    assert np.allclose(g0.matrix(x), 4.0 / (1.0 - 0.25) ** 2 * np.eye(2))
    assert g0.is_hyperbolic and g0.is_compact_perturbation


def test_bump_vanishes_outside_support():
    bump = Bump(0.4, (0.1, 0.0))
    x = np.array([[0.55, 0.0], [0.1, 0.41], [-0.31, 0.0]])
    assert np.all(bump.value(x) == 0.0)
    assert np.all(bump.gradient(x) == 0.0)
    assert bump.value([0.1, 0.0]) == pytest.approx(1.0)


def test_bump_partials_match_differences():
    bump = Bump(0.5, (0.05, -0.1))
    x = np.array([[0.1, 0.1], [-0.2, 0.05], [0.3, -0.25]])
    assert np.allclose(bump.gradient(x), central_difference(bump.value, x), atol=1e-8)
    assert np.allclose(bump.hessian(x), central_difference(bump.gradient, x), atol=1e-6)


def test_conformal_bump_partials_match_differences():
    h = conformal_bump(0.05, 0.5)
    x = np.array([[0.1, 0.2], [-0.3, 0.1]])
    assert np.allclose(h.gradient(x), central_difference(h, x), atol=1e-7)
    assert np.allclose(h.hessian(x), central_difference(h.gradient, x), atol=1e-5)


def test_conformal_factor_partials():
    x = np.array([[0.2, -0.5], [0.6, 0.1]])
    c, dc, ddc = conformal_factor(x)
    assert np.allclose(dc, central_difference(lambda y: conformal_factor(y)[0], x), rtol=1e-7)
    assert np.allclose(ddc, central_difference(lambda y: conformal_factor(y)[1], x), rtol=1e-6)


def test_field_arithmetic():
    h = anisotropic_bump(0.1, 0.5)
    x = np.array([[0.1, 0.2], [0.0, -0.3]])
    assert np.allclose((h + h)(x), 2.0 * h(x))
    assert np.allclose((h - h)(x), 0.0)
    assert np.allclose((-h)(x), -h(x))
    assert np.allclose((3.0 * h).gradient(x), 3.0 * h.gradient(x))
    assert np.allclose(SymTensorField.zero(0.5)(x), 0.0)


def test_fields_masked_outside_support():
    h = conformal_bump(0.05, 0.5)
    assert np.all(h([[0.6, 0.0], [0.0, -0.51]]) == 0.0)


def test_twist_pullback_is_pullback_of_g0(g0, twisted):
    phi = twist_map(0.6, 0.5)
    x = np.array([[0.1, 0.2], [-0.25, 0.05], [0.3, -0.2]])
    step = 1e-6
    columns = [(phi(x + step * e) - phi(x - step * e)) / (2.0 * step) for e in np.eye(2)]
    jacobian = np.stack(columns, axis=-1)
    pulled = np.einsum("nik,nij,njl->nkl", jacobian, g0.matrix(phi(x)), jacobian)
    assert np.allclose(twisted.matrix(x), pulled, rtol=1e-7)
    assert np.allclose(phi(np.array([[0.7, 0.0]])), [[0.7, 0.0]])


def _error_reduction(analytic, fun, x, step=2e-3):
    coarse = np.max(np.abs(analytic - central_difference(fun, x, step)))
    fine = np.max(np.abs(analytic - central_difference(fun, x, step / 2.0)))
    return coarse / fine


@pytest.mark.parametrize("field", [
    conformal_bump(0.05, 0.5),
    anisotropic_bump(0.05, 0.5),
    twist_pullback(0.6, 0.5),
    build_family("twist").velocity(0.5),
    build_family("twist").metric(0.75).perturbation,
], ids=["conformal", "anisotropic", "twist", "twist_velocity", "twist_at_t"])
def test_analytic_partials_converge_at_second_order(field):
    x = np.array([[0.1, 0.2], [-0.25, 0.05], [0.15, -0.3], [0.0, 0.0]])
    assert field.has_analytic_hessian
    assert _error_reduction(field.gradient(x), field, x) >= 3.5
    assert _error_reduction(field.hessian(x), field.gradient, x) >= 3.5


def test_potential_tensor_gradient_converges_at_second_order(g0):
    dv = sym_derivative(g0, bump_one_form((0.6, -0.4), (0.05, 0.025), 0.375))
    x = np.array([[0.1, 0.2], [-0.15, 0.05], [0.2, -0.1]])
    assert _error_reduction(dv.gradient(x), dv, x) >= 3.5
