import numpy as np
import pytest

from disk_rigidity.errors import HypothesisViolation
from disk_rigidity.geometry.families import anisotropic_bump, build_family, bump_one_form, conformal_bump
from disk_rigidity.geometry.fields import MetricField
from disk_rigidity.geometry.operators import (christoffel, deformation_norms, divergence, gaussian_curvature, l2_inner,
                                              polar_quadrature, polar_sample_grid, sym_derivative, trace_integral,
                                              verify_curvature_bound, volume)


def _conformal_curvature_at_origin(eps, radius):
    # (1 + eps psi) g0 with psi = 1 - |x|^2 / radius^2 + ... at the origin
    return (-1.0 + eps / (2.0 * radius ** 2 * (1.0 + eps))) / (1.0 + eps)


def test_hyperbolic_curvature_is_minus_one(g0):
    points = polar_sample_grid(0.9, 8)
    assert np.allclose(gaussian_curvature(g0, points), -1.0, atol=1e-9)


def test_hyperbolic_curvature_at_random_points(g0, rng):
    radius = 0.95 * np.sqrt(rng.uniform(size=1000))
    angle = rng.uniform(0.0, 2.0 * np.pi, 1000)
    points = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)
    assert np.allclose(gaussian_curvature(g0, points), -1.0, atol=1e-8)


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0])
def test_twist_family_meets_curvature_bound(t):
    report = verify_curvature_bound(build_family("twist").metric(t))
    assert report.passed
    assert report.max_curvature == pytest.approx(-1.0, abs=1e-8)


def test_christoffel_of_g0(g0):
    x = np.array([0.3, 0.2])
    gamma = christoffel(g0, x)
    # log c has gradient 4x / (1 - |x|^2)
    a = 4.0 * x / (1.0 - x @ x) / 2.0
    expected = np.zeros((2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                expected[k, i, j] = (i == k) * a[j] + (j == k) * a[i] - (i == j) * a[k]
    assert np.allclose(gamma, expected)


def test_conformal_bump_curvature_at_origin(conformal):
    assert gaussian_curvature(conformal, [0.0, 0.0]) == pytest.approx(_conformal_curvature_at_origin(0.05, 0.5),
                                                                      abs=1e-6)


def test_curvature_bound_violation_raises(conformal):
    with pytest.raises(HypothesisViolation) as info:
        verify_curvature_bound(conformal)
    assert info.value.value > -1.0
    report = verify_curvature_bound(conformal, margin=0.5)
    assert report.passed and report.max_curvature < -0.5
    with pytest.raises(HypothesisViolation):
        verify_curvature_bound(MetricField(conformal_bump(0.5, 0.5)), margin=0.5)


def test_sym_derivative_and_divergence_are_adjoint(conformal):
    v = bump_one_form((0.6, -0.4), (0.05, 0.1), 0.3)
    f = anisotropic_bump(0.2, 0.45)
    dv = sym_derivative(conformal, v)
    delta_f = divergence(conformal, f)
    left = l2_inner(conformal, dv, f, 0.7).value

    def pairing(x):
        g = conformal.matrix(x)
        return np.einsum("...ij,...i,...j->...", np.linalg.inv(g), v(x), delta_f(x)) * np.sqrt(np.linalg.det(g))

    right = polar_quadrature(pairing, 0.7, split=0.45).value
    assert left == pytest.approx(right, rel=1e-5)


def test_sym_derivative_gradient_matches_differences(g0):
    v = bump_one_form((0.6, -0.4), (0.0, 0.0), 0.4)
    dv = sym_derivative(g0, v)
    x = np.array([[0.1, -0.05], [0.2, 0.15]])
    step = 1e-5
    columns = [(dv(x + step * e) - dv(x - step * e)) / (2.0 * step) for e in np.eye(2)]
    assert np.allclose(dv.gradient(x), np.stack(columns, axis=1), atol=1e-6)


def test_volume_of_hyperbolic_disk(g0):
    r = 0.5
    result = volume(g0, r)
    assert result.value == pytest.approx(4.0 * np.pi * r ** 2 / (1.0 - r ** 2), rel=1e-10)
    assert result.error < 1e-8


def test_twist_preserves_volume(g0, twisted):
    assert volume(twisted, 0.7).value == pytest.approx(volume(g0, 0.7).value, rel=1e-9)


def test_trace_integral_of_traceless_field_vanishes(g0):
    assert abs(trace_integral(g0, anisotropic_bump(0.1, 0.5), 0.7).value) < 1e-12


def test_deformation_norms(g0, conformal):
    assert deformation_norms(g0) == {"c0": 0.0, "c1": 0.0}
    norms = deformation_norms(conformal)
    assert norms["c0"] == pytest.approx(0.05 * np.sqrt(2.0), rel=1e-9)
    assert norms["c1"] > 0.0
