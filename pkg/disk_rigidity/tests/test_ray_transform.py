import numpy as np
import pytest
from scipy.integrate import quad

from disk_rigidity.analysis import ray_transform as rt
from disk_rigidity.analysis.decomposition import reference_potentials
from disk_rigidity.analysis.utils import sample_chords
from disk_rigidity.errors import NotEntrySphere
from disk_rigidity.geometry.families import bump_one_form, conformal_bump, random_bump_one_form
from disk_rigidity.geometry.fields import Bump
from disk_rigidity.geometry.operators import sym_derivative

SUPPORT = 0.5

R_M = 0.7


def test_diameter_ray_transform_of_conformal_bump(g0):
    eps = 0.05
    h = conformal_bump(eps, SUPPORT)
    bump = Bump(SUPPORT)

    def integrand(r):
        return eps * bump.value([r, 0.0]) * 2.0 / (1.0 - r * r)

    expected = 2.0 * quad(integrand, 0.0, SUPPORT, epsabs=1e-13)[0]
    value = rt.ray_transform(g0, h, 0.0, np.pi)
    assert value.value == pytest.approx(expected, rel=1e-8)


def test_ray_transform_outside_support_vanishes(g0):
    h = conformal_bump(0.05, SUPPORT)
    assert rt.ray_transform(g0, h, 0.1, 0.5).value == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("metric", ["g0", "conformal"])
def test_potential_tensors_are_in_the_kernel(metric, rng, request):
    g = request.getfixturevalue(metric)
    v = random_bump_one_form(rng, SUPPORT)
    check = rt.potential_kernel_check(g, v, sample_chords(rng, 4, SUPPORT))
    assert check.max_abs <= 1e-6
    assert check.passed


def test_cdrm_disk_radius_validated(conformal):
    with pytest.raises(ValueError):
        rt.CdrmDisk(conformal, 0.4)
    with pytest.raises(ValueError):
        rt.CdrmDisk(conformal, 1.0)


def test_hyperbolic_circle_curvature(g0):
    M = rt.CdrmDisk(g0, R_M)
    curvature = M.geodesic_curvature(np.linspace(0.0, 2.0 * np.pi, 5))
    assert np.allclose(curvature, (1.0 + R_M ** 2) / (2.0 * R_M))
    assert M.check_convexity() == pytest.approx((1.0 + R_M ** 2) / (2.0 * R_M))


def test_boundary_frame_is_orthonormal(conformal):
    M = rt.CdrmDisk(conformal, R_M)
    x = M.boundary_point(1.1)
    nu, tau = M.normal(1.1), M.tangent(1.1)
    g = conformal.matrix(x)
    assert nu @ g @ nu == pytest.approx(1.0)
    assert tau @ g @ tau == pytest.approx(1.0)
    assert nu @ g @ tau == pytest.approx(0.0, abs=1e-12)


def test_entry_validation(g0):
    M = rt.CdrmDisk(g0, R_M)
    x, direction = M.state(0.3, 0.0)
    with pytest.raises(NotEntrySphere):
        M.inward_chord(x, -direction)
    with pytest.raises(ValueError):
        M.inward_chord(0.9 * x, direction)
    tangential = M.state(0.3, np.pi / 2.0)
    assert rt.cdrm_ray_transform(M, conformal_bump(0.05, SUPPORT), *tangential).value == 0.0
    assert M.exit_time(*tangential) == 0.0


def test_exit_time_of_diameter(g0):
    M = rt.CdrmDisk(g0, R_M)
    assert M.exit_time(*M.state(0.0, 0.0)) == pytest.approx(-4.0 * np.arctanh(R_M), abs=1e-8)


def test_cdrm_ray_transform_matches_complete_geodesic(conformal):
    M = rt.CdrmDisk(conformal, R_M)
    h = conformal_bump(0.05, SUPPORT)
    for angle, beta in [(0.4, 0.1), (2.0, -0.5)]:
        x, direction = M.state(angle, beta)
        forward, backward = M.extension(x, direction)
        complete = rt.ray_transform(conformal, h, forward, backward).value
        assert rt.cdrm_ray_transform(M, h, x, direction).value == pytest.approx(complete, abs=1e-6)


def test_sinogram_of_radial_tensor(g0):
    M = rt.CdrmDisk(g0, R_M)
    sinogram = rt.cdrm_sinogram(M, conformal_bump(0.05, SUPPORT), n_boundary=4, n_direction=4)
    assert sinogram.values.shape == (4, 4)
    assert len(sinogram.rows()) == 16
    # rotation invariance
    assert np.allclose(sinogram.values, sinogram.values[:1], atol=1e-8)
    assert np.allclose(sinogram.values, sinogram.values[:, ::-1], atol=1e-8)


def test_kernel_inverse_check_of_potential_tensor(g0):
    M = rt.CdrmDisk(g0, R_M)
    f = sym_derivative(g0, reference_potentials(R_M)[0])
    entries = [(0.0, 0.0), (1.0, 0.4), (3.0, -0.8)]
    outcome = rt.kernel_inverse_probe(M, f, entries, n_radial=16, n_angular=32)
    assert outcome.ray_vanishes and outcome.solenoidal_vanishes
    assert outcome.verdict == "potential" and outcome.consistent


def test_kernel_inverse_check_of_bump(g0):
    M = rt.CdrmDisk(g0, R_M)
    outcome = rt.kernel_inverse_probe(M, conformal_bump(0.05, SUPPORT), [(0.0, 0.0)], n_radial=16, n_angular=32)
    assert not outcome.ray_vanishes
    assert outcome.consistent


def test_bump_one_form_is_killed_on_chords_missing_it(g0):
    v = bump_one_form((1.0, 0.0), (0.0, 0.0), 0.2)
    check = rt.potential_kernel_check(g0, v, [(0.0, 1.0)])
    assert check.values[0] == 0.0
