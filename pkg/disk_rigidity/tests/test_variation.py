import numpy as np
import pytest

from disk_rigidity.analysis import variation
from disk_rigidity.analysis.ray_transform import CdrmDisk
from disk_rigidity.analysis.utils import sample_chords
from disk_rigidity.errors import HypothesisViolation, PipelineStageFailure
from disk_rigidity.geometry.families import anisotropic_bump, build_family, conformal_bump, hyperbolic_metric
from disk_rigidity.geometry.fields import SymTensorField

P, Q = (-0.3, 0.1), (0.4, 0.05)
R_M = 0.7


@pytest.fixture
def disk():
    return CdrmDisk(hyperbolic_metric(), R_M)


def test_difference_order_of_cubic():
    assert variation.central_difference(lambda t: t ** 2, 1.5, 0.1) == pytest.approx(3.0)
    assert variation.difference_order(lambda t: t ** 3, 1.0) == pytest.approx(2.0, abs=1e-6)
    assert variation.difference_order(lambda t: 2.0, 1.0) == np.inf


def test_constant_family_has_no_distance_variation():
    report = variation.distance_variation_check(build_family("constant"), P, Q, 0.5)
    assert report.lhs[0] == 0.0 and report.rhs[0] == 0.0
    assert report.rel_error[0] == 0.0


def test_distance_variation_matches_first_variation():
    report = variation.distance_variation_check(build_family("conformal"), P, Q, 0.5)
    assert report.lhs[0] > 0.0
    assert report.rel_error[0] <= 1e-4
    assert report.rows()[0][0] == 0.5


def test_distance_variation_needs_distinct_points():
    with pytest.raises(ValueError):
        variation.distance_variation_check(build_family("conformal"), P, P, 0.5)


def test_distance_variation_converges_at_second_order():
    family = build_family("conformal", amplitude=0.2)
    report = variation.distance_variation_check(family, P, Q, 0.5, order_step=variation.ORDER_STEP)
    assert report.order >= 1.8


def test_schwarzian_variation_matches_ray_transform():
    family = build_family("conformal")
    report = variation.schwarzian_variation_check(family, 0.3, 0.3 + np.pi, [0.5], order_step=None,
                                                  check_curvature=False)
    assert np.isnan(report.order)
    assert report.rhs[0] > 0.0
    assert report.rel_error[0] <= 1e-3


def test_schwarzian_variation_of_pullbacks_vanishes():
    family = build_family("twist")
    report = variation.schwarzian_variation_check(family, 0.3, 2.9, [0.5], order_step=None)
    assert np.all(report.abs_error <= 1e-3)
    assert abs(report.rhs[0]) <= 1e-6


def test_volume_check_of_zero_field(disk):
    report = variation.volume_inequality_check(disk, SymTensorField.zero(0.5))
    assert report.hypothesis_met and report.passed
    assert report.status == "holds"


@pytest.mark.parametrize("f", [conformal_bump(-0.005, 0.5), anisotropic_bump(0.005, 0.5)])
def test_volume_inequality_for_nonincreasing_fields(disk, f):
    report = variation.volume_inequality_check(disk, f)
    assert report.volume_g < report.volume_g0
    assert report.status == "holds"
    assert report.pairing <= 2.0 / 3.0 * report.norm_squared


def test_volume_hypothesis_not_met(disk):
    report = variation.volume_inequality_check(disk, conformal_bump(0.005, 0.5))
    assert report.status == "hypothesis not met"
    assert report.passed and np.isnan(report.pairing)


def test_volume_check_caps_the_field(disk):
    with pytest.raises(ValueError):
        variation.volume_inequality_check(disk, conformal_bump(0.05, 0.5))


def test_twist_preserves_volume(disk):
    change, error = variation.volume_invariance_check(build_family("twist"), disk, 1.0)
    assert change <= 1e-9
    assert error < 1e-6


def test_pullback_residual_of_identity(g0):
    points = np.array([[0.1, 0.2], [-0.4, 0.3]])
    stencil = variation._stencil(points, variation.JACOBIAN_STEP)
    assert variation.pullback_residual(g0, points, stencil) < 1e-8


def test_pipeline_for_constant_family(disk):
    report = variation.triviality_reconstruction(build_family("constant"), disk, [0.0, 0.5, 1.0], [(0.0, 2.0)],
                                                 n_radial=8, n_angular=16, point_resolution=3, floor=1e-3)
    assert report.passed
    assert [s.stage for s in report.stages] == ["ray_transform", "decomposition", "flow", "pullback"]
    assert np.array_equal(report.maps[1.0], report.points)


def test_pipeline_reconstructs_twist(disk, rng):
    family = build_family("twist")
    rays = sample_chords(rng, 2, 0.5)
    report = variation.triviality_reconstruction(family, disk, [0.0, 0.5, 1.0], rays, point_resolution=3)
    assert report.passed
    assert report.inverse_error[1.0] < 1e-2
    assert len(report.rows()) == 4


def test_pipeline_stops_for_conformal_family(disk):
    with pytest.raises(PipelineStageFailure) as info:
        variation.triviality_reconstruction(build_family("conformal"), disk, [0.0, 1.0], [(0.3, 0.3 + np.pi)],
                                            floor=1.0)
    assert info.value.stage == "ray_transform"
    assert info.value.residual > variation.RAY_TOL


def test_schwarzian_variation_checks_every_metric_on_the_grid():
    with pytest.raises(HypothesisViolation):
        variation.schwarzian_variation_check(build_family("conformal"), 0.3, 0.3 + np.pi, [0.0, 0.5], order_step=None)
