"""
Variational identities along one-parameter families g_t of compact perturbations of g0, volume checks, and the
reconstruction of diffeomorphisms f_t with f_t* g_t = g0 for families whose boundary maps are Moebius.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from disk_rigidity.analysis import decomposition
from disk_rigidity.analysis.ray_transform import CdrmDisk, ray_transform
from disk_rigidity.analysis.schwarzian import schwarzian_via_limit
from disk_rigidity.errors import PipelineStageFailure
from disk_rigidity.geometry.families import hyperbolic_metric
from disk_rigidity.geometry.fields import MetricField, conformal_factor
from disk_rigidity.geometry.geodesics import distance, hyp_distance
from disk_rigidity.geometry.operators import (deformation_norms, l2_inner, polar_sample_grid, trace_integral,
                                              verify_curvature_bound, volume)

logger = logging.getLogger(__name__)

DT = 1e-3
ORDER_STEP = 0.4
SUP_NORM_CAP = 1e-2
VOLUME_TOL = 1e-10
RAY_TOL = 1e-5
PIPELINE_FACTOR = 10.0
JACOBIAN_STEP = 1e-4
RK4_SUBSTEPS = 4


@dataclass
class VariationReport:
    label: str
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    order: float = np.nan
    samples: list = field(default_factory=list)

    @property
    def abs_error(self):
        return np.abs(self.lhs - self.rhs)

    @property
    def rel_error(self):
        scale = np.maximum(np.abs(self.lhs), np.abs(self.rhs))
        return np.divide(self.abs_error, scale, out=np.zeros_like(scale), where=scale > 0.0)

    def rows(self):
        return list(zip(self.t, self.lhs, self.rhs, self.abs_error, self.rel_error))

    header = ("t", "lhs", "rhs", "abs_error", "rel_error")


def central_difference(fun, t, dt):
    return (fun(t + dt) - fun(t - dt)) / (2.0 * dt)


def difference_order(fun, t, step=ORDER_STEP):
    """
    Observed order of the central difference of fun at t from three successive halvings of the step. Differences
    of the estimates are used, so no exact derivative is needed.
    """
    estimates = [central_difference(fun, t, step / 2 ** k) for k in range(3)]
    first, second = abs(estimates[0] - estimates[1]), abs(estimates[1] - estimates[2])
    if second == 0.0 or first == 0.0:
        return np.inf
    return float(np.log2(first / second))


def _renormalized_square(family, p, q, d0):
    def fun(t):
        return (distance(family.metric(t), p, q)[0] ** 2 - d0 ** 2) / d0

    return fun


def distance_variation_check(family, p, q, t, dt=DT, order_step=None):
    """
    d/dt (d_t^2 - d_0^2) / d_0 by central differences against (d_t / d_0) times the integral of the velocity
    g_t' over the unit-speed g_t-geodesic from p to q.
    """
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if np.array_equal(p, q):
        raise ValueError("distance variation needs distinct points")
    d0 = hyp_distance(p, q)
    fun = _renormalized_square(family, p, q, d0)
    lhs = central_difference(fun, t, dt)
    d_t, path = distance(family.metric(t), p, q)
    rhs = d_t / d0 * path.integrate_tensor(family.velocity(t)).value
    order = difference_order(fun, t, order_step) if order_step else np.nan
    logger.debug("distance variation of %s at t = %g: %.12g vs %.12g", family.name, t, lhs, rhs)
    return VariationReport(f"distance({family.name})", np.array([t]), np.array([lhs]), np.array([rhs]), order,
                           [(tuple(p), tuple(q))])


def schwarzian_variation_check(family, xi, eta, t_grid, dt=DT, order_step=ORDER_STEP, check_curvature=True):
    """
    d/dt 2 S(g_t)(xi, eta) by central differences of the distance-limit Schwarzian against the ray transform
    of g_t' under g_t between the same boundary angles. Every g_t on the grid must satisfy K <= -1 unless
    check_curvature is off.
    """
    g0 = hyperbolic_metric()
    t_grid = np.asarray(t_grid, dtype=float)
    if check_curvature:
        for t in t_grid:
            verify_curvature_bound(family.metric(t))

    def schwarzian(t):
        return 2.0 * schwarzian_via_limit(g0, family.metric(t), xi, eta, check_curvature=False).value

    lhs = np.array([central_difference(schwarzian, t, dt) for t in t_grid])
    rhs = np.array([ray_transform(family.metric(t), family.velocity(t), xi, eta).value for t in t_grid])
    order = difference_order(schwarzian, float(t_grid[len(t_grid) // 2]), order_step) if order_step else np.nan
    report = VariationReport(f"schwarzian({family.name})", t_grid, lhs, rhs, order, [(xi, eta)])
    logger.info("schwarzian variation of %s over (%.6g, %.6g): max rel error %.3e, order %.3g", family.name, xi, eta,
                float(np.max(report.rel_error)), order)
    return report


@dataclass
class VolumeReport:
    volume_g: float
    volume_g0: float
    volume_error: float
    pairing: float = np.nan
    norm_squared: float = np.nan
    tolerance: float = VOLUME_TOL

    @property
    def hypothesis_met(self):
        return self.volume_g <= self.volume_g0 + self.volume_error

    @property
    def passed(self):
        return not self.hypothesis_met or self.pairing <= 2.0 / 3.0 * self.norm_squared + self.tolerance

    @property
    def status(self):
        if not self.hypothesis_met:
            return "hypothesis not met"
        return "holds" if self.passed else "violated"


def volume_inequality_check(M, f, sup_norm_cap=SUP_NORM_CAP):
    """
    For a small f with Vol_{g0+f}(M) <= Vol_g0(M), checks (g0, f)_L2 <= (2/3) |f|^2_L2, both sides by quadrature.
    """
    perturbed = MetricField(f)
    norms = deformation_norms(perturbed)
    if norms["c0"] > sup_norm_cap:
        raise ValueError(f"|f|_C0 = {norms['c0']:.3e} exceeds the cap {sup_norm_cap:g}")
    g0 = hyperbolic_metric()
    vol_g, vol_g0 = volume(perturbed, M.radius), volume(g0, M.radius)
    report = VolumeReport(vol_g.value, vol_g0.value, vol_g.error + vol_g0.error)
    if report.hypothesis_met:
        report.pairing = trace_integral(g0, f, M.radius).value
        report.norm_squared = l2_inner(g0, f, f, M.radius).value
    logger.info("volume check of %s: %s (pairing %.6g, norm %.6g)", f.name, report.status, report.pairing,
                report.norm_squared)
    return report


def volume_invariance_check(family, M, t):
    """|Vol_{g_t}(M) - Vol_g0(M)| and its quadrature error estimate."""
    vol_t, vol_0 = volume(family.metric(t), M.radius), volume(hyperbolic_metric(), M.radius)
    return abs(vol_t.value - vol_0.value), vol_t.error + vol_0.error


@dataclass
class StageResult:
    stage: str
    residual: float
    threshold: float

    @property
    def passed(self):
        return self.residual <= self.threshold


@dataclass
class PipelineReport:
    family: str
    t_grid: np.ndarray
    floor: float
    stages: list = field(default_factory=list)
    maps: dict = field(default_factory=dict)
    inverse_error: dict = field(default_factory=dict)
    points: np.ndarray = None

    @property
    def passed(self):
        return all(stage.passed for stage in self.stages)

    def rows(self):
        return [(s.stage, s.residual, s.threshold, "pass" if s.passed else "fail") for s in self.stages]


def _check(report, stage, residual, threshold):
    result = StageResult(stage, float(residual), float(threshold))
    report.stages.append(result)
    logger.info("pipeline stage %s: residual %.3e, threshold %.3e", stage, result.residual, threshold)
    if not result.passed:
        raise PipelineStageFailure(stage, result.residual, threshold)


class _FlowField:
    """Time-dependent vector field -(v_t)^sharp from decompositions of g_t' under g_t, cached per time."""

    def __init__(self, family, radius, n_radial, n_angular):
        self.family = family
        self.radius = radius
        self.n_radial, self.n_angular = n_radial, n_angular
        self._cache = {}
        self.worst_relative = 0.0

    def decomposition(self, t):
        key = round(float(t), 12)
        if key not in self._cache:
            M = CdrmDisk(self.family.metric(t), self.radius)
            result = decomposition.solenoidal_decompose(M, self.family.velocity(t), self.n_radial, self.n_angular)
            self.worst_relative = max(self.worst_relative, result.s_relative)
            self._cache[key] = (M.metric, result.v_field())
        return self._cache[key]

    def __call__(self, t, x):
        metric, v = self.decomposition(t)
        out = np.zeros_like(x)
        inside = np.hypot(x[:, 0], x[:, 1]) < self.radius
        if np.any(inside):
            y = x[inside]
            out[inside] = -np.einsum("nij,nj->ni", metric.inverse(y), v(y))
        return out


def _rk4(field, points, t0, t1, steps):
    h = (t1 - t0) / steps
    x, t = points.copy(), t0
    for _ in range(steps):
        k1 = field(t, x)
        k2 = field(t + h / 2.0, x + h / 2.0 * k1)
        k3 = field(t + h / 2.0, x + h / 2.0 * k2)
        k4 = field(t + h, x + h * k3)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return x


def _stencil(points, step):
    shifts = np.array([[0.0, 0.0], [step, 0.0], [-step, 0.0], [0.0, step], [0.0, -step]])
    return (points[:, None, :] + shifts[None]).reshape(-1, 2)


def pullback_residual(metric, points, images, step=JACOBIAN_STEP):
    """
    max over points of |f* g - g0|_g0 where images are f evaluated on the five-point stencils of the points.
    """
    images = images.reshape(-1, 5, 2)
    centres = images[:, 0]
    jacobian = np.stack([(images[:, 1] - images[:, 2]) / (2.0 * step), (images[:, 3] - images[:, 4]) / (2.0 * step)],
                        axis=-1)
    pulled = np.einsum("nik,nij,njl->nkl", jacobian, metric.matrix(centres), jacobian)
    c = conformal_factor(points)[0]
    difference = pulled - c[:, None, None] * np.eye(2)
    return float(np.max(np.sqrt(np.einsum("nij,nij->n", difference, difference)) / c))


def _deformation_size(metric, points):
    c = conformal_factor(points)[0]
    difference = metric.matrix(points) - c[:, None, None] * np.eye(2)
    return float(np.max(np.sqrt(np.einsum("nij,nij->n", difference, difference)) / c))


def triviality_reconstruction(family, M, t_grid, rays, n_radial=32, n_angular=64, point_resolution=6,
                              floor=None, ray_tol=RAY_TOL, factor=PIPELINE_FACTOR):
    """
    Reconstructs f_t with f_t* g_t = g0 in four stages, raising PipelineStageFailure at the first failing one:

    (a) the ray transform of g_t' under g_t vanishes on the given (xi, eta) rays,
    (b) g_t' = d v_t under g_t on M up to the grid floor,
    (c) f_t solves df_t/dt = -(v_t)^sharp o f_t by RK4 with steps of a quarter of the t-grid spacing,
    (d) f_t* g_t = g0 on the verification points relative to |g_t - g0|, and f_t = id outside M.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if floor is None:
        floor = decomposition.grid_floor(CdrmDisk(hyperbolic_metric(), M.radius), n_radial, n_angular)
    report = PipelineReport(family.name, t_grid, floor)

    ray_max = 0.0
    for t in t_grid:
        metric, velocity = family.metric(t), family.velocity(t)
        for xi, eta in rays:
            ray_max = max(ray_max, abs(ray_transform(metric, velocity, xi, eta).value))
    _check(report, "ray_transform", ray_max, ray_tol)

    flow = _FlowField(family, M.radius, n_radial, n_angular)
    for t in t_grid:
        flow.decomposition(t)
    _check(report, "decomposition", flow.worst_relative, factor * floor)

    points = polar_sample_grid(min(1.25 * M.radius, 0.95), point_resolution)
    report.points = points
    stencil = _stencil(points, JACOBIAN_STEP)
    current, t_now = stencil, float(t_grid[0])
    outside = np.hypot(points[:, 0], points[:, 1]) > M.radius
    drift, residual = 0.0, 0.0
    for t in t_grid:
        if t > t_now:
            steps = RK4_SUBSTEPS * max(1, int(round((t - t_now) / np.min(np.diff(t_grid)))))
            current = _rk4(flow, current, t_now, t, steps)
            t_now = t
        images = current.reshape(-1, 5, 2)[:, 0]
        report.maps[float(t)] = images
        if family.inverse_map is not None:
            report.inverse_error[float(t)] = float(np.max(np.abs(images - family.inverse_map(t, points))))
        metric = family.metric(t)
        size = _deformation_size(metric, points)
        raw = pullback_residual(metric, points, current)
        residual = max(residual, raw / size if size > 0.0 else raw)
        if np.any(outside):
            drift = max(drift, float(np.max(np.abs(images[outside] - points[outside]))))
    _check(report, "flow", drift, 0.0)
    _check(report, "pullback", residual, factor * floor)
    return report
