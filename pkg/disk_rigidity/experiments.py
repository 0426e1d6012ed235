"""
One function per command-line experiment. Each takes an ExperimentConfig, writes report.csv, history.csv,
plot_*.svg and summary.txt into the output directory and returns an ExperimentResult with its pass/fail lines.
"""
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from disk_rigidity.analysis import boundary, decomposition, schwarzian as schwarz, utils
from disk_rigidity.analysis.ray_transform import CdrmDisk, cdrm_sinogram, kernel_inverse_probe, potential_kernel_check, \
    ray_transform
from disk_rigidity.analysis.variation import (distance_variation_check, schwarzian_variation_check,
                                              triviality_reconstruction, volume_inequality_check,
                                              volume_invariance_check)
from disk_rigidity.config import describe
from disk_rigidity.errors import HypothesisViolation, NotConverged, PipelineStageFailure
from disk_rigidity.geometry.families import (anisotropic_bump, build_family, conformal_bump, hyperbolic_metric,
                                             random_bump_one_form)
from disk_rigidity.geometry.geodesics import geodesic_between_ideals
from disk_rigidity.geometry.operators import deformation_norms, sym_derivative, verify_curvature_bound

logger = logging.getLogger(__name__)

# families whose boundary maps are Moebius, and those known not to be
TRIVIAL = ("constant", "twist")
NON_TRIVIAL = ("conformal", "shrinking")
POTENTIAL = ("constant", "twist", "potential")
DETECTION_FACTOR = 10.0
RAY_TRANSFORM_TOL = 1e-5


@dataclass
class ExperimentResult:
    name: str
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def check(self, label, passed, detail=""):
        self.checks.append((label, bool(passed), detail))
        if not passed:
            logger.warning("%s: %s failed (%s)", self.name, label, detail)
        return passed

    @property
    def passed(self):
        return all(passed for _, passed, _ in self.checks)

    def lines(self):
        out = [f"{'PASS' if passed else 'FAIL'} {label}: {detail}" for label, passed, detail in self.checks]
        return out + [f"note {note}" for note in self.notes]


class _Output:

    def __init__(self, config):
        self.directory = os.path.join(config.out, config.experiment)
        os.makedirs(self.directory, exist_ok=True)
        self.config = config

    def path(self, name):
        return os.path.join(self.directory, name)

    def table(self, name, header, rows, tolerances=None):
        return utils.write_table(self.path(name), header, rows, tolerances)

    def plot(self, name, series, xlabel, ylabel, **kwargs):
        return utils.plot_series(self.path(f"plot_{name}.svg"), series, xlabel, ylabel, **kwargs)

    def summary(self, result):
        with open(self.path("summary.txt"), "w") as f:
            for key, value in describe(self.config).items():
                f.write(f"# {key} = {value}\n")
            for line in result.lines():
                f.write(line + "\n")
            f.write(f"{'PASS' if result.passed else 'FAIL'} overall\n")
        return result


def _setup(config):
    rng = np.random.default_rng(config.seed)
    family = build_family(config.family, config.amplitude, config.support_radius, config.twist)
    return rng, family, _Output(config)


def _curvature_hypothesis(config, family, result, t_values):
    """
    Records whether every g_t on the grid satisfies K <= -1 + margin. Exact pullbacks of g0 must; other families
    are explored with the hypothesis reported as met or not met.
    """
    margin = config.tolerance("curvature_margin")
    reports = [verify_curvature_bound(family.metric(t), margin=margin, raise_on_failure=False) for t in t_values]
    met = all(report.passed for report in reports)
    detail = f"max K {max(report.max_curvature for report in reports):.9g} over t = {list(t_values)}"
    if config.family in TRIVIAL:
        result.check(f"curvature hypothesis K <= {-1.0 + margin:g}", met, detail)
    else:
        result.notes.append(f"curvature hypothesis K <= {-1.0 + margin:g} {'met' if met else 'not met'}: {detail}")
    return met


def curvature(config):
    """
    K <= -1 + margin for every g_t on the t grid, plus convexity of the CDRM boundary. A violation is written to
    the report and then raised.
    """
    rng, family, out = _setup(config)
    margin = config.tolerance("curvature_margin")
    result = ExperimentResult("curvature")
    rows, history, violation = [], [], None
    for t in config.t_values:
        metric = family.metric(t)
        report = verify_curvature_bound(metric, margin=margin, raise_on_failure=False)
        rows.append((t, report.max_curvature, report.bound, *report.worst_point, report.passed))
        M = CdrmDisk(metric, config.cdrm_radius)
        angles = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
        history.extend((t, a, k) for a, k in zip(angles, M.geodesic_curvature(angles)))
        result.check(f"K <= -1 + {margin:g} at t = {t:g}", report.passed, f"max K = {report.max_curvature:.6g}")
        norms = deformation_norms(metric)
        result.notes.append(f"|g_t - g0| at t = {t:g}: C0 {norms['c0']:.3e}, C1 {norms['c1']:.3e}")
        if not report.passed and violation is None:
            violation = HypothesisViolation(report.worst_point, report.max_curvature, report.bound)
    out.table("report.csv", ("t", "max_curvature", "bound", "x1", "x2", "passed"), rows, {"curvature_margin": margin})
    out.table("history.csv", ("t", "boundary_angle", "geodesic_curvature"), history)
    out.plot("curvature", {"max K": ([r[0] for r in rows], [r[1] for r in rows])}, "t", "max K")
    convex = min(k for _, _, k in history)
    result.check("boundary of M strictly convex", convex > 0.0, f"min geodesic curvature {convex:.6g}")
    out.summary(result)
    if violation is not None:
        raise violation
    return result


def moebius(config):
    rng, family, out = _setup(config)
    g0, g = hyperbolic_metric(), family.metric(1.0)
    tol = config.tolerance("moebius")
    result = ExperimentResult("moebius")
    _curvature_hypothesis(config, family, result, [1.0])
    report = boundary.moebius_deviation(g0, g, utils.sample_quadruples(rng, config.quadruples))
    out.table("report.csv", ("xi", "xi2", "eta", "eta2", "log_cr_g", "log_cr_g0", "cr_g", "cr_g0", "deviation"),
              report.rows(), {"moebius": tol})
    shadow = [(xi, s, d) for xi in rng.uniform(0.0, 2.0 * np.pi, 4)
              for s, d in zip((1.0, 2.0, 4.0, 8.0, 12.0), boundary.ray_shadowing(g0, g, (0.0, 0.0), xi))]
    out.table("history.csv", ("xi", "s", "ray_distance"), shadow)
    out.plot("deviation", {"deviation": (np.arange(len(report.deviations)), report.deviations)}, "quadruple",
             "|log cross-ratio deviation|", log_y=True, scatter=True)
    if config.family in TRIVIAL:
        result.check("boundary map is Moebius", report.max_deviation <= tol, f"max deviation {report.max_deviation:.3e}")
    elif config.family in NON_TRIVIAL:
        result.check("non-Moebius deformation detected", report.max_deviation >= DETECTION_FACTOR * tol,
                     f"max deviation {report.max_deviation:.3e}")
    else:
        result.notes.append(f"max deviation {report.max_deviation:.3e}")
    result.notes.append(f"max ray shadowing distance {max(d for *_, d in shadow):.6g}")
    return out.summary(result)


def schwarzian(config):
    rng, family, out = _setup(config)
    g0, g = hyperbolic_metric(), family.metric(1.0)
    tol, agreement, slack_tol = (config.tolerance(k) for k in ("schwarzian", "method_agreement", "ray_slack"))
    result = ExperimentResult("schwarzian")
    _curvature_hypothesis(config, family, result, [1.0])
    rows, history = [], []
    for k, (xi, eta) in enumerate(utils.sample_pairs(rng, config.pairs, 0.1)):
        limit = schwarz.schwarzian_via_limit(g0, g, xi, eta, check_curvature=False)
        try:
            derivative = schwarz.schwarzian_via_derivatives(g0, g, xi, eta).value
        except NotConverged as e:
            derivative = np.nan
            result.notes.append(f"derivative route unstable at ({xi:.6g}, {eta:.6g}): {e}")
        ray = schwarz.ray_vs_schwarzian(g0, g, xi, eta, slack_tol)
        rows.append((xi, eta, limit.value, derivative, abs(limit.value - derivative), ray.ray, ray.slack))
        history.extend((k, R, gap) for R, gap in limit.history)
        if k == 0:
            geodesic_between_ideals(g, xi, eta).to_csv(out.path("geodesic.csv"))
    out.table("report.csv", ("xi", "eta", "schwarzian_limit", "schwarzian_derivative", "difference", "ray", "slack"),
              rows, {"schwarzian": tol, "method_agreement": agreement, "ray_slack": slack_tol})
    out.table("history.csv", ("pair", "R", "distance_gap"), history)
    values = np.array([r[2] for r in rows])
    out.plot("schwarzian", {"limit": (np.arange(len(rows)), values),
                            "derivatives": (np.arange(len(rows)), np.array([r[3] for r in rows]))},
             "pair", "S", scatter=True)
    difference = float(np.max([r[4] for r in rows])) if rows else 0.0
    result.check("routes agree", difference <= agreement, f"max difference {difference:.3e}")
    slack = min((r[6] for r in rows), default=0.0)
    result.check("I(g - g0) >= 2S", slack >= -slack_tol, f"min slack {slack:.3e}")
    size = float(np.max(np.abs(values))) if len(values) else 0.0
    if config.family in TRIVIAL:
        result.check("schwarzian vanishes", size <= tol, f"max |S| {size:.3e}")
    elif config.family in NON_TRIVIAL:
        result.check("schwarzian detected", size >= DETECTION_FACTOR * tol, f"max |S| {size:.3e}")

    pairs = utils.sample_point_pairs(rng, config.point_pairs)
    gaps = schwarz.distance_gap_scan(g0, g, pairs)
    out.table("gaps.csv", ("p1", "p2", "q1", "q2", "d0", "gap"), gaps.rows())
    result.check("distance gap bounded", gaps.passed, f"max gap {gaps.max_gap:.6g} <= {gaps.bound:.6g}")
    return out.summary(result)


def raytransform(config):
    """I_{g_t}(g_t') over chords through the support at each t, and the CDRM sinogram of g_0' under g_0."""
    rng, family, out = _setup(config)
    result = ExperimentResult("raytransform")
    chords = utils.sample_chords(rng, config.rays, config.support_radius)
    rows = []
    for t in config.t_values:
        metric, velocity = family.metric(t), family.velocity(t)
        M = CdrmDisk(metric, config.cdrm_radius)
        result.check(f"M convex at t = {t:g}", M.check_convexity() > 0.0)
        for xi, eta in chords:
            value = ray_transform(metric, velocity, xi, eta)
            rows.append((t, xi, eta, value.value, value.error))
    out.table("report.csv", ("t", "xi", "eta", "ray_transform", "quadrature_error"), rows,
              {"ray_transform": RAY_TRANSFORM_TOL})
    sinogram = cdrm_sinogram(CdrmDisk(family.metric(0.0), config.cdrm_radius), family.velocity(0.0), 16, 8)
    out.table("history.csv", ("boundary_angle", "beta", "value"), sinogram.rows())
    out.plot("sinogram", {f"beta={b:.3f}": (sinogram.angles, sinogram.values[:, j])
                          for j, b in enumerate(sinogram.betas)}, "boundary angle", "I_M")
    # d v is potential for g0 only, so the potential family vanishes at t = 0 alone
    checked = [r for r in rows if config.family in TRIVIAL or r[0] == 0.0]
    size = max((abs(r[3]) for r in checked), default=0.0)
    if config.family in POTENTIAL and checked:
        result.check("ray transform of g_t' vanishes", size <= RAY_TRANSFORM_TOL, f"max |I| {size:.3e}")
    else:
        result.notes.append(f"max |I| {size:.3e}")
    return out.summary(result)


def kernel(config):
    """I(d v) = 0 for random bump 1-forms, also after scaling the form by 10."""
    rng, family, out = _setup(config)
    g0 = hyperbolic_metric()
    tol = config.tolerance("kernel")
    result = ExperimentResult("kernel")
    rows, history = [], []
    for k in range(config.fields):
        v = random_bump_one_form(rng, config.support_radius)
        rays = utils.sample_chords(rng, config.rays, v.support_radius)
        for scale in (1.0, 10.0):
            check = potential_kernel_check(g0, v * scale, rays, tol)
            rows.extend((k, scale, xi, eta, value) for (xi, eta), value in zip(rays, check.values))
            history.append((k, scale, check.max_abs))
            result.check(f"I(d v) = 0 for form {k} x{scale:g}", check.passed, f"max |I| {check.max_abs:.3e}")
        M = CdrmDisk(g0, config.cdrm_radius)
        outcome = kernel_inverse_probe(M, sym_derivative(g0, v), M.sample_entries(rng, 8), config.n_radial,
                                       config.n_angular)
        result.check(f"kernel inverse consistent for form {k}", outcome.consistent, outcome.verdict)
    out.table("report.csv", ("form", "scale", "xi", "eta", "ray_transform"), rows, {"kernel": tol})
    out.table("history.csv", ("form", "scale", "max_abs"), history)
    out.plot("kernel", {f"x{s:g}": ([h[0] for h in history if h[1] == s], [h[2] for h in history if h[1] == s])
                        for s in (1.0, 10.0)}, "form", "max |I(d v)|", log_y=True, scatter=True)
    return out.summary(result)


def decompose(config):
    rng, family, out = _setup(config)
    g0 = hyperbolic_metric()
    factor = config.tolerance("pipeline_factor")
    result = ExperimentResult("decompose")
    M = CdrmDisk(g0, config.cdrm_radius)
    grid = decomposition.PolarGrid(M.radius, config.n_radial, config.n_angular)
    operator = decomposition.DeformationOperator(g0, grid)
    floor = decomposition.grid_floor(M, config.n_radial, config.n_angular)
    f = family.velocity(0.0)
    decomposed = decomposition.solenoidal_decompose(M, f, operator=operator)
    out.table("report.csv", decomposed.header, decomposed.rows(), {"pipeline_factor": factor, "grid_floor": floor})
    history = []
    for k, v0 in enumerate(decomposition.reference_potentials(M.radius)):
        reference = decomposition.solenoidal_decompose(M, sym_derivative(g0, v0), operator=operator)
        history.append((k, reference.s_relative, decomposition.recovery_error(reference, v0),
                        reference.divergence_norm, reference.solver_residual))
    out.table("history.csv", ("reference", "s_relative", "recovery_error", "divergence", "solver_residual"), history)
    out.plot("solenoidal", {"|s| at nodes": (grid.r, np.sqrt(np.einsum("nij,nij->n", decomposed.s_nodes,
                                                                        decomposed.s_nodes)))},
             "r", "|s|", scatter=True)
    defect = operator.adjointness_defect(rng)
    result.check("d and delta adjoint", defect <= max(floor, 1e-12), f"defect {defect:.3e}, floor {floor:.3e}")
    detail = f"|s|/|f| = {decomposed.s_relative:.3e}, floor {floor:.3e}"
    if config.family in POTENTIAL:
        result.check("f is potential", decomposed.s_relative <= factor * floor, detail)
        result.notes.append(f"observed support of v: {decomposed.observed_support():.4f}")
    elif config.family in NON_TRIVIAL:
        result.check("f has a solenoidal part", decomposed.s_relative >= factor * floor, detail)
    else:
        result.notes.append(detail)
    return out.summary(result)


def variation(config):
    rng, family, out = _setup(config)
    tol, distance_tol, order_tol = (config.tolerance(k) for k in ("variation", "distance_variation", "order"))
    result = ExperimentResult("variation")
    _curvature_hypothesis(config, family, result, config.t_values)
    rows, orders = [], []
    for xi, eta in utils.diameter_pairs(config.pairs, rng.uniform(0.0, np.pi)):
        report = schwarzian_variation_check(family, xi, eta, config.t_values, check_curvature=False)
        rows.extend((xi, eta, *row) for row in report.rows())
        orders.append((xi, eta, report.order))
    out.table("report.csv", ("xi", "eta") + ("t", "lhs", "rhs", "abs_error", "rel_error"), rows,
              {"variation": tol, "order": order_tol})
    distance_rows = []
    for p, q in utils.sample_point_pairs(rng, config.point_pairs):
        for t in config.t_values[:3]:
            report = distance_variation_check(family, p, q, t)
            distance_rows.append((*p, *q, *report.rows()[0]))
    out.table("distance.csv", ("p1", "p2", "q1", "q2", "t", "lhs", "rhs", "abs_error", "rel_error"), distance_rows,
              {"distance_variation": distance_tol})
    out.table("history.csv", ("xi", "eta", "order"), orders)
    t = np.array(config.t_values)
    n_t = len(t)
    out.plot("variation", {"d/dt 2S": (t, np.array([r[3] for r in rows[:n_t]])),
                           "I(g_t')": (t, np.array([r[4] for r in rows[:n_t]]))}, "t", "value")
    worst = max((r[-1] for r in rows), default=0.0)
    result.check("d/dt 2S = I(g_t')", worst <= tol, f"max relative error {worst:.3e}")
    worst = max((r[-1] for r in distance_rows), default=0.0)
    result.check("distance first variation", worst <= distance_tol, f"max relative error {worst:.3e}")
    lowest = min((o for *_, o in orders), default=np.inf)
    result.check("finite-difference order", lowest >= order_tol, f"min observed order {lowest:.3g}")
    return out.summary(result)


def pipeline(config):
    rng, family, out = _setup(config)
    factor = config.tolerance("pipeline_factor")
    result = ExperimentResult("pipeline")
    _curvature_hypothesis(config, family, result, config.t_values)
    M = CdrmDisk(hyperbolic_metric(), config.cdrm_radius)
    rays = utils.sample_chords(rng, config.rays, config.support_radius)
    try:
        report = triviality_reconstruction(family, M, config.t_values, rays, config.n_radial, config.n_angular,
                                           factor=factor)
        failure = None
    except PipelineStageFailure as e:
        report, failure = None, e
    if failure is None:
        out.table("report.csv", ("stage", "residual", "threshold", "status"), report.rows(),
                  {"pipeline_factor": factor, "grid_floor": report.floor})
        history = [(t, *x, *y) for t, images in report.maps.items() for x, y in zip(report.points, images)]
        out.table("history.csv", ("t", "x1", "x2", "f1", "f2"), history)
        if report.inverse_error:
            times = sorted(report.inverse_error)
            out.plot("inverse_error", {"|f_t - known inverse|": (times, [report.inverse_error[t] for t in times])},
                     "t", "max error")
            result.notes.append(f"max error against the known inverse {max(report.inverse_error.values()):.3e}")
        result.check("f_t* g_t = g0 reconstructed", config.family not in NON_TRIVIAL, "all stages passed")
    else:
        out.table("report.csv", ("stage", "residual", "threshold", "status"),
                  [(failure.stage, failure.residual, failure.threshold, "fail")], {"pipeline_factor": factor})
        out.table("history.csv", ("stage", "residual"), [(failure.stage, failure.residual)])
        expected = config.family in NON_TRIVIAL and failure.stage == "ray_transform"
        result.check("non-triviality reported at the ray transform stage" if expected else "pipeline", expected,
                     str(failure))
    return out.summary(result)


def _volume_fields(rng, config, count):
    for k in range(count):
        amplitude = rng.uniform(0.2, 1.0)
        if k % 2:
            yield anisotropic_bump(0.02 * amplitude, config.support_radius)
        else:
            yield conformal_bump(-5e-3 * amplitude, config.support_radius)


def volume(config):
    rng, family, out = _setup(config)
    tol = config.tolerance("volume")
    result = ExperimentResult("volume")
    M = CdrmDisk(hyperbolic_metric(), config.cdrm_radius)
    rows = []
    for f in _volume_fields(rng, config, config.fields):
        report = volume_inequality_check(M, f)
        report.tolerance = tol
        rows.append((f.name, report.volume_g, report.volume_g0, report.pairing, report.norm_squared, report.status))
        result.check(f"volume estimate for {f.name}", report.passed, report.status)
    out.table("report.csv", ("field", "volume_g", "volume_g0", "pairing", "norm_squared", "status"),
              rows, {"volume": tol})
    history = [(t, *volume_invariance_check(family, M, t)) for t in config.t_values]
    out.table("history.csv", ("t", "volume_change", "quadrature_error"), history)
    out.plot("volume", {"|Vol(g_t) - Vol(g0)|": ([h[0] for h in history], [h[1] for h in history])}, "t",
             "volume change", log_y=True)
    if config.family in TRIVIAL:
        worst = max(h[1] - 10.0 * h[2] for h in history)
        result.check("volume invariant along the pullback family", worst <= tol, f"excess {worst:.3e}")
    return out.summary(result)
