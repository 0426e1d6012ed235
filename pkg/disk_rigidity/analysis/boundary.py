"""
Boundary-at-infinity quantities of a compact perturbation of the hyperbolic disk metric.

Both boundaries are coordinatized by the circle angle and the boundary map between g0 and g is the identity in
that coordinate. Beyond their exit from the escape disk all rays are g0-rays, which gives the horofunction

    H_xi(x) = lim d_g(x, a) - d_g0(0, a)   (a -> xi)   = s_exit + B0(xi, exit point)

in closed form, and Busemann functions, Gromov products and visual metrics follow from it exactly. The
truncation ladders of the limit definitions are available as method="ladder".
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from disk_rigidity.errors import DegenerateBoundaryPair, NotConverged
from disk_rigidity.geometry import hyperbolic as hyp
from disk_rigidity.geometry.fields import angle_of, as_points, wrap_angle
from disk_rigidity.geometry.geodesics import distance, geodesic_between_ideals, ray_from

logger = logging.getLogger(__name__)

HOROFUNCTION = "horofunction"
LADDER = "ladder"
T_LADDER = (6.0, 9.0, 12.0, 15.0)
LADDER_TOL = 1e-6
DELTA_LADDER = (1e-2, 5e-3, 2.5e-3)
DERIVATIVE_TOL = 1e-6
ORIGIN = (0.0, 0.0)


@dataclass
class BoundaryMeasurement:
    kind: str
    value: float
    truncation: float = np.inf
    history: list = field(default_factory=list)
    converged: bool = True


def _check_distinct(*angles):
    for i, a in enumerate(angles):
        for b in angles[i + 1:]:
            if abs(wrap_angle(a - b)) < 1e-12:
                raise DegenerateBoundaryPair(f"ideal points coincide at angle {angle_of(a):.12g}")


def _ladder(kind, values):
    history = list(values)
    converged = len(history) > 1 and abs(history[-1][1] - history[-2][1]) < LADDER_TOL
    if not converged:
        logger.warning("%s ladder did not stabilize: %s", kind, history)
        raise NotConverged(f"{kind} did not stabilize over T = {[t for t, _ in history]}", history)
    return BoundaryMeasurement(kind, history[-1][1], history[-1][0], history, True)


class VisualMetric:
    """
    Horofunctions, Gromov products and visual distances of one metric at one basepoint. Rays and
    bi-infinite geodesics are cached so that batches of boundary pairs share them.
    """

    def __init__(self, metric, x=ORIGIN):
        self.metric = metric
        self.x = as_points(x)
        self._horofunctions = {}
        self._constants = {}

    def horofunction(self, xi):
        theta = angle_of(xi)
        if theta not in self._horofunctions:
            ray = ray_from(self.metric, self.x, theta)
            exit_state = ray.forward_exit
            b = complex(*exit_state.point)
            self._horofunctions[theta] = exit_state.s - ray.s_start + float(hyp.busemann0(theta, b))
        return self._horofunctions[theta]

    def constant(self, xi, eta):
        """lim d_g(a, b) - d_g0(0, a) - d_g0(0, b) as a -> xi and b -> eta along their geodesic."""
        xi, eta = angle_of(xi), angle_of(eta)
        key = (min(xi, eta), max(xi, eta))
        if key not in self._constants:
            m, _ = hyp.ideal_geodesic(xi, eta)
            if self.metric.is_hyperbolic or abs(m) >= self.metric.support_radius:
                value = 2.0 * np.log(np.sin(abs(wrap_angle(xi - eta)) / 2.0))
            else:
                path = geodesic_between_ideals(self.metric, xi, eta)
                value = float(hyp.busemann0(xi, complex(*path.forward_exit.point))
                              + hyp.busemann0(eta, complex(*path.backward_exit.point))) + path.inside_length
            self._constants[key] = value
        return self._constants[key]

    def gromov(self, xi, eta):
        _check_distinct(xi, eta)
        return 0.5 * (self.horofunction(xi) + self.horofunction(eta) - self.constant(xi, eta))

    def distance(self, xi, eta):
        return float(np.exp(-self.gromov(xi, eta)))

    def log_cross_ratio(self, xi, xi2, eta, eta2):
        _check_distinct(xi, xi2, eta, eta2)
        return -self.gromov(xi, eta) - self.gromov(xi2, eta2) + self.gromov(xi, eta2) + self.gromov(xi2, eta)


def gromov_product(metric, x, xi, eta, method=HOROFUNCTION):
    _check_distinct(xi, eta)
    if method == HOROFUNCTION:
        value = VisualMetric(metric, x).gromov(xi, eta)
        measurement = BoundaryMeasurement("gromov_product", value, np.inf, [(np.inf, value)])
    else:
        ray_xi, ray_eta = ray_from(metric, x, xi), ray_from(metric, x, eta)
        values = []
        for T in T_LADDER:
            a, b = ray_xi.state(T)[0], ray_eta.state(T)[0]
            values.append((T, 0.5 * (2.0 * T - distance(metric, a, b)[0])))
            logger.debug("gromov ladder T = %g: %.12g", T, values[-1][1])
        measurement = _ladder("gromov_product", values)
    assert measurement.value >= -1e-7, f"negative Gromov product {measurement.value}"
    return measurement


def visual_distance(metric, x, xi, eta, method=HOROFUNCTION):
    product = gromov_product(metric, x, xi, eta, method)
    history = [(T, float(np.exp(-v))) for T, v in product.history]
    value = float(np.exp(-product.value))
    assert 0.0 < value <= 1.0 + 1e-7
    return BoundaryMeasurement("visual_distance", value, product.truncation, history, product.converged)


def busemann(metric, xi, x, y, method=HOROFUNCTION):
    """B(xi, x, y) = lim d(x, a) - d(y, a) as a -> xi."""
    x, y = as_points(x), as_points(y)
    if np.array_equal(x, y):
        return BoundaryMeasurement("busemann", 0.0, np.inf, [(np.inf, 0.0)])
    if method == HOROFUNCTION:
        visual = VisualMetric(metric, x)
        value = visual.horofunction(xi) - VisualMetric(metric, y).horofunction(xi)
        return BoundaryMeasurement("busemann", value, np.inf, [(np.inf, value)])
    ray = ray_from(metric, x, xi)
    values = []
    for T in T_LADDER:
        a = ray.state(T)[0]
        values.append((T, T - distance(metric, y, a)[0]))
    return _ladder("busemann", values)


def cross_ratio(metric, x, xi, xi2, eta, eta2):
    """[xi xi2 eta eta2] = rho(xi, eta) rho(xi2, eta2) / (rho(xi, eta2) rho(xi2, eta)) at basepoint x."""
    value = float(np.exp(VisualMetric(metric, x).log_cross_ratio(xi, xi2, eta, eta2)))
    return BoundaryMeasurement("cross_ratio", value, np.inf, [(np.inf, value)])


def conformal_derivative(g0, g, xi, x, y, deltas=DELTA_LADDER, raise_on_failure=True):
    """
    Derivative at xi of the boundary identity from (boundary, rho_{x,g0}) to (boundary, rho_{y,g}): the ratio
    of visual distances to xi +- delta, geometric mean over both signs, extrapolated in delta by Richardson.
    """
    theta = angle_of(xi)
    source, target = VisualMetric(g0, x), VisualMetric(g, y)
    ratios = []
    for delta in deltas:
        logs = [target.gromov(theta, theta + sign * delta) - source.gromov(theta, theta + sign * delta)
                for sign in (1.0, -1.0)]
        ratios.append((delta, float(np.exp(-0.5 * sum(logs)))))
    extrapolated = [(d2, (4.0 * r2 - r1) / 3.0) for (d1, r1), (d2, r2) in zip(ratios[:-1], ratios[1:])]
    converged = len(extrapolated) < 2 or abs(extrapolated[-1][1] - extrapolated[-2][1]) < DERIVATIVE_TOL
    measurement = BoundaryMeasurement("conformal_derivative", extrapolated[-1][1], deltas[-1],
                                      ratios + extrapolated, converged)
    if not converged and raise_on_failure:
        raise NotConverged(f"conformal derivative at {theta:.6g} did not stabilize", measurement.history)
    return measurement


@dataclass
class MoebiusReport:
    quadruples: np.ndarray
    log_cross_ratio_g: np.ndarray
    log_cross_ratio_g0: np.ndarray
    deviations: np.ndarray

    @property
    def max_deviation(self):
        return float(np.max(self.deviations)) if len(self.deviations) else 0.0

    def rows(self):
        return [tuple(q) + (lg, l0, np.exp(lg), np.exp(l0), d)
                for q, lg, l0, d in zip(self.quadruples, self.log_cross_ratio_g, self.log_cross_ratio_g0,
                                        self.deviations)]


def moebius_deviation(g0, g, quadruples, x=ORIGIN):
    """
    |log([.]_{rho_x,g} / [.]_{rho_x,g0})| over the given quadruples (xi, xi2, eta, eta2) of angles.
    """
    quadruples = np.asarray(quadruples, dtype=float).reshape(-1, 4)
    visual_g, visual_0 = VisualMetric(g, x), VisualMetric(g0, x)
    log_g = np.array([visual_g.log_cross_ratio(*q) for q in quadruples])
    log_0 = np.array([visual_0.log_cross_ratio(*q) for q in quadruples])
    report = MoebiusReport(quadruples, log_g, log_0, np.abs(log_g - log_0))
    logger.info("moebius deviation of %s over %d quadruples: %.3e", g.name, len(quadruples), report.max_deviation)
    return report


def mean_value_check(g0, g, pairs, x=ORIGIN):
    """
    Relative defect of rho_{x,g}(xi, eta)^2 = df(xi) df(eta) rho_{x,g0}(xi, eta)^2 for each pair, where df is
    the conformal derivative of the boundary identity at the common basepoint x.
    """
    visual_g, visual_0 = VisualMetric(g, x), VisualMetric(g0, x)
    defects = []
    for xi, eta in pairs:
        lhs = visual_g.distance(xi, eta) ** 2
        rhs = conformal_derivative(g0, g, xi, x, x).value * conformal_derivative(g0, g, eta, x, x).value \
            * visual_0.distance(xi, eta) ** 2
        defects.append(abs(lhs - rhs) / rhs)
    return np.array(defects)


def basepoint_covariance_check(metric, samples, method=HOROFUNCTION):
    """
    Defects of log rho_y(xi, eta) - log rho_x(xi, eta) = (B(xi, x, y) + B(eta, x, y)) / 2 over samples
    (x, y, xi, eta).
    """
    defects = []
    for x, y, xi, eta in samples:
        lhs = np.log(visual_distance(metric, y, xi, eta).value) - np.log(visual_distance(metric, x, xi, eta).value)
        rhs = 0.5 * (busemann(metric, xi, x, y, method).value + busemann(metric, eta, x, y, method).value)
        defects.append(abs(lhs - rhs))
    return np.array(defects)


def ray_shadowing(g0, g, x, xi, parameters=(1.0, 2.0, 4.0, 8.0, 12.0)):
    """Hyperbolic distance between the g-ray and the g0-ray from x towards xi at the given arclengths."""
    ray_g, ray_0 = ray_from(g, x, xi), ray_from(g0, x, xi)
    s = np.asarray(parameters, dtype=float)
    return np.array([hyp.hyp_distance(p, q) for p, q in zip(ray_g.state(s)[0], ray_0.state(s)[0])])
