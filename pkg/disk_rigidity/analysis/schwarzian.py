"""
Integrated Schwarzian of a compactly supported deformation g of g0, by the renormalized distance limit and by
conformal derivatives of the boundary identity, and the distance-gap and ray bounds built on it.

Sign convention: S is reported with the sign of the distance limit lim d_g(p, q) - d_g0(p, q). With derivatives
taken as limits of rho_{y,g} / rho_{x,g0}, the derivative route equals -log(df(xi) df(eta)).
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from disk_rigidity.analysis.boundary import conformal_derivative
from disk_rigidity.analysis.ray_transform import ray_transform
from disk_rigidity.errors import DegenerateBoundaryPair, NotConverged
from disk_rigidity.geometry import hyperbolic as hyp
from disk_rigidity.geometry.fields import angle_of, wrap_angle
from disk_rigidity.geometry.geodesics import ESCAPE_MARGIN, distance, geodesic_between_ideals
from disk_rigidity.geometry.operators import verify_curvature_bound

logger = logging.getLogger(__name__)

R_LADDER = (4.0, 6.0, 8.0, 10.0, 12.0)
SCHWARZIAN_TOL = 1e-6
BASEPOINT_TOL = 2e-4
BASEPOINT_SHIFT = 0.3
RAY_SLACK_TOL = 1e-4
DIAMETER_POINTS = 32
DIAMETER_REFINEMENT = 80
LIMIT = "renormalized_limit"
DERIVATIVE = "conformal_derivative"


@dataclass
class SchwarzianValue:
    pair: tuple
    value: float
    method: str
    history: list = field(default_factory=list)
    converged: bool = True


def _pair(xi, eta):
    xi, eta = angle_of(xi), angle_of(eta)
    if abs(wrap_angle(xi - eta)) < 1e-12:
        raise DegenerateBoundaryPair(f"ideal points coincide at angle {xi:.12g}")
    return xi, eta


def schwarzian_via_limit(g0, g, xi, eta, r_ladder=R_LADDER, tol=SCHWARZIAN_TOL, check_curvature=True):
    """
    d_g(p_R, q_R) - d_g0(p_R, q_R) for p_R, q_R at arclength +R and -R from the closest point to the origin of
    the g0-geodesic from eta to xi, over the R ladder. All rungs are evaluated so that values at nearby
    parameters share their truncation. Both metrics are checked against K <= -1 first unless check_curvature
    is off.
    """
    xi, eta = _pair(xi, eta)
    if check_curvature:
        verify_curvature_bound(g0)
        verify_curvature_bound(g)
    if g.is_hyperbolic:
        return SchwarzianValue((xi, eta), 0.0, LIMIT, [(R, 0.0) for R in r_ladder], True)
    m, alpha = hyp.ideal_geodesic(xi, eta)
    history = []
    for R in r_ladder:
        p, q = hyp.to_point(hyp.exp_map(m, alpha, R)), hyp.to_point(hyp.exp_map(m, alpha, -R))
        gap = distance(g, p, q)[0] - distance(g0, p, q)[0]
        history.append((R, gap))
        logger.debug("schwarzian ladder R = %g: %.12g", R, gap)
    converged = len(history) > 1 and abs(history[-1][1] - history[-2][1]) < tol
    value = SchwarzianValue((xi, eta), history[-1][1], LIMIT, history, converged)
    if not converged:
        logger.warning("schwarzian limit did not stabilize for (%.6g, %.6g): %s", xi, eta, history)
        raise NotConverged(f"distance gap did not stabilize over R = {list(r_ladder)}", history)
    return value


def _derivative_value(g0, g, xi, eta, x, y):
    return -(np.log(conformal_derivative(g0, g, xi, x, y).value) + np.log(conformal_derivative(g0, g, eta, x, y).value))


def schwarzian_via_derivatives(g0, g, xi, eta, shift=BASEPOINT_SHIFT, tol=BASEPOINT_TOL):
    """
    Schwarzian from conformal derivatives at xi and eta, with basepoints x on the g0-geodesic and y on the
    g-geodesic between them. The value is recomputed with both basepoints moved by `shift` along their
    geodesics and NotConverged is raised if the two disagree by more than tol.
    """
    xi, eta = _pair(xi, eta)
    m, alpha = hyp.ideal_geodesic(xi, eta)
    path = geodesic_between_ideals(g, xi, eta)
    s_mid = 0.5 * (path.forward_exit.s + path.backward_exit.s)
    history = []
    for offset in (0.0, shift):
        x = hyp.to_point(hyp.exp_map(m, alpha, offset))
        y = path.state(s_mid + offset)[0]
        history.append((offset, _derivative_value(g0, g, xi, eta, x, y)))
    defect = abs(history[1][1] - history[0][1])
    value = SchwarzianValue((xi, eta), history[0][1], DERIVATIVE, history, defect < tol)
    if not value.converged:
        logger.warning("basepoint shift changed the schwarzian of (%.6g, %.6g) by %.3e", xi, eta, defect)
        raise NotConverged(f"schwarzian depends on the basepoints (defect {defect:.3e})", history)
    return value


@dataclass
class DistanceGapReport:
    pairs: list
    gaps: np.ndarray
    ball_radius: float
    diameter_g: float
    diameter_g0: float

    @property
    def bound(self):
        return self.diameter_g + 3.0 * self.diameter_g0

    @property
    def max_gap(self):
        return float(np.max(self.gaps)) if len(self.gaps) else 0.0

    @property
    def passed(self):
        return bool(np.all(self.gaps <= self.bound))

    def rows(self):
        return [(*p, *q, hyp.hyp_distance(p, q), gap) for (p, q), gap in zip(self.pairs, self.gaps)]


def ball_diameter(metric, radius, n=DIAMETER_POINTS):
    """
    Largest metric distance between points of the circle |x| = radius: a scan over n points, pairs at least a
    quarter turn apart, then a Nelder-Mead refinement of the best pair.
    """

    def length(angles):
        p, q = (radius * np.array([np.cos(a), np.sin(a)]) for a in angles)
        return distance(metric, p, q)[0] if abs(wrap_angle(angles[0] - angles[1])) > 1e-3 else 0.0

    grid = 2.0 * np.pi * np.arange(n) / n
    candidates = [(grid[i], grid[j]) for i in range(n) for j in range(i + n // 4, min(i + n - n // 4, n - 1) + 1)]
    lengths = [length(pair) for pair in candidates]
    best = int(np.argmax(lengths))
    refined = minimize(lambda a: -length(a), candidates[best], method="Nelder-Mead",
                       options={"xatol": 1e-5, "fatol": 1e-10, "maxiter": DIAMETER_REFINEMENT})
    logger.debug("ball diameter at radius %g: scan %.9g, refined %.9g", radius, lengths[best], -refined.fun)
    return max(lengths[best], -float(refined.fun))


def distance_gap_scan(g0, g, pairs, ball_margin=ESCAPE_MARGIN):
    """
    |d_g(p, q) - d_g0(p, q)| over the given point pairs, with the bound diam_g(B) + 3 diam_g0(B) for the ball B
    of Euclidean radius support + ball_margin around the origin.
    """
    ball_radius = g.support_radius + ball_margin
    gaps = np.array([abs(distance(g, p, q)[0] - distance(g0, p, q)[0]) for p, q in pairs])
    report = DistanceGapReport(list(pairs), gaps, ball_radius, ball_diameter(g, ball_radius),
                               4.0 * np.arctanh(ball_radius))
    logger.info("distance gaps of %s over %d pairs: max %.6g, bound %.6g", g.name, len(gaps), report.max_gap,
                report.bound)
    return report


@dataclass
class RaySchwarzianReport:
    pair: tuple
    ray: float
    schwarzian: float
    tolerance: float = RAY_SLACK_TOL

    @property
    def slack(self):
        return self.ray - 2.0 * self.schwarzian

    @property
    def passed(self):
        return self.slack >= -self.tolerance


def ray_vs_schwarzian(g0, g, xi, eta, tol=RAY_SLACK_TOL):
    """Both sides of I_g0(g - g0)(xi, eta) >= 2 S(xi, eta) and their slack."""
    xi, eta = _pair(xi, eta)
    h = g.perturbation
    ray = 0.0 if h is None else ray_transform(g0, h, xi, eta).value
    schwarz = schwarzian_via_limit(g0, g, xi, eta, check_curvature=False).value
    report = RaySchwarzianReport((xi, eta), ray, schwarz, tol)
    if not report.passed:
        logger.warning("ray inequality fails for (%.6g, %.6g): slack %.3e", xi, eta, report.slack)
    return report


def ray_vs_schwarzian_scan(g0, g, pairs, tol=RAY_SLACK_TOL):
    reports = [ray_vs_schwarzian(g0, g, xi, eta, tol) for xi, eta in pairs]
    if reports:
        logger.info("ray inequality over %d pairs: min slack %.3e", len(reports), min(r.slack for r in reports))
    return reports
