"""
Geodesics of compact perturbations of the hyperbolic disk metric.

Inside the escape disk |x| <= r1 = r0 + ESCAPE_MARGIN geodesics are integrated numerically. Outside it the
metric is g0 and geodesics are continued in closed form; by convexity a geodesic enters and leaves the escape
disk at most once. Two-point and asymptotic problems are solved by shooting on a single angle whenever an
endpoint lies outside the escape disk, so conditioning does not degrade for far points.
"""
import logging
from collections import namedtuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from disk_rigidity.errors import (BvpNoConvergence, ChartEscape, DegenerateBoundaryPair, EndpointMismatch,
                                  NotEscaped, PointOutsideChart, SolverFailure)
from disk_rigidity.geometry import hyperbolic as hyp
from disk_rigidity.geometry.fields import IdealPoint, angle_of, as_points, wrap_angle
from disk_rigidity.geometry.operators import QuadratureResult, christoffel

logger = logging.getLogger(__name__)

RTOL = 1e-10
ATOL = 1e-10
ESCAPE_MARGIN = 0.05
CHART_SAFETY = 1e-6
UNIT_SPEED_TOL = 1e-9
TRUNCATION_RADIUS = 15.0
MAX_INSIDE_LENGTH = 50.0
MAX_NEWTON = 50
SHOOT_STEP = 1e-7
SOLVE_TOL = 1e-12
BVP_TOL = 1e-9
ANGLE_TOL = 1e-9
ENDPOINT_TOL = 1e-6
QUADRATURE_TOL = 1e-10
SCAN_POINTS = 64
_ON_CIRCLE = 1e-13

ExitState = namedtuple("ExitState", ["point", "velocity", "s"])


def escape_radius(metric):
    if not metric.is_compact_perturbation:
        raise ValueError("geodesic continuation needs a compact perturbation of g0")
    if metric.is_hyperbolic:
        return 0.0
    r1 = metric.support_radius + ESCAPE_MARGIN
    assert r1 < 1.0, "support disk too close to the chart boundary"
    return r1


def _vec(z):
    return np.array([z.real, z.imag])


class HyperbolicSegment:
    """Piece of a g0-geodesic: s -> exp_map(anchor, angle, s - s_anchor) for s in [s0, s1]."""

    def __init__(self, anchor, angle, s_anchor, s0, s1):
        self.anchor = complex(anchor)
        self.angle = float(angle)
        self.s_anchor = float(s_anchor)
        self.s0, self.s1 = float(s0), float(s1)

    def state(self, s):
        sigma = np.asarray(s, dtype=float) - self.s_anchor
        z = hyp.exp_map(self.anchor, self.angle, sigma)
        u = hyp.geodesic_velocity(self.anchor, self.angle, sigma)
        return hyp.to_point(z), hyp.to_point(u)

    def nodes(self, density=20.0):
        n = max(2, int(np.ceil((self.s1 - self.s0) * density)) + 1)
        return np.linspace(self.s0, self.s1, n)

    def inside_interval(self, radius):
        """Sub-interval of [s0, s1] on which the segment lies in the disk of the given radius, or None."""
        crossing = hyp.circle_crossings(self.anchor, self.angle, radius)
        if crossing is None:
            return None
        a = max(self.s0, self.s_anchor + crossing[0])
        b = min(self.s1, self.s_anchor + crossing[1])
        return (a, b) if b > a else None

    def reversed(self, s_end):
        return HyperbolicSegment(self.anchor, self.angle + np.pi, s_end - self.s_anchor, s_end - self.s1,
                                 s_end - self.s0)


class NumericSegment:
    """Piece integrated by solve_ivp: state(s) = solution(t) with t = offset + sign * s."""

    def __init__(self, solution, nodes, offset, sign, s0, s1):
        self.solution = solution
        self._nodes = np.sort(np.asarray(nodes, dtype=float))
        self.offset, self.sign = float(offset), float(sign)
        self.s0, self.s1 = float(s0), float(s1)

    def state(self, s):
        y = self.solution(self.offset + self.sign * np.asarray(s, dtype=float))
        return np.moveaxis(y[:2], 0, -1), self.sign * np.moveaxis(y[2:], 0, -1)

    def nodes(self, density=None):
        return self._nodes

    def inside_interval(self, radius):
        return self.s0, self.s1

    def reversed(self, s_end):
        return NumericSegment(self.solution, s_end - self._nodes, self.offset + self.sign * s_end, -self.sign,
                              s_end - self.s1, s_end - self.s0)


def _simpson(fun, edges, m):
    frac = np.linspace(0.0, 1.0, 2 * m + 1)
    widths = edges[1:] - edges[:-1]
    s = edges[:-1, None] + widths[:, None] * frac
    w = np.ones(2 * m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    values = fun(s.ravel()).reshape(s.shape)
    return float(np.sum(values * w * (widths / (6.0 * m))[:, None]))


class GeodesicPath:

    def __init__(self, metric, segments, forward_exit=None, backward_exit=None, forward_ideal=None,
                 backward_ideal=None):
        """
        Unit-speed geodesic assembled from numeric and closed-form segments.

        :param metric: MetricField the path is a geodesic of.
        :param segments: Consecutive segments covering [s_start, s_end].
        :param forward_exit: ExitState beyond which the path is a g0-geodesic moving away from the support.
        :param backward_exit: Same for the backward direction; its velocity points backwards.
        :param forward_ideal: IdealPoint reached as s -> +inf, if the path is continued to infinity.
        :param backward_ideal: IdealPoint reached as s -> -inf.
        """
        self.metric = metric
        self.segments = list(segments)
        self.forward_exit = forward_exit
        self.backward_exit = backward_exit
        self.forward_ideal = forward_ideal
        self.backward_ideal = backward_ideal

    @property
    def s_start(self):
        return self.segments[0].s0

    @property
    def s_end(self):
        return self.segments[-1].s1

    @property
    def length(self):
        return self.s_end - self.s_start

    @property
    def inside_length(self):
        return self.forward_exit.s - self.backward_exit.s

    def state(self, s):
        """Chart positions and velocities at arclengths s, each of shape s.shape + (2,)."""
        s = np.asarray(s, dtype=float)
        flat = s.ravel()
        x, u = np.zeros((flat.size, 2)), np.zeros((flat.size, 2))
        for i, segment in enumerate(self.segments):
            last = i == len(self.segments) - 1
            mask = (flat >= segment.s0) & ((flat <= segment.s1) if last else (flat < segment.s1))
            if i == 0:
                mask |= flat < segment.s0
            if last:
                mask |= flat > segment.s1
            if np.any(mask):
                x[mask], u[mask] = segment.state(flat[mask])
        return x.reshape(s.shape + (2,)), u.reshape(s.shape + (2,))

    @property
    def start(self):
        return self.state(self.s_start)

    @property
    def end(self):
        return self.state(self.s_end)

    def samples(self, density=20.0):
        s = np.unique(np.concatenate([segment.nodes(density) for segment in self.segments]))
        x, u = self.state(s)
        return s, x, u

    def speed_defect(self):
        s, x, u = self.samples()
        return np.abs(self.metric.norm(x, u) ** 2 - 1.0)

    def reversed(self):
        s_end = self.s_end + self.s_start
        segments = [segment.reversed(s_end) for segment in reversed(self.segments)]

        def flip(state):
            return None if state is None else ExitState(state.point, state.velocity, s_end - state.s)

        return GeodesicPath(self.metric, segments, flip(self.backward_exit), flip(self.forward_exit),
                            self.backward_ideal, self.forward_ideal)

    def integrate_tensor(self, f, tol=QUADRATURE_TOL):
        """
        Integral of f(gamma', gamma') ds along the path by composite Simpson on each segment, restricted to
        the part inside the support of f; nodes of numeric segments are the integrator's accepted steps.
        """
        if f.support_radius <= 0.0:
            return QuadratureResult(0.0, 0.0)

        def integrand(s):
            x, u = self.state(s)
            return np.einsum("...ij,...i,...j->...", f(x), u, u)

        total, error = 0.0, 0.0
        for segment in self.segments:
            interval = segment.inside_interval(f.support_radius)
            if interval is None:
                continue
            a, b = interval
            if isinstance(segment, NumericSegment):
                inner = segment.nodes()
                edges = np.unique(np.concatenate([[a, b], inner[(inner > a) & (inner < b)]]))
            else:
                edges = np.linspace(a, b, 17)
            m = 1
            previous = _simpson(integrand, edges, m)
            while True:
                m *= 2
                current = _simpson(integrand, edges, m)
                estimate = abs(current - previous) / 15.0
                if estimate < tol or m >= 256:
                    break
                previous = current
            total += current
            error += estimate
        return QuadratureResult(total, error)

    def to_csv(self, path):
        s, x, u = self.samples()
        defect = np.abs(self.metric.norm(x, u) ** 2 - 1.0)
        np.savetxt(path, np.column_stack([s, x, u, defect]), delimiter=",", header="s,x1,x2,v1,v2,speed_defect",
                   comments="")


def _geodesic_rhs(metric):
    def rhs(t, y):
        try:
            gamma = christoffel(metric, y[:2])
        except PointOutsideChart as exc:
            raise ChartEscape(str(exc)) from exc
        return np.concatenate([y[2:], -np.einsum("kij,i,j->k", gamma, y[2:], y[2:])])

    return rhs


def _leaving(radius):
    def event(t, y):
        return y[0] ** 2 + y[1] ** 2 - radius ** 2

    event.terminal = True
    event.direction = 1.0
    return event


def _integrate_numeric(metric, x, u, length, stop_radius, s0=0.0, rtol=RTOL, atol=ATOL):
    """Numeric segment from (x, u) of at most `length`; stops when leaving |x| < stop_radius."""
    sol = solve_ivp(_geodesic_rhs(metric), (0.0, length), np.concatenate([x, u]), method="RK45", rtol=rtol,
                    atol=atol, dense_output=True, events=_leaving(stop_radius))
    if sol.status == -1:
        raise SolverFailure(f"geodesic integration failed: {sol.message}")
    segment = NumericSegment(sol.sol, s0 + sol.t, -s0, 1.0, s0, s0 + sol.t[-1])
    return segment, sol.status == 1, sol.y[:2, -1], sol.y[2:, -1]


def _outside(z, u, r1):
    r = abs(z)
    return r > r1 + _ON_CIRCLE or (r >= r1 - _ON_CIRCLE and (np.conj(z) * u).real >= 0.0)


def _propagate(metric, z, u, length, r1, s0=0.0, stop_at_exit=False, rtol=RTOL, atol=ATOL):
    """
    Segments of the geodesic leaving the chart point z with unit chart velocity u (complex numbers), covering
    arclength `length`, and the exit state if it leaves the escape disk.
    """
    segments, exit_state = [], None
    s, remaining = s0, length
    for _ in range(4):
        if remaining <= 0.0:
            break
        if _outside(z, u, r1):
            angle = float(np.angle(u))
            crossing = hyp.circle_crossings(z, angle, r1) if r1 > 0.0 else None
            sigma = remaining if crossing is None or crossing[0] <= 0.0 else min(crossing[0], remaining)
            segments.append(HyperbolicSegment(z, angle, s, s, s + sigma))
            z, u = complex(hyp.exp_map(z, angle, sigma)), complex(hyp.geodesic_velocity(z, angle, sigma))
            s, remaining = s + sigma, remaining - sigma
        else:
            segment, exited, x, v = _integrate_numeric(metric, _vec(z), _vec(u), remaining, r1, s, rtol, atol)
            segments.append(segment)
            s, remaining = segment.s1, remaining - (segment.s1 - segment.s0)
            z, u = complex(*x), complex(*v)
            if not exited:
                break
            exit_state = ExitState(x, v, s)
            if stop_at_exit:
                break
    return segments, exit_state, z, u


def integrate_ivp(metric, x, v, length, closed_form_exterior=True, rtol=RTOL, atol=ATOL):
    """
    Geodesic with initial point x and unit initial velocity v, of the given arclength.

    :param closed_form_exterior: Continue outside the escape disk in closed form. When False the whole path is
        integrated numerically and ChartEscape is raised if it comes within CHART_SAFETY of the unit circle.
    """
    x = as_points(x)
    v = np.asarray(v, dtype=float)
    if abs(metric.norm(x, v) - 1.0) > UNIT_SPEED_TOL:
        raise ValueError(f"initial velocity has speed {metric.norm(x, v):.12g}, expected 1")
    assert length > 0.0
    if not closed_form_exterior:
        segment, escaped, _, _ = _integrate_numeric(metric, x, v, length, 1.0 - CHART_SAFETY, rtol=rtol, atol=atol)
        if escaped:
            raise ChartEscape(f"geodesic reached |x| = {1.0 - CHART_SAFETY} after length {segment.s1:.6g}")
        return GeodesicPath(metric, [segment])
    r1 = escape_radius(metric)
    segments, exit_state, z, u = _propagate(metric, complex(*x), complex(*v), length, r1, rtol=rtol, atol=atol)
    path = GeodesicPath(metric, segments, forward_exit=exit_state)
    if _outside(z, u, r1):
        path.forward_ideal = IdealPoint(hyp.ideal_endpoint_of(z, float(np.angle(u))))
    return path


def ideal_endpoint(metric, exit_state):
    """
    Ideal endpoint of the geodesic leaving the escape disk with the given (point, unit velocity) state.
    """
    point, velocity = np.asarray(exit_state[0], dtype=float), np.asarray(exit_state[1], dtype=float)
    z, u = complex(*point), complex(*velocity)
    r1 = escape_radius(metric)
    if abs(z) < r1 - 1e-9 or (abs(z) > 0.0 and (np.conj(z) * u).real < -1e-12):
        raise NotEscaped(f"state at |x| = {abs(z):.6g} is not an outward exit state for r1 = {r1:.6g}")
    return IdealPoint(hyp.ideal_endpoint_of(z, float(np.angle(u))))


def _newton(residual, x0, tol=SOLVE_TOL, accept=BVP_TOL, max_iter=MAX_NEWTON, max_move=0.5, label="shooting"):
    """
    Damped Newton with a forward-difference Jacobian. `residual` returns an array or None where undefined.
    Returns (x, r) once |r| < tol, or the best iterate if it stagnates below `accept`.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    r = residual(x)
    if r is None:
        raise BvpNoConvergence(f"{label}: residual undefined at the initial guess", np.inf)
    best_x, best_r = x, r
    for iteration in range(max_iter):
        norm = np.max(np.abs(r))
        logger.debug("%s iteration %d: |r| = %.3e", label, iteration, norm)
        if norm < tol:
            return x, r
        jacobian = np.empty((r.size, x.size))
        for k in range(x.size):
            step = np.zeros_like(x)
            step[k] = SHOOT_STEP
            shifted = residual(x + step)
            if shifted is None:
                step[k] = -SHOOT_STEP
                shifted = residual(x + step)
                if shifted is None:
                    break
            jacobian[:, k] = (shifted - r) / step[k]
        else:
            try:
                move = -np.linalg.solve(jacobian, r)
            except np.linalg.LinAlgError:
                break
            move *= min(1.0, max_move / max(np.max(np.abs(move)), 1e-300))
            damping = 1.0
            while damping > 1e-4:
                trial = x + damping * move
                r_trial = residual(trial)
                if r_trial is not None and np.max(np.abs(r_trial)) < norm:
                    break
                damping /= 2.0
            else:
                break
            x, r = trial, r_trial
            if np.max(np.abs(r)) < np.max(np.abs(best_r)):
                best_x, best_r = x, r
            continue
        break
    best = float(np.max(np.abs(best_r)))
    if best < accept:
        return best_x, best_r
    raise BvpNoConvergence(f"{label} did not converge", best)


def _scan_roots(residual, lo, hi, n=SCAN_POINTS):
    """Bisection fallback: brackets sign changes of a scalar angle residual on [lo, hi] and refines them."""
    grid = np.linspace(lo, hi, n + 1)
    values = [residual(np.array([a])) for a in grid]
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fa is None or fb is None or fa[0] * fb[0] > 0.0 or abs(fa[0] - fb[0]) > np.pi:
            continue

        def scalar(t):
            value = residual(np.array([t]))
            if value is None:
                raise ValueError("residual undefined inside bracket")
            return value[0]

        try:
            root = brentq(scalar, a, b, xtol=1e-14)
        except ValueError:
            continue
        roots.append((abs(scalar(root)), root))
    if not roots:
        return None
    return np.array([min(roots)[1]])


def _solve_angle(residual, guess, lo, hi, accept, label):
    try:
        return _newton(residual, guess, accept=accept, label=label)[0]
    except BvpNoConvergence as exc:
        logger.debug("%s: Newton failed (%s), scanning for a bracket", label, exc)
        root = _scan_roots(residual, lo, hi)
        if root is None or np.max(np.abs(residual(root))) >= accept:
            raise
        return root


class _Shot:
    """Geodesic from a start state to its exit from the escape disk, with an optional closed-form prefix."""

    def __init__(self, metric, r1, start, angle, prefix=None):
        self.prefix = prefix
        s0 = prefix.s1 if prefix is not None else 0.0
        v = np.array([np.cos(angle), np.sin(angle)])
        v = v / metric.norm(_vec(start), v)
        segments, exit_state, _, _ = _propagate(metric, start, complex(*v), MAX_INSIDE_LENGTH, r1, s0,
                                                stop_at_exit=True)
        if exit_state is None:
            raise NotEscaped(f"geodesic did not leave the escape disk within length {MAX_INSIDE_LENGTH}")
        self.segments = ([prefix] if prefix is not None else []) + segments
        self.exit = exit_state

    @property
    def exit_point(self):
        return complex(*self.exit.point)

    @property
    def exit_angle(self):
        return float(np.angle(complex(*self.exit.velocity)))


def _entry_state(p, phi, r1):
    """Closed-form segment from the outside point p to the circle point r1 e^(i phi), or None if it arrives
    moving outward."""
    a = r1 * np.exp(1j * phi)
    angle = hyp.direction_to(p, a)
    length = float(hyp.hyp_distance(_vec(p), _vec(a)))
    u = complex(hyp.geodesic_velocity(p, angle, length))
    if (np.conj(a) * u).real >= 0.0:
        return None
    return HyperbolicSegment(p, angle, 0.0, 0.0, length), a, float(np.angle(u))


def _shot_from(metric, r1, p, parameter, outside):
    """Shot parameterized by the entry angle on the escape circle (outside start) or the initial direction."""
    if not outside:
        return _Shot(metric, r1, p, parameter)
    entry = _entry_state(p, parameter, r1)
    if entry is None:
        return None
    prefix, a, angle = entry
    return _Shot(metric, r1, a, angle, prefix)


def _initial_entry_angle(p, angle, r1):
    crossing = hyp.circle_crossings(p, angle, r1)
    return float(np.angle(hyp.exp_map(p, angle, crossing[0])))


def _hyperbolic_path(metric, p, angle, s0, s1, forward_ideal=None):
    segment = HyperbolicSegment(p, angle, 0.0, s0, s1)
    return GeodesicPath(metric, [segment], forward_ideal=forward_ideal)


def distance(metric, p, q):
    """
    Length of the geodesic segment from p to q, and the segment as a GeodesicPath starting at p.
    """
    p, q = as_points(p), as_points(q)
    zp, zq = complex(*p), complex(*q)
    if zp == zq:
        raise ValueError("distance needs distinct points")
    d0 = float(hyp.hyp_distance(p, q))
    angle0 = hyp.direction_to(zp, zq)
    if metric.is_hyperbolic or hyp.min_radius(zp, angle0, 0.0, d0) >= metric.support_radius:
        return d0, _hyperbolic_path(metric, zp, angle0, 0.0, d0)
    r1 = escape_radius(metric)
    p_out = abs(zp) > r1 + _ON_CIRCLE
    q_out = abs(zq) > r1 + _ON_CIRCLE
    if not p_out and not q_out:
        return _distance_inside(metric, p, q, angle0, d0)
    if p_out and not q_out:
        d, path = distance(metric, q, p)
        return d, path.reversed()

    def build(parameter):
        return _shot_from(metric, r1, zp, parameter, p_out)

    def residual(x):
        shot = build(x[0])
        if shot is None:
            return None
        return np.array([wrap_angle(shot.exit_angle - hyp.direction_to(shot.exit_point, zq))])

    guess = _initial_entry_angle(zp, angle0, r1) if p_out else angle0
    centre = float(np.angle(zp)) if p_out else angle0
    solution = _solve_angle(residual, [guess], centre - np.pi, centre + np.pi, ANGLE_TOL, "distance")
    shot = build(solution[0])
    b = shot.exit_point
    tail = float(hyp.hyp_distance(_vec(b), q))
    s_b = shot.exit.s
    segments = shot.segments + [HyperbolicSegment(b, hyp.direction_to(b, zq), s_b, s_b, s_b + tail)]
    path = GeodesicPath(metric, segments, forward_exit=shot.exit)
    logger.debug("distance between %s and %s: %.12g (hyperbolic %.12g)", p, q, path.length, d0)
    return path.length, path


def _distance_inside(metric, p, q, angle0, d0):
    """Both endpoints in the closed escape disk: shooting on (initial angle, length)."""

    def endpoint(x):
        v = np.array([np.cos(x[0]), np.sin(x[0])])
        v = v / metric.norm(p, v)
        segment, _, y, _ = _integrate_numeric(metric, p, v, x[1], 1.0 - CHART_SAFETY)
        return segment, y

    def residual(x):
        if x[1] <= 0.0:
            return None
        return endpoint(x)[1] - q

    x, r = _newton(residual, [angle0, d0], accept=BVP_TOL, label="distance")
    segment, _ = endpoint(x)
    return float(x[1]), GeodesicPath(metric, [segment])


def ray_from(metric, x, xi, tail=TRUNCATION_RADIUS):
    """
    Geodesic ray from x whose forward ideal endpoint is xi. The path carries its forward exit state, beyond which
    it is a g0-ray, and a closed-form tail of the given length after it.
    """
    x = as_points(x)
    z = complex(*x)
    theta = angle_of(xi)
    angle0 = hyp.direction_to_ideal(z, theta)
    if metric.is_hyperbolic or hyp.min_radius(z, angle0) >= metric.support_radius:
        path = _hyperbolic_path(metric, z, angle0, 0.0, tail, IdealPoint(theta))
        path.forward_exit = ExitState(x, _vec(np.exp(1j * angle0)) / metric.norm(x, _vec(np.exp(1j * angle0))), 0.0)
        return path
    r1 = escape_radius(metric)
    outside = abs(z) > r1 + _ON_CIRCLE

    def residual(params):
        shot = _shot_from(metric, r1, z, params[0], outside)
        if shot is None:
            return None
        return np.array([wrap_angle(hyp.ideal_endpoint_of(shot.exit_point, shot.exit_angle) - theta)])

    guess = _initial_entry_angle(z, angle0, r1) if outside else angle0
    centre = float(np.angle(z)) if outside else angle0
    solution = _solve_angle(residual, [guess], centre - np.pi, centre + np.pi, ANGLE_TOL, "ray")
    shot = _shot_from(metric, r1, z, solution[0], outside)
    b, s_b = shot.exit_point, shot.exit.s
    segments = shot.segments + [HyperbolicSegment(b, shot.exit_angle, s_b, s_b, s_b + tail)]
    reached = IdealPoint(hyp.ideal_endpoint_of(b, shot.exit_angle))
    return GeodesicPath(metric, segments, forward_exit=shot.exit, forward_ideal=reached)


def geodesic_between_ideals(metric, xi, eta, truncation_radius_hyp=TRUNCATION_RADIUS):
    """
    The bi-infinite geodesic with backward endpoint eta and forward endpoint xi, truncated where it reaches
    hyperbolic distance truncation_radius_hyp from the origin. Arclength s = 0 at its entry into the escape disk,
    or at its closest point to the origin when it is a g0-geodesic.
    """
    xi, eta = angle_of(xi), angle_of(eta)
    if abs(wrap_angle(xi - eta)) < 1e-12:
        raise DegenerateBoundaryPair(f"ideal points coincide at angle {xi:.12g}")
    m, alpha = hyp.ideal_geodesic(xi, eta)
    far = np.tanh(truncation_radius_hyp / 2.0)
    if metric.is_hyperbolic or abs(m) >= metric.support_radius:
        s_in, s_out = hyp.circle_crossings(m, alpha, far)
        u = _vec(np.exp(1j * alpha)) * (1.0 - abs(m) ** 2) / 2.0
        path = GeodesicPath(metric, [HyperbolicSegment(m, alpha, 0.0, s_in, s_out)],
                            forward_exit=ExitState(_vec(m), u, 0.0), backward_exit=ExitState(_vec(m), -u, 0.0),
                            forward_ideal=IdealPoint(xi), backward_ideal=IdealPoint(eta))
        return path
    r1 = escape_radius(metric)

    def shoot(params):
        phi, beta = params
        if abs(beta) >= np.pi / 2.0:
            return None
        a = r1 * np.exp(1j * phi)
        return a, phi + np.pi + beta, _Shot(metric, r1, a, phi + np.pi + beta)

    def residual(params):
        shot = shoot(params)
        if shot is None:
            return None
        a, angle, forward = shot
        return np.array([wrap_angle(hyp.ideal_endpoint_of(forward.exit_point, forward.exit_angle) - xi),
                         wrap_angle(hyp.ideal_endpoint_of(a, angle + np.pi) - eta)])

    s_in = hyp.circle_crossings(m, alpha, r1)[0]
    a0 = complex(hyp.exp_map(m, alpha, s_in))
    u0 = complex(hyp.geodesic_velocity(m, alpha, s_in))
    phi0 = float(np.angle(a0))
    beta0 = float(wrap_angle(np.angle(u0) - phi0 - np.pi))
    params, _ = _newton(residual, [phi0, beta0], accept=1e-3, label="bi-infinite geodesic")
    a, angle, forward = shoot(params)
    b = forward.exit_point
    recovered_xi = hyp.ideal_endpoint_of(b, forward.exit_angle)
    recovered_eta = hyp.ideal_endpoint_of(a, angle + np.pi)
    mismatch = max(abs(wrap_angle(recovered_xi - xi)), abs(wrap_angle(recovered_eta - eta)))
    if mismatch > ENDPOINT_TOL:
        raise EndpointMismatch(mismatch)
    back = hyp.circle_crossings(a, angle, far)[0]
    s_b = forward.exit.s
    ahead = hyp.circle_crossings(b, forward.exit_angle, far)[1]
    segments = [HyperbolicSegment(a, angle, 0.0, back, 0.0)] + forward.segments \
        + [HyperbolicSegment(b, forward.exit_angle, s_b, s_b, s_b + ahead)]
    u_a = _vec(np.exp(1j * angle)) * (1.0 - r1 ** 2) / 2.0
    return GeodesicPath(metric, segments, forward_exit=forward.exit, backward_exit=ExitState(_vec(a), -u_a, 0.0),
                        forward_ideal=IdealPoint(recovered_xi), backward_ideal=IdealPoint(recovered_eta))


def hyp_distance(p, q):
    """Closed-form hyperbolic distance in the disk model."""
    return float(hyp.hyp_distance(as_points(p), as_points(q)))


def chord(metric, x, v, radius, max_length=MAX_INSIDE_LENGTH):
    """
    Geodesic integrated numerically from x with unit velocity v until it leaves the Euclidean disk of the given
    radius. NotEscaped is raised if it is still inside after max_length.
    """
    x = as_points(x)
    v = np.asarray(v, dtype=float)
    if abs(metric.norm(x, v) - 1.0) > UNIT_SPEED_TOL:
        raise ValueError(f"initial velocity has speed {metric.norm(x, v):.12g}, expected 1")
    segment, exited, y, u = _integrate_numeric(metric, x, v, max_length, radius)
    if not exited:
        raise NotEscaped(f"geodesic from {x} stayed in |x| < {radius:g} for length {max_length:g}")
    return GeodesicPath(metric, [segment], forward_exit=ExitState(y, u, segment.s1))
