"""
Geodesic ray transform of symmetric 2-tensors along bi-infinite geodesics and along chords of a CDRM disk.
"""
import logging
from dataclasses import dataclass

import numpy as np

from disk_rigidity.analysis import decomposition
from disk_rigidity.errors import HypothesisViolation, NotEntrySphere
from disk_rigidity.geometry.fields import angle_of, as_points
from disk_rigidity.geometry.geodesics import (MAX_INSIDE_LENGTH, TRUNCATION_RADIUS, chord, geodesic_between_ideals,
                                              integrate_ivp)
from disk_rigidity.geometry.operators import christoffel, sym_derivative

logger = logging.getLogger(__name__)

KERNEL_TOL = 1e-6
ENTRY_TOL = 1e-9
BOUNDARY_TOL = 1e-9
N_BOUNDARY = 32
N_DIRECTION = 16
FLOOR_FACTOR = 10.0


@dataclass
class RayTransformValue:
    value: float
    ray: tuple
    error: float = 0.0


class CdrmDisk:

    def __init__(self, metric, radius, max_length=MAX_INSIDE_LENGTH):
        """
        Closed Euclidean disk |x| <= radius around the support of a metric, used as a compact manifold with
        strictly convex boundary.

        :param metric: MetricField whose perturbation is supported strictly inside the disk.
        :param radius: Euclidean radius r_M in (support radius, 1).
        :param max_length: Cap on the length of any chord.
        """
        if not metric.support_radius < radius < 1.0:
            raise ValueError(f"disk radius {radius} must lie in ({metric.support_radius}, 1)")
        self.metric = metric
        self.radius = float(radius)
        self.max_length = float(max_length)

    def boundary_point(self, angle):
        angle = np.asarray(angle, dtype=float)
        return self.radius * np.stack([np.cos(angle), np.sin(angle)], axis=-1)

    def normal(self, angle):
        """Outward g-unit normal at the boundary point of the given angle."""
        x = self.boundary_point(angle)
        n = np.einsum("...ij,...j->...i", self.metric.inverse(x), x)
        return n / self.metric.norm(x, n)[..., None]

    def tangent(self, angle):
        """Counterclockwise g-unit tangent, g-orthogonal to the normal."""
        angle = np.asarray(angle, dtype=float)
        x = self.boundary_point(angle)
        nu = self.normal(angle)
        t = np.stack([-np.sin(angle), np.cos(angle)], axis=-1)
        t = t - np.einsum("...ij,...i,...j->...", self.metric.matrix(x), t, nu)[..., None] * nu
        return t / self.metric.norm(x, t)[..., None]

    def outward_component(self, x, direction):
        x = np.asarray(x, dtype=float)
        nu = self.normal(np.arctan2(x[..., 1], x[..., 0]))
        return np.einsum("...ij,...i,...j->...", self.metric.matrix(x), direction, nu)

    def geodesic_curvature(self, angles):
        """Geodesic curvature of the boundary circle with respect to the inward normal."""
        angles = np.asarray(angles, dtype=float)
        x = self.boundary_point(angles)
        velocity = self.radius * np.stack([-np.sin(angles), np.cos(angles)], axis=-1)
        acceleration = -x + np.einsum("...kij,...i,...j->...k", christoffel(self.metric, x), velocity, velocity)
        g = self.metric.matrix(x)
        speed2 = np.einsum("...ij,...i,...j->...", g, velocity, velocity)
        return -np.einsum("...ij,...i,...j->...", g, acceleration, self.normal(angles)) / speed2

    def check_convexity(self, n=64):
        angles = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        curvature = self.geodesic_curvature(angles)
        worst = int(np.argmin(curvature))
        if curvature[worst] <= 0.0:
            logger.warning("boundary of the disk of radius %g is not strictly convex", self.radius)
            raise HypothesisViolation(tuple(self.boundary_point(angles[worst])), float(curvature[worst]), 0.0)
        return float(curvature[worst])

    def state(self, angle, beta):
        """Boundary point and unit direction making angle beta with the outward normal, beta in [-pi/2, pi/2]."""
        return self.boundary_point(angle), np.cos(beta) * self.normal(angle) + np.sin(beta) * self.tangent(angle)

    def entry_grid(self, n_boundary=N_BOUNDARY, n_direction=N_DIRECTION):
        angles = np.linspace(0.0, 2.0 * np.pi, n_boundary, endpoint=False)
        betas = -np.pi / 2.0 + (np.arange(n_direction) + 0.5) * np.pi / n_direction
        return angles, betas

    def sample_entries(self, rng, n):
        return list(zip(rng.uniform(0.0, 2.0 * np.pi, n), rng.uniform(-np.pi / 2.0, np.pi / 2.0, n)))

    def _check_entry(self, x, direction):
        x = as_points(x)
        if abs(np.hypot(*x) - self.radius) > BOUNDARY_TOL:
            raise ValueError(f"{x} is not on the boundary circle of radius {self.radius}")
        component = float(self.outward_component(x, direction))
        if component < -ENTRY_TOL:
            raise NotEntrySphere(f"direction {direction} points into the disk (normal component {component:.3e})")
        return x, component

    def inward_chord(self, x, direction):
        """
        The maximal geodesic arriving at the boundary point x with velocity `direction`, traversed backwards from
        x; None for a tangential direction.
        """
        x, component = self._check_entry(x, direction)
        if component <= ENTRY_TOL:
            return None
        return chord(self.metric, x, -np.asarray(direction, dtype=float), self.radius, self.max_length)

    def exit_time(self, x, direction):
        """tau_-(x, direction) <= 0: the arclength at which the chord ending at x entered the disk."""
        path = self.inward_chord(x, direction)
        return 0.0 if path is None else -path.length

    def extension(self, x, direction):
        """Forward and backward ideal endpoints of the complete geodesic through the chord ending at x."""
        path = self.inward_chord(x, direction)
        forward = integrate_ivp(self.metric, x, direction, TRUNCATION_RADIUS).forward_ideal
        if path is None:
            backward = integrate_ivp(self.metric, x, -np.asarray(direction), TRUNCATION_RADIUS).forward_ideal
        else:
            entry = path.forward_exit
            velocity = entry.velocity / self.metric.norm(entry.point, entry.velocity)
            backward = integrate_ivp(self.metric, entry.point, velocity, TRUNCATION_RADIUS).forward_ideal
        return forward.theta, backward.theta


def ray_transform(metric, f, xi, eta):
    """
    I(f)(xi, eta): integral of f(gamma', gamma') along the g-geodesic from eta to xi, restricted to the
    support of f.
    """
    path = geodesic_between_ideals(metric, xi, eta)
    result = path.integrate_tensor(f)
    logger.debug("ray transform of %s over (%.6g, %.6g): %.12g", f.name, xi, eta, result.value)
    return RayTransformValue(result.value, (angle_of(xi), angle_of(eta)), result.error)


def cdrm_ray_transform(M, f, x, xi_dir):
    """Integral of f(gamma', gamma') over [tau_-(x, xi_dir), 0] along the chord of M ending at (x, xi_dir)."""
    path = M.inward_chord(x, xi_dir)
    ray = (tuple(np.asarray(x, dtype=float)), tuple(np.asarray(xi_dir, dtype=float)))
    if path is None:
        return RayTransformValue(0.0, ray, 0.0)
    result = path.integrate_tensor(f)
    return RayTransformValue(result.value, ray, result.error)


@dataclass
class Sinogram:
    angles: np.ndarray
    betas: np.ndarray
    values: np.ndarray

    def rows(self):
        return [(a, b, self.values[i, j]) for i, a in enumerate(self.angles) for j, b in enumerate(self.betas)]


def cdrm_sinogram(M, f, n_boundary=N_BOUNDARY, n_direction=N_DIRECTION):
    """I_M(f) tabulated over the entry grid (boundary angle x angle to the outward normal)."""
    angles, betas = M.entry_grid(n_boundary, n_direction)
    values = np.zeros((len(angles), len(betas)))
    for i, angle in enumerate(angles):
        for j, beta in enumerate(betas):
            values[i, j] = cdrm_ray_transform(M, f, *M.state(angle, beta)).value
    return Sinogram(angles, betas, values)


@dataclass
class KernelCheck:
    rays: list
    values: np.ndarray
    tolerance: float

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0

    @property
    def passed(self):
        return self.max_abs <= self.tolerance


def potential_kernel_check(metric, v, rays, tol=KERNEL_TOL):
    """max |I(d v)| over the given (xi, eta) rays."""
    f = sym_derivative(metric, v)
    values = np.array([ray_transform(metric, f, xi, eta).value for xi, eta in rays])
    check = KernelCheck(list(rays), values, tol)
    logger.info("kernel check of %s over %d rays: max |I| = %.3e", v.name, len(values), check.max_abs)
    return check


@dataclass
class KernelInverseCheck:
    ray_max: float
    s_norm: float
    s_relative: float
    floor: float
    ray_tol: float = KERNEL_TOL

    @property
    def ray_vanishes(self):
        return self.ray_max <= self.ray_tol

    @property
    def solenoidal_vanishes(self):
        return self.s_relative <= FLOOR_FACTOR * self.floor

    @property
    def verdict(self):
        if self.ray_vanishes:
            return "potential" if self.solenoidal_vanishes else "kernel violated"
        return "not potential" if not self.solenoidal_vanishes else "unconstrained"

    @property
    def consistent(self):
        return not (self.ray_vanishes and not self.solenoidal_vanishes)


def kernel_inverse_probe(M, f, entries, n_radial=None, n_angular=None, floor=None):
    """
    Compares max |I_M(f)| over the given (boundary angle, beta) entries with the solenoidal part of f: a
    vanishing ray transform has to come with a solenoidal part at the grid floor.
    """
    n_radial = n_radial or decomposition.N_RADIAL
    n_angular = n_angular or decomposition.N_ANGULAR
    ray_max = max((abs(cdrm_ray_transform(M, f, *M.state(a, b)).value) for a, b in entries), default=0.0)
    result = decomposition.solenoidal_decompose(M, f, n_radial, n_angular)
    if floor is None:
        floor = decomposition.grid_floor(M, n_radial, n_angular)
    outcome = KernelInverseCheck(ray_max, result.s_norm, result.s_relative, floor)
    logger.info("kernel inverse check of %s: max |I_M| = %.3e, |s|/|f| = %.3e (floor %.3e): %s", f.name, ray_max,
                result.s_relative, floor, outcome.verdict)
    return outcome
