"""
Pointwise differential-geometric operators on the disk chart and polar-grid quadrature.

All operators are vectorized over leading point axes: x has shape (..., 2).
"""
import logging
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from disk_rigidity.errors import HypothesisViolation
from disk_rigidity.geometry.fields import OneFormField, SymTensorField, as_points, conformal_factor

logger = logging.getLogger(__name__)

CURVATURE_SLACK = 1e-6
N_RADIAL = 96
N_ANGULAR = 192

QuadratureResult = namedtuple("QuadratureResult", ["value", "error"])


def _lowered_christoffel(dg):
    # Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    return 0.5 * (np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg)


def christoffel(field, x):
    """
    Christoffel symbols of the second kind, returned as Gamma[..., k, i, j] = Gamma^k_ij.
    """
    x = as_points(x)
    g_inv = field.inverse(x)
    return np.einsum("...kl,...lij->...kij", g_inv, _lowered_christoffel(field.gradient(x)))


def christoffel_gradient(field, x):
    """
    Partials d_m Gamma^k_ij, returned with the derivative index first: [..., m, k, i, j].
    """
    x = as_points(x)
    g_inv = field.inverse(x)
    dg = field.gradient(x)
    ddg = field.hessian(x)
    lowered = _lowered_christoffel(dg)
    d_lowered = 0.5 * (np.einsum("...mijl->...mlij", ddg) + np.einsum("...mjil->...mlij", ddg) - ddg)
    d_inv = -np.einsum("...ka,...mab,...bl->...mkl", g_inv, dg, g_inv)
    return np.einsum("...mkl,...lij->...mkij", d_inv, lowered) + np.einsum("...kl,...mlij->...mkij", g_inv, d_lowered)


def gaussian_curvature(field, x):
    x = as_points(x)
    g = field.matrix(x)
    ddg = field.hessian(x)
    gamma = christoffel(field, x)
    second = 0.5 * (ddg[..., 1, 0, 0, 1] + ddg[..., 0, 1, 1, 0] - ddg[..., 1, 1, 0, 0] - ddg[..., 0, 0, 1, 1])
    quadratic = np.einsum("...np,...n,...p->...", g, gamma[..., :, 1, 0], gamma[..., :, 0, 1]) \
        - np.einsum("...np,...n,...p->...", g, gamma[..., :, 1, 1], gamma[..., :, 0, 0])
    return (second + quadratic) / np.linalg.det(g)


@dataclass
class CurvatureReport:
    max_curvature: float
    worst_point: tuple
    bound: float
    passed: bool
    n_points: int


def polar_sample_grid(radius, resolution):
    """Points of a polar grid on the closed disk of the given radius, origin included once."""
    radii = np.linspace(0.0, radius, resolution + 1)[1:]
    angles = np.linspace(0.0, 2.0 * np.pi, 2 * resolution, endpoint=False)
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    ring = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2)
    return np.vstack([np.zeros((1, 2)), ring])


def verify_curvature_bound(field, grid_resolution=32, margin=0.0, slack=CURVATURE_SLACK, raise_on_failure=True):
    """
    Samples K on a polar grid covering the support disk and compares the maximum against -1 + margin.

    :param field: MetricField to check.
    :param grid_resolution: Number of radial rings; twice as many angles are used.
    :param margin: Allowed excess over -1.
    :param slack: Rounding allowance added to the bound.
    :param raise_on_failure: Raise HypothesisViolation instead of returning a failed report.
    """
    assert grid_resolution > 0 and margin >= 0.0
    radius = field.support_radius if field.support_radius > 0.0 else 0.5
    points = polar_sample_grid(radius, grid_resolution)
    curvature = gaussian_curvature(field, points)
    worst = int(np.argmax(curvature))
    bound = -1.0 + margin
    report = CurvatureReport(float(curvature[worst]), tuple(points[worst]), bound,
                             bool(curvature[worst] <= bound + slack), len(points))
    logger.debug("curvature check on %s: max K = %.9g at %s", field.name, report.max_curvature, report.worst_point)
    if not report.passed and raise_on_failure:
        logger.warning("curvature bound violated for %s", field.name)
        raise HypothesisViolation(report.worst_point, report.max_curvature, bound)
    return report


def sym_derivative(field, v):
    """
    The symmetrized covariant derivative (d v)_ij = nabla_i v_j + nabla_j v_i, i.e. the Lie derivative of
    the metric along the dual vector field of v.
    """

    def value(x):
        dv = v.gradient(x)
        gamma = christoffel(field, x)
        return dv + np.swapaxes(dv, -1, -2) - 2.0 * np.einsum("...kij,...k->...ij", gamma, v(x))

    def gradient(x):
        ddv = v.hessian(x)
        dv = v.gradient(x)
        gamma = christoffel(field, x)
        d_gamma = christoffel_gradient(field, x)
        sym = ddv + np.swapaxes(ddv, -1, -2)
        return sym - 2.0 * np.einsum("...mkij,...k->...mij", d_gamma, v(x)) \
            - 2.0 * np.einsum("...kij,...mk->...mij", gamma, dv)

    return SymTensorField(value, v.support_radius, gradient, name=f"d({v.name})")


def divergence(field, f):
    """
    (delta f)_j = -2 g^ik nabla_i f_kj, the L2 adjoint of sym_derivative for compactly supported arguments.
    """

    def value(x):
        df = f.gradient(x)
        fx = f(x)
        gamma = christoffel(field, x)
        g_inv = field.inverse(x)
        nabla = df - np.einsum("...mik,...mj->...ikj", gamma, fx) - np.einsum("...mij,...km->...ikj", gamma, fx)
        return -2.0 * np.einsum("...ik,...ikj->...j", g_inv, nabla)

    return OneFormField(value, f.support_radius, name=f"delta({f.name})")


def polar_quadrature(fun, radius, n_radial=N_RADIAL, n_angular=N_ANGULAR, split=None):
    """
    Integral of fun over the Euclidean disk |x| < radius with the chart measure dx1 dx2.

    Gauss-Legendre in r (one panel per side of `split`) and the trapezoid rule in the angle, which is
    spectrally accurate for periodic integrands. The error estimate compares with half resolution.
    """

    def rule(nr, na):
        edges = [0.0, radius] if split is None or not 0.0 < split < radius else [0.0, split, radius]
        nodes, weights = np.polynomial.legendre.leggauss(nr)
        radii, radial_w = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            radii.append(0.5 * (b - a) * nodes + 0.5 * (b + a))
            radial_w.append(0.5 * (b - a) * weights)
        radii = np.concatenate(radii)
        radial_w = np.concatenate(radial_w) * radii
        angles = np.linspace(0.0, 2.0 * np.pi, na, endpoint=False)
        rr, aa = np.meshgrid(radii, angles, indexing="ij")
        points = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1)
        values = fun(points)
        return float(np.sum(values * radial_w[:, None]) * 2.0 * np.pi / na)

    fine = rule(n_radial, n_angular)
    coarse = rule(n_radial // 2, n_angular // 2)
    return QuadratureResult(fine, abs(fine - coarse))


def volume(field, radius, n_radial=N_RADIAL, n_angular=N_ANGULAR):
    """Riemannian area of the Euclidean disk |x| < radius."""
    assert 0.0 < radius < 1.0
    return polar_quadrature(field.sqrt_det, radius, n_radial, n_angular, split=field.support_radius)


def l2_inner(field, u, w, radius, n_radial=N_RADIAL, n_angular=N_ANGULAR):
    """
    (u, w) = integral of g^ik g^jl u_ij w_kl dVol_g over |x| < radius. u and w are any callables returning
    symmetric matrices, so a MetricField may stand in for its own tensor.
    """
    assert 0.0 < radius < 1.0

    def density(x):
        g = field.matrix(x)
        g_inv = np.linalg.inv(g)
        pairing = np.einsum("...ik,...jl,...ij,...kl->...", g_inv, g_inv, u(x), w(x))
        return pairing * np.sqrt(np.linalg.det(g))

    split = max(getattr(u, "support_radius", 0.0), getattr(w, "support_radius", 0.0), field.support_radius)
    return polar_quadrature(density, radius, n_radial, n_angular, split=split)


def trace_integral(field, f, radius, n_radial=N_RADIAL, n_angular=N_ANGULAR):
    """Integral of tr_g f dVol_g over |x| < radius."""

    def density(x):
        g = field.matrix(x)
        return np.einsum("...ij,...ij->...", np.linalg.inv(g), f(x)) * np.sqrt(np.linalg.det(g))

    return polar_quadrature(density, radius, n_radial, n_angular, split=getattr(f, "support_radius", None))


def deformation_norms(metric, resolution=48):
    """
    Sup norms of h = g - g0 and of its coordinate partials, both measured with g0, on the support disk.
    """
    if metric.perturbation is None:
        return {"c0": 0.0, "c1": 0.0}
    points = polar_sample_grid(metric.support_radius, resolution)
    g0_inv = (1.0 / conformal_factor(points)[0])[..., None, None] * np.eye(2)
    h = metric.perturbation(points)
    dh = metric.perturbation.gradient(points)
    c0 = np.sqrt(np.einsum("...ia,...jb,...ij,...ab->...", g0_inv, g0_inv, h, h))
    c1 = np.sqrt(np.einsum("...kc,...ia,...jb,...kij,...cab->...", g0_inv, g0_inv, g0_inv, dh, dh))
    return {"c0": float(np.max(c0)), "c1": float(np.max(c1))}
