"""
Closed-form geometry of the Poincare disk model, using complex coordinates z = x1 + i x2.

Chart directions are angles of tangent vectors; since g0 is conformal they are also Riemannian angles.
"""
import numpy as np

from disk_rigidity.geometry.fields import angle_of, wrap_angle


def to_complex(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0] + 1j * x[..., 1]


def to_point(z):
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1)


def mobius(a, z):
    """The disk isometry z -> (z + a)/(1 + conj(a) z) sending 0 to a."""
    return (z + a) / (1.0 + np.conj(a) * z)


def hyp_distance(p, q):
    z, w = to_complex(p), to_complex(q)
    return 2.0 * np.arctanh(np.abs(z - w) / np.abs(1.0 - np.conj(z) * w))


def conformal_speed(z):
    """The factor 2/(1 - |z|^2) converting Euclidean speed into hyperbolic speed."""
    return 2.0 / (1.0 - np.abs(z) ** 2)


def exp_map(p, angle, s):
    """Point at signed arclength s from p along the geodesic leaving p in chart direction `angle`."""
    return mobius(p, np.tanh(np.asarray(s) / 2.0) * np.exp(1j * angle))


def geodesic_velocity(p, angle, s):
    """Unit-speed chart velocity, as a complex number, of exp_map(p, angle, s)."""
    s = np.asarray(s, dtype=float)
    w = np.tanh(s / 2.0) * np.exp(1j * angle)
    return (1.0 - abs(p) ** 2) / (1.0 + np.conj(p) * w) ** 2 * 0.5 / np.cosh(s / 2.0) ** 2 * np.exp(1j * angle)


def direction_to(p, q):
    """Chart angle at p of the geodesic from p to q."""
    return float(np.angle(mobius(-p, q)))


def direction_to_ideal(p, theta):
    """Chart angle at p of the geodesic ray from p to the ideal point theta."""
    return float(np.angle(mobius(-p, np.exp(1j * theta))))


def ideal_endpoint_of(p, angle):
    """Forward ideal endpoint of the geodesic leaving p in chart direction `angle`."""
    return angle_of(np.angle(mobius(p, np.exp(1j * angle))))


def busemann0(theta, z):
    """Busemann function of g0 normalized at the origin: lim d(z, a) - d(0, a) as a -> theta."""
    z = np.asarray(z, dtype=complex)
    return np.log(np.abs(np.exp(1j * theta) - z) ** 2 / (1.0 - np.abs(z) ** 2))


def gromov_product_at_origin(xi, eta):
    return -np.log(np.sin(abs(wrap_angle(xi - eta)) / 2.0))


def ideal_geodesic(xi, eta):
    """
    Closest point to the origin of the geodesic with ideal endpoints eta (backward) and xi (forward), and its
    chart direction towards xi.
    """
    delta = wrap_angle(xi - eta)
    middle = eta + delta / 2.0
    m = np.tan(np.pi / 4.0 - abs(delta) / 4.0) * np.exp(1j * middle)
    return complex(m), direction_to_ideal(m, xi)


def _radial_coefficients(p, angle):
    # cosh d(0, exp_map(p, angle, s)) = A cosh s + B sinh s
    r = abs(p)
    A = (1.0 + r * r) / (1.0 - r * r)
    B = 2.0 * r / (1.0 - r * r) * (np.cos(angle - np.angle(p)) if r > 0.0 else 0.0)
    return A, B


def circle_crossings(p, angle, radius):
    """
    Signed arclengths (s_in, s_out) at which the geodesic through p in direction `angle` crosses the Euclidean
    circle |z| = radius, or None if it misses the circle.
    """
    A, B = _radial_coefficients(p, angle)
    C = (1.0 + radius ** 2) / (1.0 - radius ** 2)
    disc = C * C - A * A + B * B
    if disc < 0.0:
        return None
    root = np.sqrt(disc)
    return float(np.log((C - root) / (A + B))), float(np.log((C + root) / (A + B)))


def min_radius(p, angle, s_start=0.0, s_end=np.inf):
    """Smallest Euclidean radius reached by exp_map(p, angle, s) for s in [s_start, s_end]."""
    A, B = _radial_coefficients(p, angle)
    s_star = float(np.clip(np.arctanh(-B / A), s_start, s_end))
    cosh_rho = A * np.cosh(s_star) + B * np.sinh(s_star)
    return float(np.tanh(np.arccosh(max(cosh_rho, 1.0)) / 2.0))
