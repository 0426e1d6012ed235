"""
Built-in perturbations of the hyperbolic disk metric and one-parameter families of metrics.
"""
import numpy as np

from disk_rigidity.geometry.fields import (Bump, MetricFamily, MetricField, OneFormField, SymTensorField,
                                           conformal_factor)
from disk_rigidity.geometry.operators import sym_derivative

FAMILIES = ("constant", "conformal", "shrinking", "anisotropic", "potential", "twist")


def hyperbolic_metric():
    return MetricField()


def conformal_bump(amplitude, support_radius):
    """h = amplitude * psi * g0."""
    bump = Bump(support_radius)

    def value(x):
        c = conformal_factor(x)[0]
        return (amplitude * bump.value(x) * c)[..., None, None] * np.eye(2)

    def gradient(x):
        c, dc, _ = conformal_factor(x)
        d = bump.gradient(x) * c[..., None] + bump.value(x)[..., None] * dc
        return amplitude * d[..., :, None, None] * np.eye(2)

    def hessian(x):
        c, dc, ddc = conformal_factor(x)
        dpsi = bump.gradient(x)
        dd = bump.hessian(x) * c[..., None, None] + dpsi[..., :, None] * dc[..., None, :] \
            + dc[..., :, None] * dpsi[..., None, :] + bump.value(x)[..., None, None] * ddc
        return amplitude * dd[..., :, :, None, None] * np.eye(2)

    return SymTensorField(value, support_radius, gradient, hessian, name=f"conformal({amplitude:g})")


def anisotropic_bump(amplitude, support_radius):
    """Traceless h = amplitude * psi * (dx1 dx1 - dx2 dx2)."""
    bump = Bump(support_radius)
    sigma = np.diag([1.0, -1.0])

    return SymTensorField(
        lambda x: amplitude * bump.value(x)[..., None, None] * sigma,
        support_radius,
        lambda x: amplitude * bump.gradient(x)[..., :, None, None] * sigma,
        lambda x: amplitude * bump.hessian(x)[..., :, :, None, None] * sigma,
        name=f"anisotropic({amplitude:g})")


def bump_one_form(components, center, radius):
    """v = psi_c * a for a constant covector a and a bump centered at c."""
    a = np.asarray(components, dtype=float)
    bump = Bump(radius, center)
    support = float(np.hypot(*bump.center)) + radius
    return OneFormField(
        lambda x: bump.value(x)[..., None] * a,
        support,
        lambda x: bump.gradient(x)[..., :, None] * a,
        lambda x: bump.hessian(x)[..., :, :, None] * a,
        name="bump_form")


def random_bump_one_form(rng, support_radius):
    """Bump 1-form with random amplitude, center and radius, supported in the disk of the given radius."""
    radius = rng.uniform(0.3, 0.6) * support_radius
    offset = rng.uniform(0.0, support_radius - radius)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    center = offset * np.array([np.cos(angle), np.sin(angle)])
    return bump_one_form(rng.normal(size=2), center, radius)


def rotate(x, angle):
    cos, sin = np.cos(angle), np.sin(angle)
    return np.stack([cos * x[..., 0] - sin * x[..., 1], sin * x[..., 0] + cos * x[..., 1]], axis=-1)


def twist_map(alpha, support_radius):
    """The compactly supported diffeomorphism x -> R(alpha * psi(x)) x."""
    bump = Bump(support_radius)
    return lambda x: rotate(np.asarray(x, dtype=float), alpha * bump.value(x))


# second partials of A = x_perp x^T + x x_perp^T, constant in x
_DDA = np.array([[[[0.0, 2.0], [2.0, 0.0]], [[-2.0, 0.0], [0.0, 2.0]]],
                 [[[-2.0, 0.0], [0.0, 2.0]], [[0.0, -2.0], [-2.0, 0.0]]]])


def _twist_tensor(alpha, support_radius, linear, quadratic):
    """
    c * (linear * w * A + quadratic * w^2 * Q) where alpha * grad(psi) = w x, A = x_perp x^T + x x_perp^T and
    Q = |x|^2 x x^T. With (linear, quadratic) = (t, t^2) this is the pullback of g0 by the twist with angle
    t * alpha * psi minus g0; with (1, 2t) it is its t-derivative.
    """
    bump = Bump(support_radius)
    R2 = support_radius ** 2
    eye = np.eye(2)

    def parts(x):
        _, q, psi = bump.parts(x)
        # w = -(2 alpha / R2) * psi * u with u = q^-2
        u = 1.0 / q ** 2
        du = (4.0 / (R2 * q ** 3))[..., None] * x
        dpsi = bump.gradient(x)
        w = -2.0 * alpha * psi * u / R2
        dw = -(2.0 * alpha / R2) * (dpsi * u[..., None] + psi[..., None] * du)
        X, Y = x[..., 0], x[..., 1]
        r2 = X ** 2 + Y ** 2
        A = np.stack([np.stack([-2 * X * Y, X ** 2 - Y ** 2], -1), np.stack([X ** 2 - Y ** 2, 2 * X * Y], -1)], -2)
        dA = np.stack([
            np.stack([np.stack([-2 * Y, 2 * X], -1), np.stack([2 * X, 2 * Y], -1)], -2),
            np.stack([np.stack([-2 * X, -2 * Y], -1), np.stack([-2 * Y, 2 * X], -1)], -2)], -3)
        outer = x[..., :, None] * x[..., None, :]
        Q = r2[..., None, None] * outer
        # B[l, i, j] = delta_li x_j + delta_lj x_i
        B = eye[:, :, None] * x[..., None, None, :] + eye[:, None, :] * x[..., None, :, None]
        dQ = 2.0 * x[..., :, None, None] * outer[..., None, :, :] + r2[..., None, None, None] * B
        return w, dw, A, dA, Q, dQ, (q, u, du, psi, dpsi, B, r2, outer)

    def second_parts(x, extra):
        q, u, du, psi, dpsi, B, r2, outer = extra
        ddu = (4.0 / (R2 * q ** 3))[..., None, None] * eye \
            + (24.0 / (R2 ** 2 * q ** 4))[..., None, None] * outer
        ddw = -(2.0 * alpha / R2) * (bump.hessian(x) * u[..., None, None] + dpsi[..., :, None] * du[..., None, :]
                                     + du[..., :, None] * dpsi[..., None, :] + psi[..., None, None] * ddu)
        ddQ = 2.0 * eye[:, :, None, None] * outer[..., None, None, :, :] \
            + 2.0 * x[..., :, None, None, None] * B[..., None, :, :, :] \
            + 2.0 * x[..., None, :, None, None] * B[..., :, None, :, :] \
            + r2[..., None, None, None, None] * (eye[:, None, :, None] * eye[None, :, None, :]
                                                 + eye[:, None, None, :] * eye[None, :, :, None])
        return ddw, ddQ

    def inner_terms(w, dw, A, dA, Q, dQ):
        inner = (linear * w)[..., None, None] * A + (quadratic * w ** 2)[..., None, None] * Q
        d_inner = linear * (dw[..., :, None, None] * A[..., None, :, :] + w[..., None, None, None] * dA) \
            + quadratic * (2.0 * (w[..., None] * dw)[..., :, None, None] * Q[..., None, :, :]
                           + (w ** 2)[..., None, None, None] * dQ)
        return inner, d_inner

    def value(x):
        c = conformal_factor(x)[0]
        w, _, A, _, Q, _, _ = parts(x)
        inner = (linear * w)[..., None, None] * A + (quadratic * w ** 2)[..., None, None] * Q
        return c[..., None, None] * inner

    def gradient(x):
        c, dc, _ = conformal_factor(x)
        w, dw, A, dA, Q, dQ, _ = parts(x)
        inner, d_inner = inner_terms(w, dw, A, dA, Q, dQ)
        return dc[..., :, None, None] * inner[..., None, :, :] + c[..., None, None, None] * d_inner

    def hessian(x):
        c, dc, ddc = conformal_factor(x)
        w, dw, A, dA, Q, dQ, extra = parts(x)
        ddw, ddQ = second_parts(x, extra)
        inner, d_inner = inner_terms(w, dw, A, dA, Q, dQ)
        w4 = w[..., None, None, None, None]
        dw_dw = dw[..., :, None] * dw[..., None, :]
        dd_inner = linear * (ddw[..., :, :, None, None] * A[..., None, None, :, :]
                             + dw[..., :, None, None, None] * dA[..., None, :, :, :]
                             + dw[..., None, :, None, None] * dA[..., :, None, :, :]
                             + w4 * _DDA) \
            + quadratic * (2.0 * (dw_dw + w[..., None, None] * ddw)[..., :, :, None, None] * Q[..., None, None, :, :]
                           + 2.0 * w4 * (dw[..., :, None, None, None] * dQ[..., None, :, :, :]
                                         + dw[..., None, :, None, None] * dQ[..., :, None, :, :])
                           + (w ** 2)[..., None, None, None, None] * ddQ)
        return ddc[..., :, :, None, None] * inner[..., None, None, :, :] \
            + dc[..., :, None, None, None] * d_inner[..., None, :, :, :] \
            + dc[..., None, :, None, None] * d_inner[..., :, None, :, :] \
            + c[..., None, None, None, None] * dd_inner

    return SymTensorField(value, support_radius, gradient, hessian, name=f"twist({alpha:g})")


def twist_pullback(alpha, support_radius):
    """phi* g0 - g0 for the twist phi = twist_map(alpha, support_radius)."""
    return _twist_tensor(alpha, support_radius, 1.0, 1.0)


def constant_family(support_radius=0.5):
    zero = SymTensorField.zero(support_radius)
    return MetricFamily(lambda t: hyperbolic_metric(), lambda t: zero, support_radius, "constant",
                        inverse_map=lambda t, x: np.asarray(x, dtype=float))


def linear_family(h, name=None):
    """g_t = g0 + t h."""
    return MetricFamily(lambda t: MetricField(t * h, name=f"{h.name}@{t:g}"), lambda t: h, h.support_radius,
                        name or f"linear({h.name})")


def twist_family(alpha, support_radius):
    """g_t = phi_t* g0 with phi_t the twist of angle t * alpha * psi; f_t = phi_t^-1 is known."""
    bump = Bump(support_radius)

    def inverse_map(t, x):
        x = np.asarray(x, dtype=float)
        return rotate(x, -t * alpha * bump.value(x))

    return MetricFamily(
        lambda t: MetricField(_twist_tensor(alpha, support_radius, t, t * t), name=f"twist({alpha:g})@{t:g}"),
        lambda t: _twist_tensor(alpha, support_radius, 1.0, 2.0 * t),
        support_radius, f"twist({alpha:g})", inverse_map=inverse_map)


def potential_form(support_radius):
    """Fixed bump 1-form used by the potential family."""
    return bump_one_form((0.6, -0.4), (0.1 * support_radius, 0.05 * support_radius), 0.75 * support_radius)


def build_family(name, amplitude=0.05, support_radius=0.5, twist=0.6):
    """
    Family from its configuration name.

    :param name: One of FAMILIES.
    :param amplitude: Bump amplitude for the linear families.
    :param support_radius: Euclidean support radius r0.
    :param twist: Twist amplitude alpha of the pullback family.
    """
    if name == "constant":
        return constant_family(support_radius)
    if name == "conformal":
        return linear_family(conformal_bump(amplitude, support_radius), "conformal")
    if name == "shrinking":
        return linear_family(conformal_bump(-amplitude, support_radius), "shrinking")
    if name == "anisotropic":
        return linear_family(anisotropic_bump(amplitude, support_radius), "anisotropic")
    if name == "potential":
        v = potential_form(support_radius)
        return linear_family(amplitude * sym_derivative(hyperbolic_metric(), v), "potential")
    if name == "twist":
        return twist_family(twist, support_radius)
    raise ValueError(f"unknown family '{name}', expected one of {FAMILIES}")
