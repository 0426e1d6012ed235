import numpy as np
from dataclasses import dataclass

from disk_rigidity.errors import PointOutsideChart

# step of the central differences used when a field has no analytic partials
FD_STEP = 1e-5
TWO_PI = 2.0 * np.pi


def as_points(x):
    """
    Converts array-like input to float points of shape (..., 2) inside the unit disk.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (2,):
        raise ValueError(f"chart points need a trailing axis of length 2, got shape {x.shape}")
    r2 = np.einsum("...i,...i->...", x, x)
    if np.any(r2 >= 1.0):
        raise PointOutsideChart(f"point with |x| = {np.sqrt(np.max(r2)):.12g} is not in the unit disk")
    return x


def central_difference(fun, x, step=FD_STEP):
    """
    Partials of `fun` along both chart axes. The derivative axis is placed right after the point axes.
    """
    x = np.asarray(x, dtype=float)
    parts = []
    for k in range(2):
        e = np.zeros(2)
        e[k] = step
        parts.append((fun(x + e) - fun(x - e)) / (2.0 * step))
    return np.stack(parts, axis=x.ndim - 1)


@dataclass(frozen=True)
class ChartPoint:
    x1: float
    x2: float

    def __post_init__(self):
        if self.x1 ** 2 + self.x2 ** 2 >= 1.0:
            raise PointOutsideChart(f"({self.x1}, {self.x2}) is not in the unit disk")

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x1, self.x2], dtype=dtype or float)


@dataclass(frozen=True)
class IdealPoint:
    """A point of the circle at infinity, stored as its angle in [0, 2pi)."""
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(np.mod(self.theta, TWO_PI)))

    def __float__(self):
        return self.theta


def angle_of(xi):
    return float(np.mod(float(xi), TWO_PI))


def wrap_angle(a):
    """Maps angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), TWO_PI)


class Bump:

    def __init__(self, radius, center=(0.0, 0.0)):
        """
        Smooth bump exp(1 - 1/(1 - |x - c|^2 / radius^2)), zero outside the open disk.

        :param radius: Euclidean radius of the support disk.
        :param center: Chart point at the center of the support.
        """
        assert radius > 0.0
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)

    def parts(self, x):
        d = np.asarray(x, dtype=float) - self.center
        rho2 = np.einsum("...i,...i->...", d, d) / self.radius ** 2
        inside = rho2 < 1.0
        q = np.where(inside, 1.0 - rho2, 1.0)
        psi = np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)
        return d, q, psi

    def value(self, x):
        return self.parts(x)[2]

    def gradient(self, x):
        d, q, psi = self.parts(x)
        return (-2.0 * psi / (self.radius ** 2 * q ** 2))[..., None] * d

    def hessian(self, x):
        d, q, psi = self.parts(x)
        R2 = self.radius ** 2
        dF = (-2.0 / (R2 * q ** 2))[..., None] * d
        ddF = (-2.0 / (R2 * q ** 2))[..., None, None] * np.eye(2) \
            - (8.0 / (R2 ** 2 * q ** 3))[..., None, None] * d[..., :, None] * d[..., None, :]
        return psi[..., None, None] * (dF[..., :, None] * dF[..., None, :] + ddF)


class CompactField:
    """
    Compactly supported field on the chart with optional analytic first and second partials.
    Partials carry the derivative indices first: d_k f[...] and d_k d_l f[...].
    """

    value_shape = ()

    def __init__(self, value, support_radius, gradient=None, hessian=None, name=None):
        """
        :param value: Callable mapping points of shape (..., 2) to values of shape (...,) + value_shape.
        :param support_radius: Euclidean radius of a closed disk containing the support.
        :param gradient: Optional analytic partials; central differences otherwise.
        :param hessian: Optional analytic second partials; differences of the gradient otherwise.
        :param name: Label used in reports.
        """
        assert 0.0 <= support_radius < 1.0, "support radius must lie in [0, 1)"
        self._value = value
        self._gradient = gradient
        self._hessian = hessian
        self.support_radius = float(support_radius)
        self.name = name or type(self).__name__

    @property
    def has_analytic_hessian(self):
        return self._hessian is not None

    def _mask(self, x, out):
        r2 = np.einsum("...i,...i->...", x, x)
        outside = r2 >= self.support_radius ** 2
        extra = out.ndim - outside.ndim
        return np.where(outside.reshape(outside.shape + (1,) * extra), 0.0, out)

    def __call__(self, x):
        x = as_points(x)
        return self._mask(x, self._value(x))

    def gradient(self, x):
        x = as_points(x)
        if self._gradient is None:
            return central_difference(self.__call__, x)
        return self._mask(x, self._gradient(x))

    def hessian(self, x):
        x = as_points(x)
        if self._hessian is None:
            return central_difference(self.gradient, x)
        return self._mask(x, self._hessian(x))

    def _combine(self, other, a, b):
        if not isinstance(other, type(self)):
            return NotImplemented
        first, second = self, other

        def value(x):
            return a * first(x) + b * second(x)

        def gradient(x):
            return a * first.gradient(x) + b * second.gradient(x)

        hessian = None
        if first.has_analytic_hessian and second.has_analytic_hessian:
            def hessian(x):
                return a * first.hessian(x) + b * second.hessian(x)

        return type(self)(value, max(first.support_radius, second.support_radius), gradient, hessian,
                          name=f"{first.name}{'+' if b >= 0 else '-'}{second.name}")

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, scale):
        scale = float(scale)
        field = self
        hessian = (lambda x: scale * field.hessian(x)) if field.has_analytic_hessian else None
        return type(self)(lambda x: scale * field(x), field.support_radius,
                          lambda x: scale * field.gradient(x), hessian, name=f"{scale:g}*{field.name}")

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @classmethod
    def zero(cls, support_radius=0.0):
        shape = cls.value_shape
        return cls(lambda x: np.zeros(np.shape(x)[:-1] + shape), support_radius,
                   lambda x: np.zeros(np.shape(x)[:-1] + (2,) + shape),
                   lambda x: np.zeros(np.shape(x)[:-1] + (2, 2) + shape), name="zero")


class SymTensorField(CompactField):
    value_shape = (2, 2)


class OneFormField(CompactField):
    value_shape = (2,)


def conformal_factor(x):
    """
    The factor c = 4/(1 - |x|^2)^2 of the disk metric with its first and second partials.
    """
    w = 1.0 - np.einsum("...i,...i->...", x, x)
    c = 4.0 / w ** 2
    dc = (16.0 / w ** 3)[..., None] * x
    ddc = (16.0 / w ** 3)[..., None, None] * np.eye(2) \
        + (96.0 / w ** 4)[..., None, None] * x[..., :, None] * x[..., None, :]
    return c, dc, ddc


class MetricField:

    def __init__(self, perturbation=None, scale=1.0, name=None):
        """
        Metric scale * (g0 + h) on the unit-disk chart, g0 the hyperbolic disk metric.

        :param perturbation: Optional SymTensorField h with compact support.
        :param scale: Constant factor; anything but 1 gives a metric that is not a compact perturbation of g0.
        :param name: Label used in reports.
        """
        self.perturbation = perturbation
        self.scale = float(scale)
        self.support_radius = perturbation.support_radius if perturbation is not None else 0.0
        self.name = name or (perturbation.name if perturbation is not None else "hyperbolic")

    @property
    def is_hyperbolic(self):
        return self.perturbation is None and self.scale == 1.0

    @property
    def is_compact_perturbation(self):
        return self.scale == 1.0

    def __call__(self, x):
        return self.matrix(x)

    def matrix(self, x):
        x = as_points(x)
        c = conformal_factor(x)[0]
        g = c[..., None, None] * np.eye(2)
        if self.perturbation is not None:
            g = g + self.perturbation(x)
        return self.scale * g

    def gradient(self, x):
        x = as_points(x)
        dc = conformal_factor(x)[1]
        dg = dc[..., :, None, None] * np.eye(2)
        if self.perturbation is not None:
            dg = dg + self.perturbation.gradient(x)
        return self.scale * dg

    def hessian(self, x):
        x = as_points(x)
        ddc = conformal_factor(x)[2]
        ddg = ddc[..., :, :, None, None] * np.eye(2)
        if self.perturbation is not None:
            ddg = ddg + self.perturbation.hessian(x)
        return self.scale * ddg

    def inverse(self, x):
        return np.linalg.inv(self.matrix(x))

    def sqrt_det(self, x):
        return np.sqrt(np.linalg.det(self.matrix(x)))

    def norm(self, x, u):
        """Length of the chart vectors u at x."""
        return np.sqrt(np.einsum("...ij,...i,...j->...", self.matrix(x), u, u))

    def __repr__(self):
        return f"MetricField({self.name}, support_radius={self.support_radius:g})"


class MetricFamily:

    def __init__(self, metric_at, velocity_at, support_radius, name, inverse_map=None):
        """
        One-parameter family t -> g_t of compact perturbations of g0.

        :param metric_at: Callable t -> MetricField.
        :param velocity_at: Callable t -> SymTensorField, the t-derivative of g_t.
        :param support_radius: Common support radius of g_t - g0 and of the velocities.
        :param name: Family label.
        :param inverse_map: Optional callable (t, x) -> f_t(x) with f_t* g_t = g0, known in closed form.
        """
        self._metric_at = metric_at
        self._velocity_at = velocity_at
        self.support_radius = float(support_radius)
        self.name = name
        self.inverse_map = inverse_map

    def metric(self, t):
        return self._metric_at(float(t))

    def velocity(self, t):
        return self._velocity_at(float(t))

    def __repr__(self):
        return f"MetricFamily({self.name}, support_radius={self.support_radius:g})"
