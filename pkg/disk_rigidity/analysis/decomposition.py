"""
Linear solenoidal decomposition f = s + d v on a CDRM disk, with v = 0 on the boundary circle and delta s = 0.

The disk is discretized on a polar grid: one node at the origin and n_radial rings of n_angular nodes, the last
ring on the boundary. v is found as the least-squares solution of d v = f in the L2 norm of g, i.e. the solution
of the normal equations delta d v = delta f, so s = f - d v is discretely solenoidal.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.interpolate import RectBivariateSpline
from scipy.sparse.linalg import lsqr, spsolve

from disk_rigidity.errors import SolverFailure
from disk_rigidity.geometry.families import bump_one_form
from disk_rigidity.geometry.fields import OneFormField, SymTensorField
from disk_rigidity.geometry.operators import christoffel, sym_derivative

logger = logging.getLogger(__name__)

N_RADIAL = 64
N_ANGULAR = 128
LSQR_TOL = 1e-12
LSQR_ITERATIONS = 100000
DIRECT_TOL = 1e-10
SUPPORT_THRESHOLD = 1e-3
_PAD = 3

# basis of symmetric matrices matching the component order (11, 12, 22)
_BASIS = np.array([[[1.0, 0.0], [0.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]])


class PolarGrid:

    def __init__(self, radius, n_radial=N_RADIAL, n_angular=N_ANGULAR):
        """
        :param radius: Euclidean radius of the disk.
        :param n_radial: Number of rings; the last one lies on the boundary.
        :param n_angular: Nodes per ring; a multiple of 4 so the origin stencil sits on the axes.
        """
        if n_angular % 4 != 0:
            raise ValueError(f"n_angular = {n_angular} must be divisible by 4")
        if n_radial < 3:
            raise ValueError("at least three rings are needed")
        self.radius = float(radius)
        self.n_radial, self.n_angular = int(n_radial), int(n_angular)
        self.h = self.radius / self.n_radial
        self.dtheta = 2.0 * np.pi / self.n_angular
        self.radii = self.h * np.arange(1, self.n_radial + 1)
        self.angles = self.dtheta * np.arange(self.n_angular)
        rr, aa = np.meshgrid(self.radii, self.angles, indexing="ij")
        self.r = np.concatenate([[0.0], rr.ravel()])
        self.theta = np.concatenate([[0.0], aa.ravel()])
        self.points = np.stack([self.r * np.cos(self.theta), self.r * np.sin(self.theta)], axis=-1)
        self.size = 1 + self.n_radial * self.n_angular
        self.n_unknown = 1 + (self.n_radial - 1) * self.n_angular
        self.weights = self._weights()
        # boundary nodes sit up to a rounding error outside the radius
        self.reach = self.radius * (1.0 + 1e-12)

    def node(self, i, j):
        i, j = np.asarray(i), np.asarray(j)
        return np.where(i == 0, 0, 1 + (i - 1) * self.n_angular + np.mod(j, self.n_angular))

    def _weights(self):
        w = self.r * self.h * self.dtheta
        w[0] = np.pi * (self.h / 2.0) ** 2
        w[self.n_unknown:] = (self.radius - self.h / 4.0) * (self.h / 2.0) * self.dtheta
        return w

    def derivative_matrices(self):
        """Sparse matrices of the Cartesian partials d/dx1 and d/dx2 acting on nodal values."""
        n, m, h = self.n_radial, self.n_angular, self.h
        i, j = np.meshgrid(np.arange(1, n + 1), np.arange(m), indexing="ij")
        i, j = i.ravel(), j.ravel()
        rows = self.node(i, j)
        inner, edge = i < n, i == n

        radial = [(rows[inner], self.node(i[inner] + 1, j[inner]), 0.5 / h),
                  (rows[inner], self.node(i[inner] - 1, j[inner]), -0.5 / h),
                  (rows[edge], self.node(n, j[edge]), 1.5 / h),
                  (rows[edge], self.node(n - 1, j[edge]), -2.0 / h),
                  (rows[edge], self.node(n - 2, j[edge]), 0.5 / h)]
        angular = [(rows, self.node(i, j + 1), 0.5 / self.dtheta), (rows, self.node(i, j - 1), -0.5 / self.dtheta)]

        def assemble(stencil):
            r = np.concatenate([s[0] for s in stencil])
            c = np.concatenate([s[1] for s in stencil])
            v = np.concatenate([np.full(len(s[0]), s[2]) for s in stencil])
            return sparse.coo_matrix((v, (r, c)), shape=(self.size, self.size)).tocsr()

        d_r, d_theta = assemble(radial), assemble(angular)
        cos, sin = np.cos(self.theta), np.sin(self.theta)
        inv_r = np.divide(1.0, self.r, out=np.zeros_like(self.r), where=self.r > 0.0)
        quarter = m // 4
        origin_x = sparse.coo_matrix(([0.5 / h, -0.5 / h], ([0, 0], [self.node(1, 0), self.node(1, 2 * quarter)])),
                                     shape=(self.size, self.size))
        origin_y = sparse.coo_matrix(([0.5 / h, -0.5 / h], ([0, 0], [self.node(1, quarter), self.node(1, 3 * quarter)])),
                                     shape=(self.size, self.size))
        px = sparse.diags(cos) @ d_r - sparse.diags(sin * inv_r) @ d_theta + origin_x
        py = sparse.diags(sin) @ d_r + sparse.diags(cos * inv_r) @ d_theta + origin_y
        return px.tocsr(), py.tocsr()

    def table(self, values):
        """Nodal values (size, ...) as a (n_radial + 1, n_angular, ...) table in (r, theta), origin row repeated."""
        values = np.asarray(values)
        rings = values[1:].reshape((self.n_radial, self.n_angular) + values.shape[1:])
        origin = np.repeat(values[:1][None], self.n_angular, axis=1)
        return np.concatenate([origin, rings], axis=0)


def tensor_vector(f_nodes):
    return np.concatenate([f_nodes[:, 0, 0], f_nodes[:, 0, 1], f_nodes[:, 1, 1]])


def tensor_nodes(vector):
    a, b, c = np.split(vector, 3)
    return np.stack([np.stack([a, b], -1), np.stack([b, c], -1)], -2)


class DeformationOperator:

    def __init__(self, metric, grid):
        """
        Discrete d, the Gram forms of the L2 products of g, and the weighted adjoint delta = W_v^-1 D^T W_f.

        :param metric: MetricField g defining d and both inner products.
        :param grid: PolarGrid; v unknowns live on the nodes off the boundary ring.
        """
        self.metric = metric
        self.grid = grid
        points = grid.points
        nu = grid.n_unknown
        g = metric.matrix(points)
        g_inv = np.linalg.inv(g)
        gamma = christoffel(metric, points)
        self.mass = grid.weights * np.sqrt(np.linalg.det(g))

        px, py = grid.derivative_matrices()
        px, py = px[:, :nu], py[:, :nu]

        def chris(k, a, b):
            return sparse.diags(gamma[:, k, a, b]).tocsr()[:, :nu]

        self.D = sparse.bmat([
            [2.0 * px - 2.0 * chris(0, 0, 0), -2.0 * chris(1, 0, 0)],
            [py - 2.0 * chris(0, 0, 1), px - 2.0 * chris(1, 0, 1)],
            [-2.0 * chris(0, 1, 1), 2.0 * py - 2.0 * chris(1, 1, 1)]]).tocsr()

        gram = np.einsum("nik,njl,aij,bkl->nab", g_inv, g_inv, _BASIS, _BASIS)
        self.W_f = sparse.bmat([[sparse.diags(self.mass * gram[:, a, b]) for b in range(3)]
                                for a in range(3)]).tocsr()
        root = np.sqrt(self.mass)[:, None, None] * np.swapaxes(np.linalg.cholesky(gram), -1, -2)
        self.root = sparse.bmat([[sparse.diags(root[:, a, b]) for b in range(3)] for a in range(3)]).tocsr()
        m, gi = self.mass[:nu], g_inv[:nu]
        self.W_v = sparse.bmat([[sparse.diags(m * gi[:, a, b]) for b in range(2)] for a in range(2)]).tocsc()

    def form_nodes(self, vector):
        nu = self.grid.n_unknown
        v = np.zeros((self.grid.size, 2))
        v[:nu, 0], v[:nu, 1] = vector[:nu], vector[nu:]
        return v

    def divergence(self, f_vector):
        return spsolve(self.W_v, self.D.T @ (self.W_f @ f_vector))

    def tensor_norm(self, f_vector):
        return float(np.sqrt(max(f_vector @ (self.W_f @ f_vector), 0.0)))

    def form_norm(self, v_vector):
        return float(np.sqrt(max(v_vector @ (self.W_v @ v_vector), 0.0)))

    def adjointness_defect(self, rng):
        """Relative defect of (D u, F)_f = (u, delta F)_v for random nodal u and F."""
        u = rng.normal(size=2 * self.grid.n_unknown)
        F = rng.normal(size=3 * self.grid.size)
        du = self.D @ u
        lhs = du @ (self.W_f @ F)
        rhs = u @ (self.W_v @ self.divergence(F))
        return float(abs(lhs - rhs) / (self.tensor_norm(du) * self.tensor_norm(F)))

    def dual_norm(self, w):
        """Norm of a covector on the v unknowns, dual to form_norm."""
        return float(np.sqrt(max(w @ spsolve(self.W_v, w), 0.0)))

    def normal_residual(self, v, f_vector):
        """
        Residual of the normal equations D^T W_f D v = D^T W_f f in the dual norm, relative to |f|. For s = f - D v
        it equals |delta s| / |f| up to rounding.
        """
        rhs = self.D.T @ (self.W_f @ f_vector)
        scale = self.tensor_norm(f_vector)
        return self.dual_norm(rhs - self.D.T @ (self.W_f @ (self.D @ v))) / scale if scale > 0.0 else 0.0

    def solve(self, f_vector, solver="direct"):
        """
        Least-squares solution of D v = f in the W_f norm. The direct solver factors the normal equations; it
        falls back to minimum-norm LSQR when they are singular. The reported residual is normal_residual.
        """
        A = self.root @ self.D
        b = self.root @ f_vector
        if solver == "direct":
            normal = (A.T @ A).tocsc()
            rhs = A.T @ b
            v = spsolve(normal, rhs)
            if np.all(np.isfinite(v)):
                check = float(np.linalg.norm(normal @ v - rhs) / max(np.linalg.norm(rhs), 1e-300))
                if check < DIRECT_TOL or not np.any(rhs):
                    residual = self.normal_residual(v, f_vector)
                    logger.debug("direct decomposition solve: normal residual %.3e", residual)
                    return v, {"solver": "direct", "iterations": 0, "residual": residual}
            logger.debug("normal equations singular, switching to LSQR")
        v, istop, itn = lsqr(A, b, atol=LSQR_TOL, btol=LSQR_TOL, conlim=1e14, iter_lim=LSQR_ITERATIONS)[:3]
        info = {"solver": "lsqr", "istop": int(istop), "iterations": int(itn)}
        if istop == 7 or not np.all(np.isfinite(v)):
            logger.warning("LSQR failed: %s", info)
            raise SolverFailure(f"LSQR stopped after {itn} iterations without converging", info)
        info["residual"] = self.normal_residual(v, f_vector)
        logger.debug("lsqr decomposition solve: %s", info)
        return v, info


def _spline_field(grid, nodal, index):
    table = grid.table(nodal[:, index])
    theta = np.concatenate([grid.angles[-_PAD:] - 2.0 * np.pi, grid.angles, grid.angles[:_PAD] + 2.0 * np.pi])
    padded = np.concatenate([table[:, -_PAD:], table, table[:, :_PAD]], axis=1)
    return RectBivariateSpline(np.concatenate([[0.0], grid.radii]), theta, padded, kx=3, ky=3, s=0)


def _interpolated(grid, nodal, components):
    splines = [_spline_field(grid, nodal.reshape(grid.size, -1), k) for k in range(components)]

    def value(x):
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1]).ravel()
        theta = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2.0 * np.pi).ravel()
        inside = r <= grid.reach
        out = np.zeros((r.size, components))
        for k, spline in enumerate(splines):
            out[inside, k] = spline.ev(np.minimum(r[inside], grid.radius), theta[inside])
        return out.reshape(x.shape[:-1] + (components,))

    return value


@dataclass
class DecompositionResult:
    grid: PolarGrid
    f_nodes: np.ndarray
    v_nodes: np.ndarray
    s_nodes: np.ndarray
    f_norm: float
    s_norm: float
    divergence_norm: float
    solver_info: dict

    @property
    def s_relative(self):
        return self.s_norm / self.f_norm if self.f_norm > 0.0 else 0.0

    @property
    def solver_residual(self):
        return self.solver_info["residual"]

    def v_field(self):
        value = _interpolated(self.grid, self.v_nodes, 2)
        return OneFormField(value, self.grid.reach, name="v")

    def s_field(self):
        flat = _interpolated(self.grid, tensor_vector(self.s_nodes).reshape(3, -1).T, 3)

        def value(x):
            a = flat(x)
            return np.stack([np.stack([a[..., 0], a[..., 1]], -1), np.stack([a[..., 1], a[..., 2]], -1)], -2)

        return SymTensorField(value, self.grid.reach, name="s")

    def observed_support(self, threshold=SUPPORT_THRESHOLD):
        """Largest node radius where |v| exceeds threshold times its maximum."""
        size = np.hypot(self.v_nodes[:, 0], self.v_nodes[:, 1])
        if size.max() == 0.0:
            return 0.0
        return float(self.grid.r[size > threshold * size.max()].max())

    def rows(self):
        s, f, v = self.s_nodes, self.f_nodes, self.v_nodes
        return [(self.grid.r[n], self.grid.theta[n], *self.grid.points[n], *v[n], s[n, 0, 0], s[n, 0, 1], s[n, 1, 1],
                 f[n, 0, 0], f[n, 0, 1], f[n, 1, 1]) for n in range(self.grid.size)]

    header = ("r", "theta", "x1", "x2", "v1", "v2", "s11", "s12", "s22", "f11", "f12", "f22")


def solenoidal_decompose(M, f, n_radial=N_RADIAL, n_angular=N_ANGULAR, solver="direct", operator=None):
    """
    Splits f into s + d v on the disk M with respect to the metric of M.

    :param M: CdrmDisk; its metric defines d, delta and the norms.
    :param f: SymTensorField defined on M.
    :param operator: Optional DeformationOperator for the same metric and grid, reused across calls.
    """
    op = operator or DeformationOperator(M.metric, PolarGrid(M.radius, n_radial, n_angular))
    grid = op.grid
    f_nodes = f(grid.points)
    f_vector = tensor_vector(f_nodes)
    v_vector, info = op.solve(f_vector, solver)
    s_vector = f_vector - op.D @ v_vector
    f_norm = op.tensor_norm(f_vector)
    divergence = op.form_norm(op.divergence(s_vector))
    result = DecompositionResult(grid, f_nodes, op.form_nodes(v_vector), tensor_nodes(s_vector), f_norm,
                                 op.tensor_norm(s_vector), divergence / f_norm if f_norm > 0.0 else 0.0, info)
    logger.info("decomposition of %s on %dx%d grid: |s|/|f| = %.3e, |delta s|/|f| = %.3e", f.name,
                grid.n_radial, grid.n_angular, result.s_relative, result.divergence_norm)
    return result


def reference_potentials(radius):
    """Fixed bump 1-forms supported inside the disk of the given radius."""
    return [bump_one_form((0.7, -0.3), (0.0, 0.0), 0.6 * radius),
            bump_one_form((-0.2, 0.5), (0.2 * radius, -0.1 * radius), 0.45 * radius),
            bump_one_form((0.4, 0.4), (-0.25 * radius, 0.15 * radius), 0.4 * radius)]


def recovery_error(result, v0):
    """Relative sup error of the recovered v against the 1-form v0 on the grid nodes."""
    exact = v0(result.grid.points)
    return float(np.max(np.abs(result.v_nodes - exact)) / max(np.max(np.abs(exact)), 1e-300))


def grid_floor(M, n_radial=N_RADIAL, n_angular=N_ANGULAR):
    """
    Discretization floor of the grid: the largest relative solenoidal part or recovery error seen when
    decomposing known potential tensors d v0.
    """
    op = DeformationOperator(M.metric, PolarGrid(M.radius, n_radial, n_angular))
    floor = 0.0
    for v0 in reference_potentials(M.radius):
        result = solenoidal_decompose(M, sym_derivative(M.metric, v0), operator=op)
        floor = max(floor, result.s_relative, recovery_error(result, v0))
    logger.info("grid floor at %dx%d: %.3e", n_radial, n_angular, floor)
    return floor
