import datetime
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

NEARBY_SPAN = 0.3
MIN_GAP = 1e-2


def sample_pairs(rng, n, min_gap=MIN_GAP):
    """n pairs of boundary angles at least min_gap apart."""
    xi = rng.uniform(0.0, 2.0 * np.pi, n)
    gap = rng.uniform(min_gap, 2.0 * np.pi - min_gap, n)
    return [(float(a), float((a + b) % (2.0 * np.pi))) for a, b in zip(xi, gap)]


def diameter_pairs(n, offset=0.0):
    """n antipodal pairs, evenly rotated; their g0-geodesics pass through the origin."""
    angles = offset + np.pi * np.arange(n) / max(n, 1)
    return [(float(a), float(a + np.pi)) for a in angles]


def sample_quadruples(rng, n, nearby_fraction=0.5, span=NEARBY_SPAN):
    """
    Stratified quadruples (xi, xi2, eta, eta2): the nearby stratum keeps all four angles within `span`, the
    spread stratum puts the xi's and eta's roughly opposite.
    """
    n_near = int(round(n * nearby_fraction))
    quadruples = []
    for k in range(n):
        base = rng.uniform(0.0, 2.0 * np.pi)
        if k < n_near:
            offsets = np.sort(rng.uniform(0.0, span, 3))
            quadruples.append((base, base + offsets[1], base + offsets[0], base + offsets[2]))
        else:
            a, b, c = rng.uniform(0.2, 0.8, 3)
            quadruples.append((base, base + a, base + np.pi + b - 0.5, base + np.pi + c))
    return np.mod(np.asarray(quadruples, dtype=float), 2.0 * np.pi)


def sample_points(rng, n, max_radius):
    """n chart points, uniform in the hyperbolic radius up to that of Euclidean radius max_radius."""
    rho = rng.uniform(0.0, 2.0 * np.arctanh(max_radius), n)
    angle = rng.uniform(0.0, 2.0 * np.pi, n)
    r = np.tanh(rho / 2.0)
    return np.stack([r * np.cos(angle), r * np.sin(angle)], axis=-1)


def sample_point_pairs(rng, n, max_radius=0.9):
    p, q = sample_points(rng, n, max_radius), sample_points(rng, n, max_radius)
    return [(a, b) for a, b in zip(p, q) if not np.allclose(a, b)]


def sample_chords(rng, n, support_radius, through=True):
    """
    Boundary pairs whose g0-geodesics pass within (through=True) or outside (through=False) the closed
    support disk, by sampling the closest point of the geodesic to the origin.
    """
    lo, hi = (0.0, 0.9 * support_radius) if through else (1.1 * support_radius, 0.95)
    pairs = []
    for r, direction in zip(rng.uniform(lo, hi, n), rng.uniform(0.0, 2.0 * np.pi, n)):
        a, b = chord_endpoints(r * np.exp(1j * direction))
        pairs.append((float(a % (2.0 * np.pi)), float(b % (2.0 * np.pi))))
    return pairs


def sample_basepoints(rng, n, max_radius=0.8):
    """(x, y, xi, eta) samples for basepoint-change checks."""
    x, y = sample_points(rng, n, max_radius), sample_points(rng, n, max_radius)
    return [(a, b, xi, eta) for a, b, (xi, eta) in zip(x, y, sample_pairs(rng, n, 0.1))]


def chord_endpoints(m):
    """Ideal endpoints of the g0-geodesic whose closest point to the origin is m."""
    r, phi = abs(m), np.angle(m)
    # cos(half) = 2r / (1 + r^2)
    half = np.arccos(2.0 * r / (1.0 + r * r))
    return phi + half, phi - half


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    if isinstance(value, (bool, np.bool_)):
        return "pass" if value else "fail"
    return str(value)


def write_table(path, header, rows, tolerances=None):
    """
    CSV with a timestamped first comment line, one comment line per tolerance actually used, then the header and
    rows. Floats are written with 17 significant digits so reruns compare bit for bit.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    comments = [f"generated {datetime.datetime.now().isoformat(timespec='seconds')}"]
    comments += [f"tolerance {key}={_cell(float(value))}" for key, value in sorted((tolerances or {}).items())]
    comments.append(",".join(header))
    table = np.array([[_cell(v) for v in row] for row in rows], dtype=object).reshape(-1, len(header))
    np.savetxt(path, table, fmt="%s", delimiter=",", header="\n".join(comments), comments="# ")
    return path


def plot_series(path, series, xlabel, ylabel, title=None, log_y=False, scatter=False):
    """
    Standalone SVG line or scatter chart.

    :param series: Mapping label -> (x, y).
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, y) in series.items():
        y = np.abs(y) if log_y else y
        if scatter:
            ax.scatter(x, y, s=12, label=label)
        else:
            ax.plot(x, y, marker="o", markersize=3, label=label)
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path

