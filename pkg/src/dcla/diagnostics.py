"""Evaluation layer: target normalization, binned target and sample histograms,
binned KL divergence and moment summaries (two-dimensional targets)."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .potentials import dissipativity_constants, potential_eval

KL_FLOOR = 1e-12


class QuadratureError(RuntimeError):
    pass


@dataclass
class Histogram2D:
    """Probability mass on a rectangular grid.

    ``mass[i, j]`` belongs to ``[x_edges[i], x_edges[i+1]] x [y_edges[j], y_edges[j+1]]``.
    ``n_outside`` counts samples that fell outside the grid (sample histograms only).
    """

    x_edges: np.ndarray
    y_edges: np.ndarray
    mass: np.ndarray
    total: float = 1.0
    n_outside: int = 0

    def __post_init__(self):
        self.x_edges = np.asarray(self.x_edges, dtype=float)
        self.y_edges = np.asarray(self.y_edges, dtype=float)
        self.mass = np.asarray(self.mass, dtype=float)
        for e in (self.x_edges, self.y_edges):
            if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
                raise ValueError("edges must be strictly increasing with at least two entries")
        if self.mass.shape != (self.x_edges.size - 1, self.y_edges.size - 1):
            raise ValueError("mass shape does not match the edges")
        if np.any(self.mass < 0):
            raise ValueError("mass must be non-negative")

    def same_grid(self, other):
        return np.array_equal(self.x_edges, other.x_edges) and np.array_equal(
            self.y_edges, other.y_edges
        )

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x_lo", "x_hi", "y_lo", "y_hi", "mass"])
            for i in range(self.mass.shape[0]):
                for j in range(self.mass.shape[1]):
                    w.writerow(
                        [
                            f"{self.x_edges[i]:.17g}",
                            f"{self.x_edges[i + 1]:.17g}",
                            f"{self.y_edges[j]:.17g}",
                            f"{self.y_edges[j + 1]:.17g}",
                            f"{self.mass[i, j]:.17g}",
                        ]
                    )

    @classmethod
    def from_csv(cls, path):
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        x_edges = np.unique(np.concatenate([rows[:, 0], rows[:, 1]]))
        y_edges = np.unique(np.concatenate([rows[:, 2], rows[:, 3]]))
        mass = np.zeros((x_edges.size - 1, y_edges.size - 1))
        i = np.searchsorted(x_edges, rows[:, 0])
        j = np.searchsorted(y_edges, rows[:, 2])
        mass[i, j] = rows[:, 4]
        return cls(x_edges, y_edges, mass, float(mass.sum()))


def _potential_2d(V):
    if V.d != 2:
        raise ValueError("two-dimensional potential required")

    def density(y, x):
        return math.exp(-float(potential_eval(V, np.array([x, y]))))

    return density


def _splits(lo, hi):
    # integrate piecewise so the kinks of |x|_1 along the axes sit on cell borders
    return [lo, 0.0, hi] if lo < 0.0 < hi else [lo, hi]


def normalize_density(V, box, tol=1e-8):
    """``Z = int_box exp(-V)`` by nested adaptive quadrature.

    ``box`` is ``((x_lo, x_hi), (y_lo, y_hi))``; mass outside it is ignored.

    Raises
    ------
    QuadratureError
        If the adaptive rule reports non-convergence.
    """
    (xl, xh), (yl, yh) = box
    density = _potential_2d(V)
    xs, ys = _splits(xl, xh), _splits(yl, yh)
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for a, b in zip(xs[:-1], xs[1:]):
                for c, e in zip(ys[:-1], ys[1:]):
                    val, _ = integrate.dblquad(density, a, b, c, e, epsabs=tol, epsrel=1e-12)
                    total += val
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature did not converge: {exc}") from exc
    if not total > 0:
        raise QuadratureError("non-positive normalizing constant")
    return total


def grid_edges(lo, hi, bins):
    """``bins`` equal cells covering ``[lo, hi]``, shifted so 0 is an edge when inside."""
    if bins < 2:
        raise ValueError("need at least two bins")
    if not hi > lo:
        raise ValueError("empty interval")
    if not lo < 0.0 < hi:
        return np.linspace(lo, hi, bins + 1)
    width = (hi - lo) / (bins - 1)
    start = math.floor(lo / width) * width
    return start + width * np.arange(bins + 1)


def default_box(V, half_width=None):
    """Default evaluation rectangle around the mean of a quadratic ``f``.

    The half width is ``max(6 / sqrt(eigmin), 2)`` per axis unless given.
    """
    mean = np.asarray(V.f.mean, dtype=float)
    if half_width is None:
        half_width = max(6.0 / math.sqrt(V.f.mu_f), 2.0)
    return tuple((float(m - half_width), float(m + half_width)) for m in mean)


def dissipativity_box(V):
    """Mean +- max(6 / sqrt(eigmin), R + 2) per axis, with ``R`` the dissipativity radius."""
    R = dissipativity_constants(V).R
    return default_box(V, max(6.0 / math.sqrt(V.f.mu_f), R + 2.0))


def quantile_box(V, Z=None, tail=1e-4, search_box=None, resolution=600):
    """Smallest per-axis intervals holding all but ``tail`` of each target marginal.

    Each marginal loses ``tail / 2`` on either side.  The marginals come from
    a fine tensor quadrature over ``search_box`` (default: ``default_box``).
    """
    search_box = default_box(V) if search_box is None else search_box
    xe = np.linspace(*search_box[0], resolution + 1)
    ye = np.linspace(*search_box[1], resolution + 1)
    mass = target_hist(V, 1.0 if Z is None else Z, xe, ye, order=4).mass
    out = []
    for edges, marginal in ((xe, mass.sum(axis=1)), (ye, mass.sum(axis=0))):
        cdf = np.cumsum(marginal)
        lo = edges[np.searchsorted(cdf, tail / 2)]
        hi = edges[min(np.searchsorted(cdf, 1.0 - tail / 2) + 1, edges.size - 1)]
        out.append((float(lo), float(hi)))
    return tuple(out)


def target_hist(V, Z, x_edges, y_edges, order=8):
    """Binned target mass: per-bin tensor Gauss-Legendre of ``exp(-V) / Z``, renormalized."""
    if not Z > 0:
        raise ValueError("Z must be positive")
    x_edges = np.asarray(x_edges, dtype=float)
    y_edges = np.asarray(y_edges, dtype=float)
    nodes, weights = np.polynomial.legendre.leggauss(order)

    def layout(edges):
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        pts = mid[:, None] + half[:, None] * nodes[None, :]
        return pts, half[:, None] * weights[None, :]

    px, wx = layout(x_edges)
    py, wy = layout(y_edges)
    X, Y = np.meshgrid(px.ravel(), py.ravel(), indexing="ij")
    vals = np.exp(-potential_eval(V, np.stack([X, Y], axis=-1))) / Z
    vals = vals.reshape(px.shape[0], order, py.shape[0], order)
    mass = np.einsum("iajb,ia,jb->ij", vals, wx, wy)
    total = mass.sum()
    return Histogram2D(x_edges, y_edges, mass / total, 1.0)


def histogram2d(samples, x_edges, y_edges):
    """Normalized histogram of 2D samples; points outside the grid are counted in ``n_outside``."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise ValueError("samples must have shape (n, 2)")
    if samples.shape[0] == 0:
        raise ValueError("no samples")
    if not np.all(np.isfinite(samples)):
        raise ValueError("samples must be finite")
    x_edges = np.asarray(x_edges, dtype=float)
    y_edges = np.asarray(y_edges, dtype=float)
    counts, _, _ = np.histogram2d(samples[:, 0], samples[:, 1], bins=[x_edges, y_edges])
    inside = counts.sum()
    if inside == 0:
        raise ValueError("all samples fall outside the grid")
    return Histogram2D(x_edges, y_edges, counts / inside, 1.0, int(samples.shape[0] - inside))


def binned_kl(p, q):
    """``sum p log(p / max(q, 1e-12))`` over bins with ``p > 0``."""
    if not p.same_grid(q):
        raise ValueError("histograms are on different grids")
    pm, qm = p.mass.ravel(), q.mass.ravel()
    pos = pm > 0
    return float(np.sum(pm[pos] * np.log(pm[pos] / np.maximum(qm[pos], KL_FLOOR))))


def sample_moments(samples):
    """Empirical mean and unbiased covariance of the rows of ``samples``."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ValueError("need at least two samples")
    mean = samples.mean(axis=0)
    cov = np.atleast_2d(np.cov(samples, rowvar=False))
    return mean, cov
