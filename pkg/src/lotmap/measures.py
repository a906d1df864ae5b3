"""Empirical measures, Gaussian synthetic datasets, and their generators.

Datasets are families of Gaussians whose means or covariances trace a
low-dimensional manifold (translations on a circle or grid, rotations,
axis dilations), sampled into empirical measures together with a common
standard-normal reference measure.
"""

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EmpiricalMeasure",
    "GaussianSpec",
    "ManifoldDataset",
    "as_rng",
    "circle_means",
    "dilation_scales",
    "gaussian_w2",
    "generate_circle_translation",
    "generate_dilation",
    "generate_grid_translation",
    "generate_rotation",
    "grid_means",
    "measure_from_csv",
    "measure_to_csv",
    "reference_hash",
    "rotation_specs",
    "sample_gaussian",
    "wishart_noise",
]

WEIGHT_SUM_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-12


def as_rng(seed):
    """Normalize an int, SeedSequence, or Generator into a Generator.

    Generators pass through unchanged so callers can thread a single
    stream through several sampling steps.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """A weighted point cloud ``sum_i weights[i] * delta(points[i])``.

    Parameters
    ----------
    points : (k, n) ndarray
        Support points, finite floats.
    weights : (k,) ndarray
        Strictly positive masses summing to one.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.ascontiguousarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 1:
            raise ValueError("points must be a (k, n) array with k >= 1")
        if not np.isfinite(points).all():
            raise ValueError("points must be finite")
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if weights.shape != (points.shape[0],):
            raise ValueError(
                f"weights shape {weights.shape} does not match k={points.shape[0]}"
            )
        if not (weights > 0).all():
            raise ValueError("weights must be strictly positive")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValueError(
                f"weights sum to {weights.sum()!r}, expected 1 within "
                f"{WEIGHT_SUM_TOLERANCE}"
            )
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_points(cls, points):
        """Uniformly weighted measure on the given support."""
        points = np.asarray(points, dtype=np.float64)
        k = points.shape[0]
        return cls(points, np.full(k, 1.0 / k))

    @property
    def k(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class GaussianSpec:
    """Mean and covariance of a nondegenerate Gaussian."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.covariance, dtype=np.float64)
        n = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (n, n):
            raise ValueError("mean must be (n,) and covariance (n, n)")
        if np.abs(cov - cov.T).max() > SYMMETRY_TOLERANCE:
            raise ValueError("covariance is not symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError(
                "covariance is not positive definite "
                f"(smallest eigenvalue {np.linalg.eigvalsh(cov).min():.3e})"
            ) from None
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self):
        return self.mean.shape[0]


@dataclass(eq=False)
class ManifoldDataset:
    """Empirical measures plus ground truth and a shared reference.

    Attributes
    ----------
    measures : list of EmpiricalMeasure
        The N data measures, k points each.
    truth : (N, d) ndarray
        Latent parameters the embedding should recover up to a rigid
        motion.
    reference : EmpiricalMeasure
        Common reference measure, m points.
    descriptor : dict
        Generator name, parameters, and seed.
    """

    measures: list
    truth: np.ndarray
    reference: EmpiricalMeasure
    descriptor: dict = field(default_factory=dict)

    @property
    def n_measures(self):
        return len(self.measures)


def reference_hash(points):
    """Content hash identifying a reference support array."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    digest = hashlib.sha256()
    digest.update(str(points.shape).encode())
    digest.update(points.tobytes())
    return digest.hexdigest()[:16]


def sample_gaussian(spec, k, seed):
    """Draw k i.i.d. points from the Gaussian into a uniform measure.

    Parameters
    ----------
    spec : GaussianSpec
    k : int
        Number of points, >= 1.
    seed : int, SeedSequence, or Generator

    Returns
    -------
    EmpiricalMeasure
        k uniformly weighted samples.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = as_rng(seed)
    chol = np.linalg.cholesky(spec.covariance)
    z = rng.standard_normal((k, spec.dim))
    points = spec.mean + z @ chol.T
    return EmpiricalMeasure(points, np.full(k, 1.0 / k))


def wishart_noise(scale, n, seed):
    """Symmetric PSD noise ``G @ G.T`` with G entries i.i.d. N(0, scale).

    ``scale`` is the entry standard deviation, so the expectation of the
    result is ``n * scale**2 * I``. ``scale=0`` gives the zero matrix.
    """
    if scale < 0:
        raise ValueError("scale must be nonnegative")
    rng = as_rng(seed)
    g = rng.normal(0.0, scale, size=(n, n))
    return g @ g.T


def circle_means(n_measures, radius):
    """Means at angles 2*pi*i/N on a circle, i = 0..N-1."""
    theta = 2.0 * np.pi * np.arange(n_measures) / n_measures
    return radius * np.column_stack([np.cos(theta), np.sin(theta)])


def rotation_specs(n_measures, radius, base_cov):
    """Specs with circle means and base_cov rotated by each angle."""
    base_cov = np.asarray(base_cov, dtype=np.float64)
    means = circle_means(n_measures, radius)
    theta = 2.0 * np.pi * np.arange(n_measures) / n_measures
    specs = []
    for i in range(n_measures):
        c, s = np.cos(theta[i]), np.sin(theta[i])
        rot = np.array([[c, -s], [s, c]])
        specs.append(GaussianSpec(means[i], rot @ base_cov @ rot.T))
    return specs


def grid_means(grid_side, domain):
    """Uniform grid_side x grid_side grid over domain^2, row-major.

    The second coordinate varies fastest; grid_side=1 gives the domain
    center.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if grid_side == 1:
        axis = np.array([(lo + hi) / 2.0])
    else:
        axis = np.linspace(lo, hi, grid_side)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def dilation_scales(grid_side, dilation_domain):
    """Axis scale pairs (alpha, beta) on a grid over dilation_domain^2."""
    return grid_means(grid_side, dilation_domain)


def _spawn_streams(seed, n_measures):
    # Children 0..N-1 drive the data measures, child N the reference.
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    children = ss.spawn(n_measures + 1)
    return [np.random.default_rng(c) for c in children]


def _noisy_measures(specs, noise_scale, k, streams):
    measures = []
    for spec, rng in zip(specs, streams):
        noise = wishart_noise(noise_scale, spec.dim, rng)
        noisy = GaussianSpec(spec.mean, spec.covariance + noise)
        measures.append(sample_gaussian(noisy, k, rng))
    return measures


def _reference(m, dim, rng):
    return sample_gaussian(
        GaussianSpec(np.zeros(dim), np.eye(dim)), m, rng
    )


def _seed_repr(seed):
    if isinstance(seed, np.random.SeedSequence):
        return list(np.atleast_1d(seed.entropy))
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return repr(seed)


def generate_circle_translation(n_measures, radius, base_cov, noise_scale,
                                k, m, seed):
    """Gaussians translated around a circle, fixed base covariance.

    Each measure i is N(mean_i, base_cov + W_i) with mean_i on the
    circle of the given radius at angle 2*pi*i/N and W_i Wishart noise
    of the given scale, sampled to k points. The reference is m draws
    from N(0, I). Truth is the circle means.
    """
    base_cov = np.asarray(base_cov, dtype=np.float64)
    means = circle_means(n_measures, radius)
    specs = [GaussianSpec(mu, base_cov) for mu in means]
    streams = _spawn_streams(seed, n_measures)
    measures = _noisy_measures(specs, noise_scale, k, streams)
    return ManifoldDataset(
        measures,
        means,
        _reference(m, 2, streams[-1]),
        {
            "generator": "circle-translation",
            "n_measures": int(n_measures),
            "radius": float(radius),
            "base_cov": base_cov.tolist(),
            "noise_scale": float(noise_scale),
            "k": int(k),
            "m": int(m),
            "seed": _seed_repr(seed),
        },
    )


def generate_rotation(n_measures, radius, base_cov, noise_scale, k, m, seed):
    """Gaussians on a circle whose covariance rotates with the angle.

    Measure i is N(mean_i, R_i base_cov R_i^T + W_i) with R_i the
    rotation by angle 2*pi*i/N. Truth is the circle means.
    """
    specs = rotation_specs(n_measures, radius, base_cov)
    streams = _spawn_streams(seed, n_measures)
    measures = _noisy_measures(specs, noise_scale, k, streams)
    return ManifoldDataset(
        measures,
        circle_means(n_measures, radius),
        _reference(m, 2, streams[-1]),
        {
            "generator": "rotation",
            "n_measures": int(n_measures),
            "radius": float(radius),
            "base_cov": np.asarray(base_cov, dtype=np.float64).tolist(),
            "noise_scale": float(noise_scale),
            "k": int(k),
            "m": int(m),
            "seed": _seed_repr(seed),
        },
    )


def generate_grid_translation(grid_side, domain, base_cov, noise_scale,
                              k, m, seed):
    """Gaussians translated over a square grid, fixed base covariance.

    Truth is the grid_side**2 grid points over domain^2, row-major.
    """
    base_cov = np.asarray(base_cov, dtype=np.float64)
    means = grid_means(grid_side, domain)
    specs = [GaussianSpec(mu, base_cov) for mu in means]
    streams = _spawn_streams(seed, len(specs))
    measures = _noisy_measures(specs, noise_scale, k, streams)
    return ManifoldDataset(
        measures,
        means,
        _reference(m, 2, streams[-1]),
        {
            "generator": "grid-translation",
            "grid_side": int(grid_side),
            "domain": [float(domain[0]), float(domain[1])],
            "base_cov": base_cov.tolist(),
            "noise_scale": float(noise_scale),
            "k": int(k),
            "m": int(m),
            "seed": _seed_repr(seed),
        },
    )


def generate_dilation(grid_side, dilation_domain, k, m, seed,
                      noise_scale=0.0):
    """Centered Gaussians N(0, diag(alpha^2, beta^2) + W).

    The (alpha, beta) pairs sit on a grid over dilation_domain^2; noise
    is added after forming the diagonal covariance. Truth is the
    centered (alpha, beta) pairs, so its rows sum to zero.
    """
    scales = dilation_scales(grid_side, dilation_domain)
    specs = [
        GaussianSpec(np.zeros(2), np.diag([a * a, b * b]))
        for a, b in scales
    ]
    streams = _spawn_streams(seed, len(specs))
    measures = _noisy_measures(specs, noise_scale, k, streams)
    truth = scales - scales.mean(axis=0)
    return ManifoldDataset(
        measures,
        truth,
        _reference(m, 2, streams[-1]),
        {
            "generator": "dilation",
            "grid_side": int(grid_side),
            "dilation_domain": [float(dilation_domain[0]),
                                float(dilation_domain[1])],
            "noise_scale": float(noise_scale),
            "k": int(k),
            "m": int(m),
            "seed": _seed_repr(seed),
        },
    )


def _psd_sqrt(mat):
    # Symmetric eigendecomposition with negative eigenvalues clamped;
    # tolerates the ~1e-12 asymmetry fp products accumulate.
    w, v = np.linalg.eigh((mat + mat.T) / 2.0)
    w = np.maximum(w, 0.0)
    return (v * np.sqrt(w)) @ v.T


def gaussian_w2(a, b):
    """Quadratic Wasserstein distance between two Gaussians.

    Uses the closed form
    ``sqrt(|m_a - m_b|^2 + tr(S_a + S_b - 2 (S_b^1/2 S_a S_b^1/2)^1/2))``.

    Parameters
    ----------
    a, b : GaussianSpec

    Returns
    -------
    float
    """
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    root_b = _psd_sqrt(b.covariance)
    cross = _psd_sqrt(root_b @ a.covariance @ root_b)
    mean_term = float(np.sum((a.mean - b.mean) ** 2))
    trace_term = float(
        np.trace(a.covariance) + np.trace(b.covariance) - 2.0 * np.trace(cross)
    )
    return float(np.sqrt(max(mean_term + trace_term, 0.0)))


def measure_to_csv(measure, path, include_weights=None):
    """Write a measure as CSV, one point per row.

    ``include_weights=None`` appends the weight column only when the
    weights are nonuniform; True/False forces it.
    """
    if include_weights is None:
        include_weights = bool(
            np.ptp(measure.weights) > 1e-15 * measure.weights.max()
        )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for i in range(measure.k):
            row = [repr(float(x)) for x in measure.points[i]]
            if include_weights:
                row.append(repr(float(measure.weights[i])))
            writer.writerow(row)


def measure_from_csv(path, weighted=False):
    """Read a measure written by measure_to_csv.

    Set ``weighted=True`` when the file carries a final weight column;
    weights off from unit sum by at most 1e-9 are renormalized.
    """
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    data = np.asarray(rows, dtype=np.float64)
    if weighted:
        if data.shape[1] < 2:
            raise ValueError("weighted file must have >= 2 columns")
        points, weights = data[:, :-1], data[:, -1]
        total = weights.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total!r}, too far from 1")
        return EmpiricalMeasure(points, weights / total)
    return EmpiricalMeasure.from_points(data)
