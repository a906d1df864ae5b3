"""Low-dimensional Euclidean embeddings of measure datasets.

Two routes to the same geometry: classical MDS on a squared-distance
matrix, and the direct SVD of the transport-map matrix, which needs one
OT solve per measure instead of one per pair. On the squared pairwise
LOT distances the two coincide.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import solvers
from .lot import barycentric_projection, transport_map_matrix

__all__ = [
    "EmbeddingMetrics",
    "EmbeddingResult",
    "SolverConfig",
    "SquaredDistanceMatrix",
    "compute_transport_maps",
    "double_center",
    "lot_wassmap",
    "mds",
    "wassmap",
]

NEGATIVE_ENTRY_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class SquaredDistanceMatrix:
    """Symmetric zero-diagonal matrix of squared dissimilarities.

    Entries in [-1e-12, 0) are clamped to zero on construction; more
    negative entries are rejected.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("squared distances must be square")
        if not np.isfinite(values).all():
            raise ValueError("squared distances must be finite")
        if np.abs(values - values.T).max() > SYMMETRY_TOLERANCE:
            raise ValueError("squared distances must be symmetric")
        if np.abs(np.diag(values)).max() > NEGATIVE_ENTRY_TOLERANCE:
            raise ValueError("diagonal must be zero")
        low = values.min()
        if low < -NEGATIVE_ENTRY_TOLERANCE:
            raise ValueError(f"entry {low!r} below -1e-12")
        values = np.maximum((values + values.T) / 2.0, 0.0)
        np.fill_diagonal(values, 0.0)
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class EmbeddingMetrics:
    """Instrumentation attached to an embedding run."""

    ot_solve_count: int = 0
    sinkhorn_iterations: int = 0
    stage_seconds: dict = field(default_factory=dict)
    total_seconds: float = 0.0


@dataclass(frozen=True, eq=False)
class EmbeddingResult:
    """Embedding coordinates plus diagnostics.

    ``coordinates`` rows are the embedded points, centered;
    ``singular_values`` are the d retained spectral weights in
    descending order; ``negative_eigenvalue_mass`` totals the clamped
    negative spectrum (zero for the SVD route, which is PSD by
    construction).
    """

    coordinates: np.ndarray
    singular_values: np.ndarray
    negative_eigenvalue_mass: float
    method: str
    metrics: EmbeddingMetrics | None = None


@dataclass(frozen=True)
class SolverConfig:
    """Which OT solver the embedding pipelines use."""

    kind: str = "exact"
    beta: float = 1.0
    tol: float = 1e-9
    max_iter: int = 10000

    def __post_init__(self):
        if self.kind not in ("exact", "sinkhorn"):
            raise ValueError(f"kind must be 'exact' or 'sinkhorn', got {self.kind!r}")
        if self.kind == "sinkhorn" and self.beta <= 0:
            raise ValueError("beta must be positive for the sinkhorn solver")


def double_center(dist):
    """Double-centered Gram matrix ``-1/2 J D J`` with J = I - 11^T/N."""
    d = dist.values if isinstance(dist, SquaredDistanceMatrix) else np.asarray(dist, dtype=np.float64)
    row = d.mean(axis=1, keepdims=True)
    col = d.mean(axis=0, keepdims=True)
    b = -0.5 * (d - row - col + d.mean())
    return (b + b.T) / 2.0


def _fix_signs(vectors):
    # Resolve the per-vector sign ambiguity: the largest-magnitude entry
    # of each column is made nonnegative, first index winning ties.
    out = vectors.copy()
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        if out[i, j] < 0:
            out[:, j] = -out[:, j]
    return out


def mds(dist, d):
    """Classical multidimensional scaling of squared distances.

    Eigendecomposes the double-centered Gram matrix, clamps negative
    eigenvalues to zero (recording their total magnitude), and embeds
    with the top-d spectral coordinates.

    Parameters
    ----------
    dist : SquaredDistanceMatrix or (N, N) ndarray
    d : int
        Target dimension, 1 <= d < N.

    Returns
    -------
    EmbeddingResult
    """
    if not isinstance(dist, SquaredDistanceMatrix):
        dist = SquaredDistanceMatrix(dist)
    n = dist.n
    if d < 1:
        raise ValueError("d must be >= 1")
    if d >= n:
        raise ValueError(f"d must be < N (got d={d}, N={n})")
    gram = double_center(dist)
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    negative_mass = float(np.abs(np.minimum(eigvals, 0.0)).sum())
    sing = np.sqrt(np.maximum(eigvals[:d], 0.0))
    vecs = _fix_signs(eigvecs[:, :d])
    return EmbeddingResult(vecs * sing, sing, negative_mass, "mds")


def compute_transport_maps(dataset, solver):
    """Barycentric-projection maps from the reference to each measure.

    One OT solve per measure. Returns the maps and a stats dict with
    ``ot_solve_count`` and total ``sinkhorn_iterations``.
    """
    ref = dataset.reference
    maps = []
    sinkhorn_iterations = 0
    for measure in dataset.measures:
        if solver.kind == "exact":
            cost = solvers.cost_matrix(
                ref.points, measure.points, solvers.SQUARED
            )
            plan = solvers.solve_exact(cost, ref.weights, measure.weights)
        else:
            cost = solvers.cost_matrix(
                ref.points, measure.points, solvers.HALF_SQUARED
            )
            result = solvers.solve_sinkhorn(
                cost, ref.weights, measure.weights, solver.beta,
                tol=solver.tol, max_iter=solver.max_iter,
            )
            sinkhorn_iterations += result.iterations
            plan = result.plan
        maps.append(
            barycentric_projection(plan, measure.points, ref.points)
        )
    stats = {
        "ot_solve_count": len(maps),
        "sinkhorn_iterations": sinkhorn_iterations,
    }
    return maps, stats


def lot_wassmap(dataset, solver, d):
    """Embed a measure dataset via the SVD of its transport-map matrix.

    Computes one transport map per measure against the shared
    reference, stacks them centered and scaled, and reads the embedding
    off the top-d right singular vectors. Exactly N OT solves.

    Parameters
    ----------
    dataset : ManifoldDataset
    solver : SolverConfig
    d : int
        Target dimension, 1 <= d < N.

    Returns
    -------
    EmbeddingResult
    """
    n = dataset.n_measures
    if d < 1:
        raise ValueError("d must be >= 1")
    if d >= n:
        raise ValueError(f"d must be < N (got d={d}, N={n})")
    t0 = time.perf_counter()
    maps, stats = compute_transport_maps(dataset, solver)
    t1 = time.perf_counter()
    tmat = transport_map_matrix(maps)
    t2 = time.perf_counter()
    _, sing, vt = np.linalg.svd(tmat.matrix, full_matrices=False)
    vecs = _fix_signs(vt[:d].T)
    coords = vecs * sing[:d]
    t3 = time.perf_counter()
    metrics = EmbeddingMetrics(
        ot_solve_count=stats["ot_solve_count"],
        sinkhorn_iterations=stats["sinkhorn_iterations"],
        stage_seconds={
            "transport": t1 - t0,
            "assemble": t2 - t1,
            "factorize": t3 - t2,
        },
        total_seconds=t3 - t0,
    )
    return EmbeddingResult(coords, sing[:d].copy(), 0.0, "lot-wassmap", metrics)


def _pairwise_squared_w2(dataset, solver):
    measures = dataset.measures
    n = len(measures)
    gamma = np.zeros((n, n))
    solves = 0
    sinkhorn_iterations = 0
    for i in range(n):
        for j in range(i + 1, n):
            if solver.kind == "exact":
                w = solvers.wasserstein2_empirical(measures[i], measures[j])
                gamma[i, j] = gamma[j, i] = w * w
            else:
                cost = solvers.cost_matrix(
                    measures[i].points, measures[j].points,
                    solvers.HALF_SQUARED,
                )
                result = solvers.solve_sinkhorn(
                    cost, measures[i].weights, measures[j].weights,
                    solver.beta, tol=solver.tol, max_iter=solver.max_iter,
                )
                sinkhorn_iterations += result.iterations
                # Transport cost of the entropic plan on squared costs.
                val = 2.0 * solvers.transport_cost(result.plan, cost)
                gamma[i, j] = gamma[j, i] = val
            solves += 1
    return gamma, solves, sinkhorn_iterations


def wassmap(dataset, solver, d):
    """Embed a measure dataset by MDS on pairwise Wasserstein distances.

    The baseline pipeline: all N(N-1)/2 pairwise OT solves, then
    classical MDS on the squared distances.
    """
    n = dataset.n_measures
    if d < 1:
        raise ValueError("d must be >= 1")
    if d >= n:
        raise ValueError(f"d must be < N (got d={d}, N={n})")
    t0 = time.perf_counter()
    gamma, solves, sinkhorn_iterations = _pairwise_squared_w2(dataset, solver)
    t1 = time.perf_counter()
    result = mds(SquaredDistanceMatrix(gamma), d)
    t2 = time.perf_counter()
    metrics = EmbeddingMetrics(
        ot_solve_count=solves,
        sinkhorn_iterations=sinkhorn_iterations,
        stage_seconds={"transport": t1 - t0, "factorize": t2 - t1},
        total_seconds=t2 - t0,
    )
    return EmbeddingResult(
        result.coordinates,
        result.singular_values,
        result.negative_eigenvalue_mass,
        "wassmap",
        metrics,
    )
