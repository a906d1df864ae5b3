"""Alignment, error metrics, and the MDS perturbation bound check."""

import time
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AlignmentReport",
    "BoundReport",
    "InstrumentRecord",
    "check_perturbation_bound",
    "instrument",
    "procrustes_align",
]

CENTERING_TOLERANCE = 1e-6
ORTHOGONALITY_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class AlignmentReport:
    """Optimal orthogonal alignment of an embedding to a truth.

    ``rotation`` is the orthogonal matrix Q (reflections allowed)
    minimizing ||Z - Y Q^T||_F; errors are Frobenius, the relative one
    normalized by ||Y||_F.
    """

    rotation: np.ndarray
    absolute_error: float
    relative_error: float

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=np.float64)
        defect = np.abs(q.T @ q - np.eye(q.shape[0])).max()
        if defect > ORTHOGONALITY_TOLERANCE:
            raise ValueError(f"rotation not orthogonal (defect {defect:.3e})")
        object.__setattr__(self, "rotation", q)


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Outcome of checking the embedding perturbation bound."""

    lhs: float
    rhs: float
    hypothesis_ok: bool
    tau1: float
    tau2: float


@dataclass(frozen=True, eq=False)
class InstrumentRecord:
    """Metrics harvested from one pipeline invocation."""

    ot_solve_count: int
    sinkhorn_iterations: int
    wall_clock_per_stage: dict
    total_seconds: float
    result: object = field(repr=False, default=None)


def _check_centered(x, name):
    worst = np.abs(x.mean(axis=0)).max()
    if worst > CENTERING_TOLERANCE:
        raise ValueError(
            f"{name} is not centered (max column mean {worst:.3e})"
        )


def procrustes_align(z, y):
    """Align embedding ``z`` to truth ``y`` over the orthogonal group.

    Both inputs are (N, d), centered. Solves
    ``min_Q ||z - y Q^T||_F`` over Q in O(d) via the SVD of ``y^T z``;
    no scale factor is fitted, so the errors are scale-sensitive by
    design.

    Returns
    -------
    AlignmentReport
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if z.shape != y.shape:
        raise ValueError(f"shape mismatch: {z.shape} vs {y.shape}")
    if z.ndim != 2:
        raise ValueError("inputs must be (N, d)")
    norm_y = float(np.linalg.norm(y))
    if norm_y == 0.0:
        raise ValueError("truth has zero norm")
    _check_centered(z, "embedding")
    _check_centered(y, "truth")
    u, _, vt = np.linalg.svd(y.T @ z)
    q = (u @ vt).T
    absolute = float(np.linalg.norm(z - y @ q.T))
    return AlignmentReport(q, absolute, absolute / norm_y)


def check_perturbation_bound(truth, perturbed_sq_dists, embedding,
                             tau1=0.0, tau2=0.0):
    """Check the Procrustes error of an MDS embedding against its bound.

    With Y the (N, d) centered rank-d truth, Delta its squared
    distances, and Lambda a perturbation with
    ``max|Lambda - Delta| <= tau1 + tau2``, the MDS embedding Z of
    Lambda satisfies
    ``min_Q ||Z - Y Q^T||_F <= (1 + sqrt(2)) ||Y^+|| N (tau1 + tau2)``
    whenever ``||Y^+|| sqrt(N) (tau1 + tau2)^(1/2) <= 1/sqrt(2)``.

    ``hypothesis_ok`` reports that spectral condition and the entrywise
    perturbation consistency together; the bound is only guaranteed
    when both hold.

    Returns
    -------
    BoundReport
    """
    y = np.asarray(truth, dtype=np.float64)
    lam = np.asarray(perturbed_sq_dists, dtype=np.float64)
    z = np.asarray(embedding, dtype=np.float64)
    n, d = y.shape
    if lam.shape != (n, n):
        raise ValueError(f"perturbed distances must be ({n}, {n})")
    if tau1 < 0 or tau2 < 0:
        raise ValueError("tau1 and tau2 must be nonnegative")
    _check_centered(y, "truth")
    sing = np.linalg.svd(y, compute_uv=False)
    if sing[d - 1] <= 1e-13 * max(sing[0], 1.0):
        raise ValueError("truth is rank-deficient; the bound needs rank d")
    pinv_norm = 1.0 / float(sing[d - 1])

    sq = np.sum(y * y, axis=1)
    delta = sq[:, None] + sq[None, :] - 2.0 * (y @ y.T)
    tau = tau1 + tau2
    spectral_ok = pinv_norm * np.sqrt(n) * np.sqrt(tau) <= 1.0 / np.sqrt(2.0)
    consistent = float(np.abs(lam - delta).max()) <= tau + 1e-12
    rhs = (1.0 + np.sqrt(2.0)) * pinv_norm * n * tau
    lhs = procrustes_align(z, y).absolute_error
    return BoundReport(lhs, rhs, bool(spectral_ok and consistent),
                       float(tau1), float(tau2))


def instrument(run):
    """Run a pipeline invocation and harvest its metrics.

    ``run`` is a zero-argument callable returning an EmbeddingResult
    (or anything carrying a ``metrics`` attribute). Wall clock is
    measured around the call.

    Returns
    -------
    InstrumentRecord
    """
    t0 = time.perf_counter()
    result = run()
    total = time.perf_counter() - t0
    metrics = getattr(result, "metrics", None)
    return InstrumentRecord(
        ot_solve_count=getattr(metrics, "ot_solve_count", 0),
        sinkhorn_iterations=getattr(metrics, "sinkhorn_iterations", 0),
        wall_clock_per_stage=dict(getattr(metrics, "stage_seconds", {}) or {}),
        total_seconds=total,
        result=result,
    )
