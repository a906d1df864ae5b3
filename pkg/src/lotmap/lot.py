"""Transport maps to a common reference and the linearized OT geometry.

Pushing every measure onto one reference measure through barycentric
projections turns each measure into a vector (the map evaluated on the
reference support), where plain Euclidean geometry approximates
Wasserstein geometry.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .measures import reference_hash

__all__ = [
    "TransportMap",
    "TransportMapMatrix",
    "barycentric_projection",
    "empirical_lot_distance",
    "map_to_csv",
    "transport_map_matrix",
]

ROW_SUM_FLOOR = 1e-15


@dataclass(frozen=True, eq=False)
class TransportMap:
    """A transport map sampled on the reference support.

    ``values[i]`` is the image of reference atom i; ``reference_id``
    binds the map to the reference it was computed against so maps over
    different references cannot be mixed.
    """

    values: np.ndarray
    reference_id: str = ""

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("map values must be (m, n)")
        if not np.isfinite(values).all():
            raise ValueError("map values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class TransportMapMatrix:
    """Centered, scaled transport maps stacked as columns.

    Column j is the row-major flattening of map j, minus the column
    mean, times 1/sqrt(m); with uniform reference weights the Euclidean
    inner product of columns equals the (centered) LOT inner product.
    """

    matrix: np.ndarray
    reference_id: str
    m: int
    dim: int


def barycentric_projection(plan, target_points, reference_points=None):
    """Barycentric projection of a transport plan.

    Row i of the result is the mass-weighted average of the target
    points that atom i sends mass to. For an entropic plan written with
    dual potentials this equals the softmax-weighted average with
    weights ``b[j] * exp((g[j] - C[i, j]) / beta)``.

    Parameters
    ----------
    plan : TransportPlan
    target_points : (k, n) ndarray
    reference_points : (m, n) ndarray, optional
        Source support; when given, its content hash becomes the map's
        reference_id.

    Returns
    -------
    TransportMap
    """
    target_points = np.asarray(target_points, dtype=np.float64)
    if target_points.ndim != 2 or target_points.shape[0] != plan.mass.shape[1]:
        raise ValueError(
            f"target_points must be (k, n) with k={plan.mass.shape[1]}"
        )
    row_sums = plan.mass.sum(axis=1)
    if (row_sums < ROW_SUM_FLOOR).any():
        bad = int(np.argmin(row_sums))
        raise ValueError(
            f"plan row {bad} sums to {row_sums[bad]:.3e}, below "
            f"{ROW_SUM_FLOOR:.0e}; the plan does not cover the source"
        )
    values = (plan.mass @ target_points) / row_sums[:, None]
    ref_id = "" if reference_points is None else reference_hash(reference_points)
    return TransportMap(values, ref_id)


def _check_compatible(a, b):
    if a.values.shape != b.values.shape:
        raise ValueError(
            f"map shapes differ: {a.values.shape} vs {b.values.shape}"
        )
    if a.reference_id != b.reference_id:
        raise ValueError(
            f"maps were computed against different references "
            f"({a.reference_id!r} vs {b.reference_id!r})"
        )


def empirical_lot_distance(a, b):
    """Linearized OT distance: RMS displacement between two maps.

    ``sqrt(mean_i |a_i - b_i|^2)`` over the shared reference support.
    A pseudometric on maps; zero for identical maps.
    """
    _check_compatible(a, b)
    diff = a.values - b.values
    return float(np.sqrt(np.mean(np.sum(diff * diff, axis=1))))


def transport_map_matrix(maps):
    """Stack maps into the centered, 1/sqrt(m)-scaled column matrix.

    Parameters
    ----------
    maps : sequence of TransportMap
        All over the same reference (same shape and reference_id).

    Returns
    -------
    TransportMapMatrix
        (m*n, N) matrix whose Gram matrix encodes pairwise LOT
        distances.
    """
    if len(maps) == 0:
        raise ValueError("need at least one map")
    for other in maps[1:]:
        _check_compatible(maps[0], other)
    m, dim = maps[0].values.shape
    stacked = np.column_stack([t.values.ravel() for t in maps])
    centered = stacked - stacked.mean(axis=1, keepdims=True)
    return TransportMapMatrix(
        centered / np.sqrt(m), maps[0].reference_id, m, dim
    )


def map_to_csv(tmap, path):
    """Write a map as CSV, one reference atom's image per row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in tmap.values:
            writer.writerow([repr(float(x)) for x in row])
