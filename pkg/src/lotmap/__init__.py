"""Low-dimensional Euclidean embeddings of measure datasets via
linearized optimal transport.

The pipeline: sample empirical measures from a parametric family
(measures), solve optimal transport against a shared reference
(solvers), turn plans into transport maps (lot), factorize into
Euclidean coordinates (embedding), and score against ground truth
(evaluation). The cli module wires these into a config-driven
experiment runner.
"""

from ._kernels import BACKEND as kernel_backend
from .embedding import (
    EmbeddingMetrics,
    EmbeddingResult,
    SolverConfig,
    SquaredDistanceMatrix,
    compute_transport_maps,
    double_center,
    lot_wassmap,
    mds,
    wassmap,
)
from .evaluation import (
    AlignmentReport,
    BoundReport,
    InstrumentRecord,
    check_perturbation_bound,
    instrument,
    procrustes_align,
)
from .lot import (
    TransportMap,
    TransportMapMatrix,
    barycentric_projection,
    empirical_lot_distance,
    transport_map_matrix,
)
from .measures import (
    EmpiricalMeasure,
    GaussianSpec,
    ManifoldDataset,
    gaussian_w2,
    generate_circle_translation,
    generate_dilation,
    generate_grid_translation,
    generate_rotation,
    sample_gaussian,
    wishart_noise,
)
from .solvers import (
    CostMatrix,
    SinkhornResult,
    TransportPlan,
    cost_matrix,
    solve_exact,
    solve_sinkhorn,
    transport_cost,
    wasserstein2_empirical,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "BoundReport",
    "CostMatrix",
    "EmbeddingMetrics",
    "EmbeddingResult",
    "EmpiricalMeasure",
    "GaussianSpec",
    "InstrumentRecord",
    "ManifoldDataset",
    "SinkhornResult",
    "SolverConfig",
    "SquaredDistanceMatrix",
    "TransportMap",
    "TransportMapMatrix",
    "TransportPlan",
    "barycentric_projection",
    "check_perturbation_bound",
    "compute_transport_maps",
    "cost_matrix",
    "double_center",
    "empirical_lot_distance",
    "gaussian_w2",
    "generate_circle_translation",
    "generate_dilation",
    "generate_grid_translation",
    "generate_rotation",
    "instrument",
    "kernel_backend",
    "lot_wassmap",
    "mds",
    "procrustes_align",
    "sample_gaussian",
    "solve_exact",
    "solve_sinkhorn",
    "transport_cost",
    "transport_map_matrix",
    "wasserstein2_empirical",
    "wassmap",
    "wishart_noise",
    "__version__",
]
