"""Pure NumPy/SciPy kernels, used when the compiled extension is unavailable.

Same call signatures and return conventions as ``lotmap._kernels._core``.
The exact solver delegates to HiGHS dual simplex, which is correct but far
slower than the compiled network simplex on large instances.
"""

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.special import logsumexp

OPTIMAL = 0
ITERATION_LIMIT = 1
INFEASIBLE = 2


def network_simplex(cost, a, b, max_iter=0):
    """Solve the dense transportation LP to a vertex-optimal plan.

    Parameters
    ----------
    cost : (m, k) ndarray
        Per-pair transport costs.
    a : (m,) ndarray
        Source masses, positive, summing to one.
    b : (k,) ndarray
        Target masses, positive, summing to one.
    max_iter : int
        Simplex iteration cap, 0 for the solver default.

    Returns
    -------
    plan : (m, k) ndarray
    status : int
        OPTIMAL, ITERATION_LIMIT, or INFEASIBLE.
    iterations : int
    """
    cost = np.asarray(cost, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, k = cost.shape
    # The reduced system below cannot see a total-mass mismatch, so
    # reject it up front the way the tree solver's artificial arcs do.
    if abs(a.sum() - b.sum()) > 1e-8:
        return np.zeros((m, k)), INFEASIBLE, 0
    # Row sums fix a, column sums fix b; the last column constraint is
    # implied by the others and dropped to keep A_eq full rank.
    row_con = sp.kron(sp.eye(m, format="csr"), np.ones((1, k)), format="csr")
    col_con = sp.kron(np.ones((1, m)), sp.eye(k, format="csr"), format="csr")[: k - 1]
    a_eq = sp.vstack([row_con, col_con], format="csr")
    b_eq = np.concatenate([a, b[: k - 1]])
    options = {}
    if max_iter > 0:
        options["maxiter"] = int(max_iter)
    res = linprog(
        cost.ravel(),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0.0, None),
        method="highs-ds",
        options=options,
    )
    if res.status == 0:
        status = OPTIMAL
    elif res.status == 1:
        status = ITERATION_LIMIT
    else:
        status = INFEASIBLE
    if res.x is None:
        plan = np.zeros((m, k))
    else:
        plan = np.maximum(res.x, 0.0).reshape(m, k)
    iterations = int(getattr(res, "nit", 0))
    return plan, status, iterations


def sinkhorn_logdomain(cost, a, b, beta, tol, max_iter):
    """Entropic OT dual potentials by log-domain Sinkhorn iteration.

    Alternates exact row scalings with a column-marginal check, so the
    returned ``(f, g)`` always reproduces the source marginal exactly and
    the target marginal within the reported error.

    Returns
    -------
    f : (m,) ndarray
        Source potential.
    g : (k,) ndarray
        Target potential.
    iterations : int
    marginal_error : float
        Final L-infinity violation of the target marginal.
    converged : bool
    """
    cost = np.asarray(cost, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, k = cost.shape
    log_a = np.log(a)
    log_b = np.log(b)
    f = np.zeros(m)
    g = np.zeros(k)
    err = np.inf
    iterations = 0
    for iterations in range(1, int(max_iter) + 1):
        f = -beta * logsumexp(log_b[None, :] + (g[None, :] - cost) / beta, axis=1)
        col_lse = logsumexp(log_a[:, None] + (f[:, None] - cost) / beta, axis=0)
        col_sum = b * np.exp(col_lse + g / beta)
        err = float(np.max(np.abs(col_sum - b)))
        if err <= tol:
            break
        g = -beta * col_lse
    return f, g, iterations, err, bool(err <= tol)
