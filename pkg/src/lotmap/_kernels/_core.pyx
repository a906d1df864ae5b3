# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: network simplex for the transportation LP and
log-domain Sinkhorn iteration.

The network simplex follows the LEMON library's spanning-tree
implementation (block-search pivot rule, strongly feasible trees) in the
trimmed uncapacitated form that is standard for dense optimal transport.
Node ids: sources 0..m-1, sinks m..m+k-1, artificial root m+k. Real arc
e = i*k + j carries cost[i, j]; artificial arcs n_arcs..n_arcs+n_nodes-1
connect each node with the root.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, sqrt

cnp.import_array()

cdef int C_OPTIMAL = 0
cdef int C_ITERATION_LIMIT = 1
cdef int C_INFEASIBLE = 2
cdef int C_UNBOUNDED = 3

OPTIMAL = C_OPTIMAL
ITERATION_LIMIT = C_ITERATION_LIMIT
INFEASIBLE = C_INFEASIBLE
UNBOUNDED = C_UNBOUNDED

# Relative optimality tolerance for entering-arc reduced costs, and the
# absolute tolerance on residual artificial flow at termination.
cdef double EPSILON = 2.2204460492503131e-15
cdef double NET_SUPPLY_TOLERANCE = 1e-8
cdef double INF = 1.7976931348623157e308

cdef signed char STATE_UPPER = -1
cdef signed char STATE_TREE = 0
cdef signed char STATE_LOWER = 1

ctypedef struct LeavingArc:
    long u_in
    long u_out
    long v_in
    double delta
    bint change


cdef long _find_entering_arc(double[::1] cost, double[::1] pi,
                             int[::1] src, int[::1] tgt,
                             signed char[::1] state,
                             long search_arc_num, long block_size,
                             long* next_arc, long in_arc) noexcept nogil:
    cdef double best = 0.0
    cdef double c, a
    cdef long e, cnt = block_size
    cdef long start = next_arc[0]

    for e in range(start, search_arc_num):
        c = state[e] * (cost[e] + pi[src[e]] - pi[tgt[e]])
        if c < best:
            best = c
            in_arc = e
        cnt -= 1
        if cnt == 0:
            if in_arc >= 0:
                a = fabs(pi[src[in_arc]])
                if fabs(pi[tgt[in_arc]]) > a:
                    a = fabs(pi[tgt[in_arc]])
                if fabs(cost[in_arc]) > a:
                    a = fabs(cost[in_arc])
                if best < -(EPSILON * a):
                    next_arc[0] = e
                    return in_arc
            cnt = block_size

    for e in range(start):
        c = state[e] * (cost[e] + pi[src[e]] - pi[tgt[e]])
        if c < best:
            best = c
            in_arc = e
        cnt -= 1
        if cnt == 0:
            if in_arc >= 0:
                a = fabs(pi[src[in_arc]])
                if fabs(pi[tgt[in_arc]]) > a:
                    a = fabs(pi[tgt[in_arc]])
                if fabs(cost[in_arc]) > a:
                    a = fabs(cost[in_arc])
                if best < -(EPSILON * a):
                    next_arc[0] = e
                    return in_arc
            cnt = block_size

    if in_arc < 0:
        return -1
    a = fabs(pi[src[in_arc]])
    if fabs(pi[tgt[in_arc]]) > a:
        a = fabs(pi[tgt[in_arc]])
    if fabs(cost[in_arc]) > a:
        a = fabs(cost[in_arc])
    if best >= -(EPSILON * a):
        return -1
    next_arc[0] = 0
    return in_arc


cdef inline long _find_join_node(int[::1] src, int[::1] tgt,
                                 int[::1] succ_num, int[::1] parent,
                                 long in_arc) noexcept nogil:
    cdef long u = src[in_arc]
    cdef long v = tgt[in_arc]
    while u != v:
        if succ_num[u] < succ_num[v]:
            u = parent[u]
        else:
            v = parent[v]
    return u


cdef LeavingArc _find_leaving_arc(long join, long in_arc,
                                  int[::1] src, int[::1] tgt,
                                  double[::1] flow,
                                  signed char[::1] state,
                                  cnp.uint8_t[::1] forward,
                                  int[::1] pred, int[::1] parent) noexcept nogil:
    cdef LeavingArc out
    cdef long first, second, u
    cdef double d
    cdef int result = 0

    if state[in_arc] == STATE_LOWER:
        first = src[in_arc]
        second = tgt[in_arc]
    else:
        first = tgt[in_arc]
        second = src[in_arc]

    out.delta = INF
    out.u_out = -1

    # Arcs pointing with the cycle lose flow on the first path and gain
    # on the second; ties on the second path keep the tree strongly
    # feasible, hence < on the first search and <= on the second.
    u = first
    while u != join:
        d = flow[pred[u]] if forward[u] else INF
        if d < out.delta:
            out.delta = d
            out.u_out = u
            result = 1
        u = parent[u]

    u = second
    while u != join:
        d = INF if forward[u] else flow[pred[u]]
        if d <= out.delta:
            out.delta = d
            out.u_out = u
            result = 2
        u = parent[u]

    if result == 1:
        out.u_in = first
        out.v_in = second
    else:
        out.u_in = second
        out.v_in = first
    out.change = result != 0
    return out


cdef void _update_flow(long join, long in_arc, LeavingArc leaving,
                       int[::1] src, int[::1] tgt, double[::1] flow,
                       signed char[::1] state, cnp.uint8_t[::1] forward,
                       int[::1] pred, int[::1] parent) noexcept nogil:
    cdef double val
    cdef long u

    if leaving.delta > 0:
        val = state[in_arc] * leaving.delta
        flow[in_arc] += val
        u = src[in_arc]
        while u != join:
            if forward[u]:
                flow[pred[u]] -= val
            else:
                flow[pred[u]] += val
            u = parent[u]
        u = tgt[in_arc]
        while u != join:
            if forward[u]:
                flow[pred[u]] += val
            else:
                flow[pred[u]] -= val
            u = parent[u]

    if leaving.change:
        state[in_arc] = STATE_TREE
        if flow[pred[leaving.u_out]] == 0:
            state[pred[leaving.u_out]] = STATE_LOWER
        else:
            state[pred[leaving.u_out]] = STATE_UPPER
    else:
        state[in_arc] = -state[in_arc]


cdef void _update_spanning_tree(LeavingArc leaving, long join, long in_arc,
                                int[::1] src,
                                int[::1] parent, int[::1] pred,
                                int[::1] thread, int[::1] rev_thread,
                                int[::1] succ_num, int[::1] last_succ,
                                cnp.uint8_t[::1] forward,
                                int[::1] dirty_revs) noexcept nogil:
    cdef long u_out = leaving.u_out
    cdef long u_in = leaving.u_in
    cdef long v_in = leaving.v_in
    cdef long old_rev_thread = rev_thread[u_out]
    cdef long old_succ_num = succ_num[u_out]
    cdef long old_last_succ = last_succ[u_out]
    cdef long v_out = parent[u_out]
    cdef long u, w, right, last, stem, new_stem, par_stem
    cdef long up_limit_in, up_limit_out
    cdef long n_dirty = 0
    cdef long tmp_sc = 0
    cdef long tmp_ls, i

    u = last_succ[u_in]
    right = thread[u]

    if old_rev_thread == v_in:
        last = thread[last_succ[u_out]]
    else:
        last = thread[v_in]

    thread[v_in] = stem = u_in
    dirty_revs[n_dirty] = v_in
    n_dirty += 1
    par_stem = v_in
    while stem != u_out:
        new_stem = parent[stem]
        thread[u] = new_stem
        dirty_revs[n_dirty] = u
        n_dirty += 1

        w = rev_thread[stem]
        thread[w] = right
        rev_thread[right] = w

        parent[stem] = par_stem
        par_stem = stem
        stem = new_stem

        if last_succ[stem] == last_succ[par_stem]:
            u = rev_thread[par_stem]
        else:
            u = last_succ[stem]
        right = thread[u]

    parent[u_out] = par_stem
    thread[u] = last
    rev_thread[last] = u
    last_succ[u_out] = u

    if old_rev_thread != v_in:
        thread[old_rev_thread] = right
        rev_thread[right] = old_rev_thread

    for i in range(n_dirty):
        u = dirty_revs[i]
        rev_thread[thread[u]] = u

    tmp_ls = last_succ[u_out]
    u = u_out
    while u != u_in:
        w = parent[u]
        pred[u] = pred[w]
        forward[u] = not forward[w]
        tmp_sc += succ_num[u] - succ_num[w]
        succ_num[u] = tmp_sc
        last_succ[w] = tmp_ls
        u = w

    pred[u_in] = in_arc
    forward[u_in] = u_in == src[in_arc]
    succ_num[u_in] = old_succ_num

    up_limit_in = -1
    up_limit_out = -1
    if last_succ[join] == v_in:
        up_limit_out = join
    else:
        up_limit_in = join

    u = v_in
    while u != up_limit_in and last_succ[u] == v_in:
        last_succ[u] = last_succ[u_out]
        u = parent[u]

    if join != old_rev_thread and v_in != old_rev_thread:
        u = v_out
        while u != up_limit_out and last_succ[u] == old_last_succ:
            last_succ[u] = old_rev_thread
            u = parent[u]
    else:
        u = v_out
        while u != up_limit_out and last_succ[u] == old_last_succ:
            last_succ[u] = last_succ[u_out]
            u = parent[u]

    u = v_in
    while u != join:
        succ_num[u] += old_succ_num
        u = parent[u]
    u = v_out
    while u != join:
        succ_num[u] -= old_succ_num
        u = parent[u]


cdef void _update_potential(LeavingArc leaving, double[::1] pi,
                            double[::1] cost, int[::1] thread,
                            int[::1] pred, int[::1] last_succ,
                            cnp.uint8_t[::1] forward) noexcept nogil:
    cdef long u_in = leaving.u_in
    cdef long v_in = leaving.v_in
    cdef double sigma
    cdef long u, end

    if forward[u_in]:
        sigma = pi[v_in] - pi[u_in] - cost[pred[u_in]]
    else:
        sigma = pi[v_in] - pi[u_in] + cost[pred[u_in]]

    end = thread[last_succ[u_in]]
    u = u_in
    while u != end:
        pi[u] += sigma
        u = thread[u]


cdef int _initial_pivots(long n1, long n2, long n_arcs,
                         double[::1] cost, double[::1] pi, double[::1] flow,
                         int[::1] src, int[::1] tgt,
                         signed char[::1] state, cnp.uint8_t[::1] forward,
                         int[::1] parent, int[::1] pred,
                         int[::1] thread, int[::1] rev_thread,
                         int[::1] succ_num, int[::1] last_succ,
                         int[::1] dirty_revs) noexcept nogil:
    # Pivot once on the cheapest incoming arc of every sink. This LEMON
    # heuristic removes most of the expensive artificial-arc pivots.
    cdef long i, j, e, best, join
    cdef double best_cost
    cdef LeavingArc leaving

    for j in range(n2):
        best = -1
        best_cost = INF
        for i in range(n1):
            e = i * n2 + j
            if cost[e] < best_cost:
                best_cost = cost[e]
                best = e
        if best < 0:
            continue
        if state[best] * (cost[best] + pi[src[best]] - pi[tgt[best]]) >= 0:
            continue
        join = _find_join_node(src, tgt, succ_num, parent, best)
        leaving = _find_leaving_arc(join, best, src, tgt, flow, state,
                                    forward, pred, parent)
        if leaving.delta >= INF:
            return 0
        _update_flow(join, best, leaving, src, tgt, flow, state, forward,
                     pred, parent)
        if leaving.change:
            _update_spanning_tree(leaving, join, best, src, parent, pred,
                                  thread, rev_thread, succ_num, last_succ,
                                  forward, dirty_revs)
            _update_potential(leaving, pi, cost, thread, pred, last_succ,
                              forward)
    return 1


def network_simplex(double[:, ::1] cost_matrix, double[::1] a, double[::1] b,
                    long max_iter=0):
    """Solve the dense transportation LP to a vertex-optimal plan.

    Returns ``(plan, status, iterations)`` with status OPTIMAL,
    ITERATION_LIMIT, INFEASIBLE, or UNBOUNDED.
    """
    cdef long n1 = cost_matrix.shape[0]
    cdef long n2 = cost_matrix.shape[1]
    cdef long n_nodes = n1 + n2
    cdef long all_nodes = n_nodes + 1
    cdef long n_arcs = n1 * n2
    cdef long max_arcs = n_arcs + n_nodes
    cdef long root = n_nodes

    cdef double[::1] cost = np.empty(max_arcs, dtype=np.float64)
    cdef double[::1] flow = np.zeros(max_arcs, dtype=np.float64)
    cdef double[::1] pi = np.zeros(all_nodes, dtype=np.float64)
    cdef double[::1] supply = np.empty(all_nodes, dtype=np.float64)
    cdef int[::1] src = np.empty(max_arcs, dtype=np.int32)
    cdef int[::1] tgt = np.empty(max_arcs, dtype=np.int32)
    cdef signed char[::1] state = np.empty(max_arcs, dtype=np.int8)
    cdef int[::1] parent = np.empty(all_nodes, dtype=np.int32)
    cdef int[::1] pred = np.empty(all_nodes, dtype=np.int32)
    cdef int[::1] thread = np.empty(all_nodes, dtype=np.int32)
    cdef int[::1] rev_thread = np.empty(all_nodes, dtype=np.int32)
    cdef int[::1] succ_num = np.empty(all_nodes, dtype=np.int32)
    cdef int[::1] last_succ = np.empty(all_nodes, dtype=np.int32)
    cdef cnp.uint8_t[::1] forward = np.empty(all_nodes, dtype=np.uint8)
    cdef int[::1] dirty_revs = np.empty(all_nodes, dtype=np.int32)

    plan = np.zeros((n1, n2), dtype=np.float64)
    cdef double[:, ::1] plan_view = plan

    cdef long i, j, e, u, in_arc, join
    cdef long block_size, iterations = 0
    cdef long next_arc = 0
    cdef double net_supply = 0.0, artificial_cost = 0.0, max_pot, val
    cdef int status = C_OPTIMAL
    cdef LeavingArc leaving

    with nogil:
        for i in range(n1):
            supply[i] = a[i]
            net_supply += a[i]
        for j in range(n2):
            supply[n1 + j] = -b[j]
            net_supply -= b[j]
        for i in range(n1):
            for j in range(n2):
                e = i * n2 + j
                src[e] = <int> i
                tgt[e] = <int> (n1 + j)
                cost[e] = cost_matrix[i, j]
                state[e] = STATE_LOWER
                if cost[e] > artificial_cost:
                    artificial_cost = cost[e]
        artificial_cost = (artificial_cost + 1.0) * n_nodes

        if fabs(net_supply) > NET_SUPPLY_TOLERANCE:
            status = C_INFEASIBLE
        else:
            parent[root] = -1
            pred[root] = -1
            thread[root] = 0
            rev_thread[0] = <int> root
            succ_num[root] = <int> (n_nodes + 1)
            last_succ[root] = <int> (root - 1)
            supply[root] = -net_supply
            pi[root] = 0.0

            e = n_arcs
            for u in range(n_nodes):
                parent[u] = <int> root
                pred[u] = <int> e
                thread[u] = <int> (u + 1)
                rev_thread[u + 1] = <int> u
                succ_num[u] = 1
                last_succ[u] = <int> u
                state[e] = STATE_TREE
                if supply[u] >= 0:
                    forward[u] = 1
                    pi[u] = 0.0
                    src[e] = <int> u
                    tgt[e] = <int> root
                    flow[e] = supply[u]
                    cost[e] = 0.0
                else:
                    forward[u] = 0
                    pi[u] = artificial_cost
                    src[e] = <int> root
                    tgt[e] = <int> u
                    flow[e] = -supply[u]
                    cost[e] = artificial_cost
                e += 1

            if not _initial_pivots(n1, n2, n_arcs, cost, pi, flow, src, tgt,
                                   state, forward, parent, pred, thread,
                                   rev_thread, succ_num, last_succ,
                                   dirty_revs):
                status = C_UNBOUNDED

        if status == C_OPTIMAL:
            block_size = <long> sqrt(<double> n_arcs)
            if block_size < 10:
                block_size = 10
            in_arc = _find_entering_arc(cost, pi, src, tgt, state, n_arcs,
                                        block_size, &next_arc, -1)
            while in_arc >= 0:
                iterations += 1
                if max_iter > 0 and iterations >= max_iter:
                    status = C_ITERATION_LIMIT
                    break
                join = _find_join_node(src, tgt, succ_num, parent, in_arc)
                leaving = _find_leaving_arc(join, in_arc, src, tgt, flow,
                                            state, forward, pred, parent)
                if leaving.delta >= INF:
                    status = C_UNBOUNDED
                    break
                _update_flow(join, in_arc, leaving, src, tgt, flow, state,
                             forward, pred, parent)
                if leaving.change:
                    _update_spanning_tree(leaving, join, in_arc, src, parent,
                                          pred, thread, rev_thread, succ_num,
                                          last_succ, forward, dirty_revs)
                    _update_potential(leaving, pi, cost, thread, pred,
                                      last_succ, forward)
                in_arc = _find_entering_arc(cost, pi, src, tgt, state,
                                            n_arcs, block_size, &next_arc,
                                            in_arc)

        if status == C_OPTIMAL:
            for e in range(n_arcs, max_arcs):
                if flow[e] != 0:
                    if fabs(flow[e]) > EPSILON:
                        status = C_INFEASIBLE
                        break
                    flow[e] = 0.0

        if status == C_OPTIMAL or status == C_ITERATION_LIMIT:
            for i in range(n1):
                for j in range(n2):
                    val = flow[i * n2 + j]
                    plan_view[i, j] = val if val > 0 else 0.0

    return plan, status, iterations


def sinkhorn_logdomain(double[:, ::1] cost, double[::1] a, double[::1] b,
                       double beta, double tol, long max_iter):
    """Entropic OT dual potentials by log-domain Sinkhorn iteration.

    Returns ``(f, g, iterations, marginal_error, converged)``; see the
    pure backend for the contract.
    """
    cdef long m = cost.shape[0]
    cdef long k = cost.shape[1]
    f_arr = np.zeros(m, dtype=np.float64)
    g_arr = np.zeros(k, dtype=np.float64)
    cdef double[::1] f = f_arr
    cdef double[::1] g = g_arr
    cdef double[::1] log_a = np.log(np.asarray(a))
    cdef double[::1] log_b = np.log(np.asarray(b))
    cdef double[::1] row_buf = np.empty(k, dtype=np.float64)
    cdef double[::1] gb = np.empty(k, dtype=np.float64)
    cdef double[::1] col_max = np.empty(k, dtype=np.float64)
    cdef double[::1] col_sum = np.empty(k, dtype=np.float64)

    cdef double inv_beta = 1.0 / beta
    cdef double err = INF
    cdef double mx, s, v, fi, marg
    cdef long it = 0, i, j
    cdef bint converged = 0

    with nogil:
        for it in range(1, max_iter + 1):
            for j in range(k):
                gb[j] = log_b[j] + g[j] * inv_beta
            for i in range(m):
                mx = -INF
                for j in range(k):
                    v = gb[j] - cost[i, j] * inv_beta
                    row_buf[j] = v
                    if v > mx:
                        mx = v
                s = 0.0
                for j in range(k):
                    s += exp(row_buf[j] - mx)
                f[i] = -beta * (mx + log(s))

            for j in range(k):
                col_max[j] = -INF
                col_sum[j] = 0.0
            for i in range(m):
                fi = log_a[i] + f[i] * inv_beta
                for j in range(k):
                    v = fi - cost[i, j] * inv_beta
                    if v > col_max[j]:
                        col_max[j] = v
            for i in range(m):
                fi = log_a[i] + f[i] * inv_beta
                for j in range(k):
                    col_sum[j] += exp(fi - cost[i, j] * inv_beta - col_max[j])

            err = 0.0
            for j in range(k):
                marg = fabs(b[j] * exp(col_max[j] + log(col_sum[j])
                                       + g[j] * inv_beta) - b[j])
                if marg > err:
                    err = marg
            if err <= tol:
                converged = 1
                break
            for j in range(k):
                g[j] = -beta * (col_max[j] + log(col_sum[j]))

    return f_arr, g_arr, it, err, bool(converged)
