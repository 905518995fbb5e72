# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled inner loops: Bellman sweeps and slot-by-slot episode simulation.

Every function here has a pure-numpy twin in `_kernels_py` with identical
semantics, argument order, and floating-point operation order (the extension
is built with -ffp-contract=off for that reason).  Keep the two in lockstep.
"""

from libc.math cimport INFINITY, fabs


def vi_sweep(double[::1] v_in, double[::1] v_out,
             long long[:, ::1] succ, double[:, ::1] prob,
             double[:, ::1] cost, double discount):
    """One optimal-control backup; returns the sup-norm change."""
    cdef Py_ssize_t n_states = cost.shape[0]
    cdef Py_ssize_t n_actions = cost.shape[1]
    cdef Py_ssize_t width = succ.shape[1]
    cdef Py_ssize_t s, a, k, row
    cdef double acc, q, best, diff, res = 0.0
    row = 0
    for s in range(n_states):
        best = INFINITY
        for a in range(n_actions):
            acc = 0.0
            for k in range(width):
                acc = acc + prob[row, k] * v_in[succ[row, k]]
            q = cost[s, a] + discount * acc
            if q < best:
                best = q
            row += 1
        v_out[s] = best
        diff = fabs(best - v_in[s])
        if diff > res:
            res = diff
    return res


def qfactor_fill(double[::1] v_in,
                 long long[:, ::1] succ, double[:, ::1] prob,
                 double[:, ::1] cost, double discount, double[:, ::1] out):
    cdef Py_ssize_t n_states = cost.shape[0]
    cdef Py_ssize_t n_actions = cost.shape[1]
    cdef Py_ssize_t width = succ.shape[1]
    cdef Py_ssize_t s, a, k, row
    cdef double acc
    row = 0
    for s in range(n_states):
        for a in range(n_actions):
            acc = 0.0
            for k in range(width):
                acc = acc + prob[row, k] * v_in[succ[row, k]]
            out[s, a] = cost[s, a] + discount * acc
            row += 1
    return None


def policy_sweep(double[::1] v_in, double[::1] v_out,
                 long long[:, ::1] succ_pi, double[:, ::1] prob_pi,
                 double[::1] cost_pi, double discount):
    """One fixed-policy backup; returns the sup-norm change."""
    cdef Py_ssize_t n_states = cost_pi.shape[0]
    cdef Py_ssize_t width = succ_pi.shape[1]
    cdef Py_ssize_t s, k
    cdef double acc, diff, res = 0.0
    for s in range(n_states):
        acc = 0.0
        for k in range(width):
            acc = acc + prob_pi[s, k] * v_in[succ_pi[s, k]]
        v_out[s] = cost_pi[s] + discount * acc
        diff = fabs(v_out[s] - v_in[s])
        if diff > res:
            res = diff
    return res


def run_episodes(long long[::1] policy,
                 double[::1] arrival_p, double depart_p,
                 double[:, ::1] shift_p, long long[:, ::1] shift_to,
                 Py_ssize_t buffer, Py_ssize_t n_servers,
                 double e_switch, double e_on, double delay_weight,
                 double discount,
                 long long[::1] s0, long long[::1] q0, long long[::1] w0,
                 double[:, ::1] uniforms,
                 double[::1] out_cost, long long[:, ::1] out_counts,
                 long long[:, ::1] out_final):
    """Simulate one batch of episodes (rows of `uniforms`); one draw per slot."""
    cdef Py_ssize_t n = uniforms.shape[0]
    cdef Py_ssize_t horizon = uniforms.shape[1]
    cdef Py_ssize_t n_shift = shift_to.shape[1]
    cdef Py_ssize_t n_actions = n_servers + 1
    cdef Py_ssize_t q_span = buffer + 1
    cdef Py_ssize_t i, t, j
    cdef long long s, q, w, a, turn
    cdef long long arrivals, departures, blocks, shifts, turnons
    cdef double disc, total, u, x, step_cost

    for i in range(n):
        s = s0[i]
        q = q0[i]
        w = w0[i]
        disc = 1.0
        total = 0.0
        arrivals = departures = blocks = shifts = turnons = 0
        for t in range(horizon):
            a = policy[(s * q_span + q) * n_actions + w]
            turn = a - w
            if turn < 0:
                turn = 0
            step_cost = e_switch * turn + delay_weight * q + e_on * a
            total = total + disc * step_cost
            turnons += turn

            u = uniforms[i, t]
            x = arrival_p[s]
            if u < x:
                if q >= buffer:
                    blocks += 1
                else:
                    q += 1
                    arrivals += 1
            else:
                if q > 0:
                    x = x + depart_p * a
                if u < x:
                    q -= 1
                    departures += 1
                else:
                    for j in range(n_shift):
                        x = x + shift_p[s, j]
                        if u < x:
                            s = shift_to[s, j]
                            shifts += 1
                            break
            w = a
            disc = disc * discount

        out_cost[i] = total
        out_counts[i, 0] = arrivals
        out_counts[i, 1] = departures
        out_counts[i, 2] = blocks
        out_counts[i, 3] = shifts
        out_counts[i, 4] = turnons
        out_final[i, 0] = s
        out_final[i, 1] = q
        out_final[i, 2] = w
    return None
