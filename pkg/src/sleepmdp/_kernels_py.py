"""Pure-numpy implementations of the hot kernels.

This is the fallback backend used when the compiled extension is not built
(or when SLEEPMDP_BACKEND=python).  Semantics, summation order, and event
arithmetic deliberately mirror `_core.pyx` so both backends produce the same
numbers; keep the two files in lockstep.
"""

from __future__ import annotations

import numpy as np


def vi_sweep(v_in, v_out, succ, prob, cost, discount):
    """One optimal-control backup: v_out[s] = min_a cost[s,a] + r * E[v_in].
    Returns the sup-norm change."""
    ev = (prob * v_in[succ]).sum(axis=1)
    q = cost + discount * ev.reshape(cost.shape)
    np.min(q, axis=1, out=v_out)
    return float(np.max(np.abs(v_out - v_in)))


def qfactor_fill(v_in, succ, prob, cost, discount, out):
    """Fill out[s, a] = cost[s, a] + r * E[v_in | s, a]."""
    ev = (prob * v_in[succ]).sum(axis=1)
    np.multiply(ev.reshape(cost.shape), discount, out=out)
    out += cost
    return out


def policy_sweep(v_in, v_out, succ_pi, prob_pi, cost_pi, discount):
    """One fixed-policy backup over per-state rows.  Returns sup-norm change."""
    ev = (prob_pi * v_in[succ_pi]).sum(axis=1)
    np.multiply(ev, discount, out=v_out)
    v_out += cost_pi
    return float(np.max(np.abs(v_out - v_in)))


def run_episodes(
    policy,
    arrival_p,
    depart_p,
    shift_p,
    shift_to,
    buffer,
    n_servers,
    e_switch,
    e_on,
    delay_weight,
    discount,
    s0,
    q0,
    w0,
    uniforms,
    out_cost,
    out_counts,
    out_final,
):
    """Simulate a batch of episodes in lockstep, one uniform draw per slot.

    Each row of `uniforms` is one replication's pre-drawn stream, consumed in
    slot order; rows are mutually independent streams so the lockstep batch
    equals replication-by-replication simulation exactly.  Event bands per
    slot, in order: arrival (counts as a block when the buffer is full),
    departure, phase shifts, nothing.
    """
    n, horizon = uniforms.shape
    n_actions = n_servers + 1
    q_span = buffer + 1
    n_shift = shift_to.shape[1]

    s = np.asarray(s0, dtype=np.int64).copy()
    q = np.asarray(q0, dtype=np.int64).copy()
    w = np.asarray(w0, dtype=np.int64).copy()
    disc = np.ones(n)
    total = np.zeros(n)
    counts = np.zeros((n, 5), dtype=np.int64)  # arrivals, departures, blocks, shifts, turn-ons

    for t in range(horizon):
        idx = (s * q_span + q) * n_actions + w
        a = policy[idx]
        turn = np.maximum(a - w, 0)
        step_cost = e_switch * turn + delay_weight * q + e_on * a
        total += disc * step_cost
        counts[:, 4] += turn

        u = uniforms[:, t]
        x = arrival_p[s]
        is_arr = u < x
        blocked = is_arr & (q >= buffer)
        arrived = is_arr & ~blocked

        x = x + np.where(q > 0, depart_p * a, 0.0)
        is_dep = ~is_arr & (u < x)

        shifted = np.zeros(n, dtype=bool)
        s_new = s.copy()
        for j in range(n_shift):
            x = x + shift_p[s, j]
            hit = ~is_arr & ~is_dep & ~shifted & (u < x)
            if hit.any():
                s_new[hit] = shift_to[s[hit], j]
                shifted |= hit

        counts[:, 0] += arrived
        counts[:, 1] += is_dep
        counts[:, 2] += blocked
        counts[:, 3] += shifted

        q = q + arrived - is_dep
        s = s_new
        w = a.copy()
        disc *= discount

    out_cost[:] = total
    out_counts[:] = counts
    out_final[:, 0] = s
    out_final[:, 1] = q
    out_final[:, 2] = w
