#!/usr/bin/env python3
"""Benchmark the compiled extension against the numpy fallback.

Times the three hot kernels on the reference scenario: optimal-control
sweeps (value iteration's inner loop), fixed-policy sweeps (policy
evaluation's inner loop), and batched episode simulation.  Also cross-checks
that both backends produce the same numbers.

Usage: python benchmarks/bench_backends.py [--sweeps N] [--episodes N]
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

import numpy as np

from sleepmdp import backend, make_baseline_policy
from sleepmdp.cli import load_scenario
from sleepmdp.mdp import build_kernel
from sleepmdp.model import choose_slot_duration, discount_for_slot
from sleepmdp.sim import _shift_arrays, default_initial_state, replication_seed

REPO = Path(__file__).resolve().parents[1]


def load_reference():
    scenario = load_scenario(REPO / "scenarios" / "scenario_paper.cfg")
    slot = choose_slot_duration(scenario.model, scenario.params)
    discount = discount_for_slot(scenario.params, slot)
    kernel = build_kernel(scenario.model, scenario.params, slot)
    return scenario, slot, discount, kernel


def time_sweeps(impl, kernel, discount, n_sweeps):
    v = np.zeros(kernel.space.n_states)
    v_next = np.empty_like(v)
    t0 = time.perf_counter()
    for _ in range(n_sweeps):
        impl.vi_sweep(v, v_next, kernel.succ, kernel.prob, kernel.cost, discount)
        v, v_next = v_next, v
    return (time.perf_counter() - t0) / n_sweeps, v


def time_policy_sweeps(impl, kernel, discount, n_sweeps):
    space = kernel.space
    policy = np.full(space.n_states, space.n_servers, dtype=np.int64)
    rows = np.arange(space.n_states, dtype=np.int64) * space.n_actions + policy
    succ_pi = np.ascontiguousarray(kernel.succ[rows])
    prob_pi = np.ascontiguousarray(kernel.prob[rows])
    cost_pi = np.ascontiguousarray(kernel.cost[np.arange(space.n_states), policy])
    v = np.zeros(space.n_states)
    v_next = np.empty_like(v)
    t0 = time.perf_counter()
    for _ in range(n_sweeps):
        impl.policy_sweep(v, v_next, succ_pi, prob_pi, cost_pi, discount)
        v, v_next = v_next, v
    return (time.perf_counter() - t0) / n_sweeps, v


def time_episodes(impl, scenario, slot, discount, kernel, n_episodes, horizon):
    space = kernel.space
    model, params = scenario.model, scenario.params
    policy = make_baseline_policy(space, "n_policy", queue_threshold=10, servers_on=2)
    arrival_p = model.rate_array() * slot
    shift_p, shift_to = _shift_arrays(model, slot)
    start = default_initial_state(model)

    uniforms = np.empty((n_episodes, horizon))
    for i in range(n_episodes):
        gen = np.random.Generator(np.random.Philox(replication_seed(1, i)))
        uniforms[i] = gen.random(horizon)

    cost = np.empty(n_episodes)
    counts = np.empty((n_episodes, 5), np.int64)
    final = np.empty((n_episodes, 3), np.int64)
    t0 = time.perf_counter()
    impl.run_episodes(
        policy, arrival_p, params.service_rate * slot, shift_p, shift_to,
        space.buffer, space.n_servers, params.e_switch, params.e_on,
        params.delay_weight, discount,
        np.full(n_episodes, start.phase, np.int64),
        np.full(n_episodes, start.queue, np.int64),
        np.full(n_episodes, start.active, np.int64),
        uniforms, cost, counts, final,
    )
    per_slot = (time.perf_counter() - t0) / (n_episodes * horizon)
    return per_slot, cost


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sweeps", type=int, default=200)
    parser.add_argument("--episodes", type=int, default=512)
    parser.add_argument("--horizon", type=int, default=5000)
    args = parser.parse_args()

    scenario, slot, discount, kernel = load_reference()
    n = kernel.space.n_states
    print(f"reference instance: {n} states x {kernel.space.n_actions} actions, "
          f"slot {slot:.4g}s, discount {discount:.6f}")
    print(f"compiled extension available: {backend.HAVE_COMPILED}\n")

    names = ["python"] + (["compiled"] if backend.HAVE_COMPILED else [])
    results = {}
    for name in names:
        impl = backend.get_impl(name)
        sweep_t, v_sweep = time_sweeps(impl, kernel, discount, args.sweeps)
        pol_t, v_pol = time_policy_sweeps(impl, kernel, discount, args.sweeps)
        ep_t, costs = time_episodes(
            impl, scenario, slot, discount, kernel, args.episodes, args.horizon
        )
        results[name] = (sweep_t, pol_t, ep_t, v_sweep, v_pol, costs)
        print(f"{name:>9}: optimal sweep {sweep_t*1e3:8.3f} ms | policy sweep "
              f"{pol_t*1e3:8.3f} ms | simulation {ep_t*1e9:8.1f} ns/slot")

    if backend.HAVE_COMPILED:
        py, cc = results["python"], results["compiled"]
        print(f"\nspeedup: optimal sweep {py[0]/cc[0]:.1f}x | policy sweep "
              f"{py[1]/cc[1]:.1f}x | simulation {py[2]/cc[2]:.1f}x")
        agree = (
            np.allclose(py[3], cc[3], rtol=1e-13, atol=0)
            and np.allclose(py[4], cc[4], rtol=1e-13, atol=0)
            and np.array_equal(py[5], cc[5])
        )
        print(f"backend agreement (values rtol 1e-13, episode costs exact): {agree}")


if __name__ == "__main__":
    main()
