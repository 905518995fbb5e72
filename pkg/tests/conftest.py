"""Shared fixtures: the reference scenario, its solves, and small instances.

The expensive reference-scenario solves are session-scoped so the acceptance
tests share one value-iteration run, one policy-iteration run, and one
finite-horizon sequence.
"""

from __future__ import annotations

import time
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

from sleepmdp import (
    MmppModel,
    backend,
    SystemParams,
    build_kernel,
    check_partial_submodular,
    choose_slot_duration,
    discount_for_slot,
    finite_horizon_values,
    policy_iteration,
    qfactor_table,
    value_iteration,
)
from sleepmdp.cli import load_scenario

REPO_ROOT = Path(__file__).resolve().parents[1]
PAPER_CONFIG = REPO_ROOT / "scenarios" / "scenario_paper.cfg"


def tiny_instance():
    """Single-phase, one-server instance with an explicit valid slot:
    lambda=1/s, mu=2/s, M=1, B=2, per-slot discount 0.9, slot 0.1 s."""
    model = MmppModel(arrival_rates=(1.0,), transition_rates=((0.0,),))
    params = SystemParams(
        n_servers=1,
        service_rate=2.0,
        buffer=2,
        e_switch=1.0,
        e_on=0.1,
        delay_weight=0.5,
        discount_factor=0.9,
        slot=0.1,
    )
    return model, params


def ipp_instance(buffer=8, n_servers=3):
    """Small two-phase bursty instance for structural tests."""
    model = MmppModel(arrival_rates=(4.0, 0.0), transition_rates=((0.0, 0.5), (0.25, 0.0)))
    params = SystemParams(
        n_servers=n_servers,
        service_rate=2.0,
        buffer=buffer,
        e_switch=3.0,
        e_on=0.4,
        delay_weight=0.5,
        discount_factor=0.95,
        slot="auto",
    )
    return model, params


def prepared(model, params):
    slot = choose_slot_duration(model, params)
    discount = discount_for_slot(params, slot)
    kernel = build_kernel(model, params, slot)
    return slot, discount, kernel


@pytest.fixture(scope="session")
def paper_scenario():
    return load_scenario(PAPER_CONFIG)


@pytest.fixture(scope="session")
def paper_setup(paper_scenario):
    s = paper_scenario
    slot, discount, kernel = prepared(s.model, s.params)
    return SimpleNamespace(
        scenario=s, model=s.model, params=s.params, slot=slot, discount=discount, kernel=kernel
    )


@pytest.fixture(scope="session")
def paper_vi(paper_setup):
    """Value iteration on the reference scenario, with a partial-submodularity
    check on every 10th iterate collected along the way."""
    p = paper_setup
    submodular_checks = []
    q_buf = np.empty_like(p.kernel.cost)

    def hook(k, values):
        if k % 10:
            return
        backend.qfactor_fill(values, p.kernel.succ, p.kernel.prob, p.kernel.cost, p.discount, q_buf)
        rep = check_partial_submodular(p.kernel.space, q_buf, max_records=1)
        submodular_checks.append(
            SimpleNamespace(
                iteration=k,
                passed=rep.passed,
                n_violations=rep.n_violations,
                worst_excess=rep.worst_excess,
            )
        )

    t0 = time.perf_counter()
    values, policy, report = value_iteration(
        p.kernel,
        p.discount,
        epsilon=p.scenario.epsilon,
        max_iters=p.scenario.max_iters,
        iterate_hook=hook,
    )
    duration = time.perf_counter() - t0
    final_qfactor = qfactor_table(values, p.kernel, p.discount)
    return SimpleNamespace(
        values=values,
        policy=policy,
        report=report,
        duration=duration,
        submodular_checks=submodular_checks,
        final_qfactor=final_qfactor,
    )


@pytest.fixture(scope="session")
def paper_pi(paper_setup):
    p = paper_setup
    t0 = time.perf_counter()
    values, policy, report = policy_iteration(p.kernel, p.discount, epsilon=p.scenario.epsilon)
    return SimpleNamespace(
        values=values, policy=policy, report=report, duration=time.perf_counter() - t0
    )


@pytest.fixture(scope="session")
def paper_fh200(paper_setup):
    p = paper_setup
    t0 = time.perf_counter()
    values_seq, policy_seq = finite_horizon_values(p.kernel, p.discount, 200)
    return SimpleNamespace(
        values_seq=values_seq, policy_seq=policy_seq, duration=time.perf_counter() - t0
    )
