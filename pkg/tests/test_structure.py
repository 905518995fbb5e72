"""Structure checkers and threshold extraction."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sleepmdp import (
    NotMonotone,
    StateSpace,
    check_hysteretic,
    check_monotone,
    check_partial_submodular,
    check_partial_submodular_exhaustive,
    check_value_difference_props,
    extract_thresholds,
    make_baseline_policy,
    qfactor_table,
    search_full_submodularity_violation,
    value_iteration,
)

from conftest import ipp_instance, prepared


def cube_policy(space, fill):
    cube = np.zeros((space.n_phases, space.buffer + 1, space.n_actions), dtype=np.int64)
    cube[...] = fill
    return cube


class TestMonotone:
    def test_constant_policy_passes(self):
        space = StateSpace(2, 6, 3)
        policy = np.full(space.n_states, 2, dtype=np.int64)
        assert check_monotone(space, policy).passed

    def test_planted_drop_reported(self):
        space = StateSpace(1, 6, 3)
        cube = cube_policy(space, 0)
        cube[0, 3, 1] = 2
        cube[0, 4, 1] = 1
        cube[0, 5, 1] = 2
        cube[0, 6, 1] = 2
        report = check_monotone(space, cube.reshape(-1))
        assert not report.passed
        assert (0, 4, 1, 2, 1) in report.violations  # action dropped 2 -> 1 at queue 4

    def test_exactness_no_tolerance(self):
        assert check_monotone(StateSpace(1, 1, 1), np.array([0, 0, 1, 1])).tolerance is None


class TestHysteretic:
    def test_identity_in_active_passes(self):
        space = StateSpace(2, 5, 3)
        _, _, w = space.grid()
        assert check_hysteretic(space, w.astype(np.int64)).passed

    def test_planted_chain_reported(self):
        space = StateSpace(1, 2, 4)
        cube = cube_policy(space, 0)
        cube[0, 1, 2] = 3  # from W=2 choose 3 ...
        cube[0, 1, 3] = 4  # ... but from W=3 choose 4: not kept
        report = check_hysteretic(space, cube.reshape(-1))
        assert not report.passed
        assert (0, 1, 2, 3, 4) in report.violations

    def test_solved_policy_hysteretic(self):
        model, params = ipp_instance()
        _, discount, kernel = prepared(model, params)
        _, policy, _ = value_iteration(kernel, discount, epsilon=1e-8)
        assert check_hysteretic(kernel.space, policy).passed


class TestPartialSubmodular:
    def test_separable_passes_with_zero_slack(self):
        # dyadic coefficients keep the separable cross-differences exactly zero
        space = StateSpace(2, 5, 3)
        s, q, w = space.grid()
        actions = np.arange(space.n_actions)
        u = 0.75 * q[:, None] + 1.25 * actions[None, :]
        report = check_partial_submodular(space, u, rtol=0.0)
        assert report.passed

    def test_planted_violation_reported(self):
        space = StateSpace(1, 4, 2)
        u = np.zeros((space.n_states, space.n_actions))
        cube = u.reshape(space.n_phases, space.buffer + 1, space.n_actions, space.n_actions)
        cube[0, 3, 1, 2] += 1.0  # lone bump creates a positive (queue, action) cross-difference
        report = check_partial_submodular(space, u, rtol=1e-12)
        assert not report.passed
        assert any(v[:4] == (0, 3, 1, 2) for v in report.violations)
        assert report.worst_excess == pytest.approx(1.0, rel=1e-9)

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_adjacent_equivalent_to_exhaustive(self, seed):
        # Integer-valued tables make the telescoping identity exact in floats.
        rng = np.random.default_rng(seed)
        space = StateSpace(1, 4, 3)
        u = rng.integers(-3, 4, size=(space.n_states, space.n_actions)).astype(float)
        fast = check_partial_submodular(space, u, rtol=0.0)
        slow = check_partial_submodular_exhaustive(space, u, rtol=0.0)
        assert fast.passed == slow.passed


class TestValueDifferenceProps:
    def test_zero_values_pass(self):
        space = StateSpace(2, 5, 3)
        assert check_value_difference_props(space, [np.zeros(space.n_states)]).passed

    def test_one_step_basis_passes_with_equalities(self):
        model, params = ipp_instance()
        _, _, kernel = prepared(model, params)
        space = kernel.space
        _, q_grid, _ = space.grid()
        v1 = params.delay_weight * q_grid.astype(float)  # the one-step optimum
        report = check_value_difference_props(space, [v1])
        assert report.passed

    def test_planted_violation_fails(self):
        space = StateSpace(1, 4, 2)
        _, q, w = space.grid()
        v = q.astype(float) * (1.0 + 0.5 * w)  # increments grow with active count
        report = check_value_difference_props(space, [v])
        assert not report.passed
        assert any(item[1] == "ii" for item in report.violations)


class TestFullSubmodularitySearch:
    def test_separable_finds_nothing(self):
        space = StateSpace(2, 4, 3)
        s, q, w = space.grid()
        actions = np.arange(space.n_actions)
        u = q[:, None] * 1.0 + actions[None, :] * 2.0
        v = (s + q + w).astype(float)
        assert search_full_submodularity_violation(space, values=None, qfactor=u) is None
        assert search_full_submodularity_violation(space, values=v) is None

    def test_planted_qfactor_violation_found(self):
        space = StateSpace(1, 3, 2)
        u = np.zeros((space.n_states, space.n_actions))
        cube = u.reshape(1, 4, 3, 3)
        cube[0, 1, 2, 2] += 2.0  # (active, action) cross-difference turns positive
        hit = search_full_submodularity_violation(space, qfactor=u, rtol=1e-12)
        assert hit is not None
        assert hit["pair"] == ["active", "action"]
        assert hit["cross_difference"] == pytest.approx(2.0)
        assert hit["at"] == {"phase": 0, "queue": 1, "active": 1, "action": 1}

    def test_planted_value_violation_found(self):
        space = StateSpace(2, 3, 1)
        v = np.zeros(space.n_states)
        cube = space.cube(v)
        cube[1, 2, 1] += 3.0
        hit = search_full_submodularity_violation(space, values=v, rtol=1e-12)
        assert hit is not None
        assert hit["cross_difference"] == pytest.approx(3.0)


class TestThresholds:
    def test_step_profile_example(self):
        space = StateSpace(1, 5, 2)
        cube = np.zeros((1, 6, 3), dtype=np.int64)
        cube[0, :, 0] = [0, 0, 0, 1, 1, 2]
        table = extract_thresholds(space, cube.reshape(-1))
        assert table.turn_on[0, 0] == 3
        assert table.turn_on_k[0, 0, 2] == 5  # first queue reaching two extra servers

    def test_constant_policy_has_no_thresholds(self):
        space = StateSpace(1, 5, 3)
        _, _, w = space.grid()
        table = extract_thresholds(space, w.astype(np.int64))
        assert np.all(table.turn_on == -1)
        assert np.all(table.turn_off == -1)

    def test_non_monotone_rejected(self):
        space = StateSpace(1, 4, 2)
        cube = cube_policy(space, 0)
        cube[0, 1, 0] = 2
        cube[0, 2, 0] = 1
        with pytest.raises(NotMonotone) as err:
            extract_thresholds(space, cube.reshape(-1))
        assert err.value.report is not None

    def test_profile_reconstructs_policy_exactly(self):
        model, params = ipp_instance()
        _, discount, kernel = prepared(model, params)
        _, policy, _ = value_iteration(kernel, discount, epsilon=1e-8)
        table = extract_thresholds(kernel.space, policy)
        assert np.array_equal(table.policy(), policy)
        replay = make_baseline_policy(kernel.space, "from_threshold_table", table=table)
        assert np.array_equal(replay, policy)

    def test_hysteresis_gap_on_solved_policy(self):
        model, params = ipp_instance(buffer=12, n_servers=4)
        _, discount, kernel = prepared(model, params)
        _, policy, _ = value_iteration(kernel, discount, epsilon=1e-8)
        assert check_monotone(kernel.space, policy).passed
        assert check_hysteretic(kernel.space, policy).passed
        table = extract_thresholds(kernel.space, policy)
        both = (table.turn_on >= 0) & (table.turn_off >= 0)
        assert np.all(table.turn_off[both] < table.turn_on[both])

    def test_rows_cover_reachable_k(self):
        space = StateSpace(1, 3, 2)
        _, _, w = space.grid()
        table = extract_thresholds(space, w.astype(np.int64))
        rows = list(table.rows())
        assert all(1 <= k <= 2 for _, _, k, _, _ in rows)
        assert all(on is None and off is None for _, _, _, on, off in rows)
