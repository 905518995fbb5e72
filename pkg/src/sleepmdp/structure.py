"""Policy/value structure checkers and queue-threshold extraction.

The checkers numerically verify, on solved instances, the structural facts
that make threshold control work: the optimal action is non-decreasing in the
queue (monotone), a chosen server count is kept once reached (hysteretic),
and the Q-factor has non-positive (queue, action) cross-differences (partial
submodularity), which is what forces monotonicity of the argmin.

Checker failures are data, not exceptions: every violation is reported.
Float comparisons use tolerances that scale with the magnitude of the
quantities compared (relative, never absolute-only); policy checks are exact
integer comparisons.

Interpretation note: on finite-buffer models the blocking edge genuinely
breaks the two inequality checks in a thin layer near Q = B (the Q-factor
cross-difference between the last two queue levels works out to
+r^2 * omega * lambda_S * mu * slot^2, and it compounds over solver sweeps),
while the policy checks still hold everywhere.  Expect partial_submodular and
value_difference_props reports with boundary-layer violations on any scenario
with arrivals and a reachable buffer limit; the README discusses this.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import NotMonotone
from .mdp import StateSpace

DEFAULT_RTOL = 1e-9


@dataclass
class StructureReport:
    """Outcome of one structural check: passed iff n_violations == 0.

    `violations` lists every violating tuple by default; checkers called in
    hot loops may cap the recorded list (`max_records`), in which case
    n_violations still carries the true count.
    """

    name: str
    passed: bool
    n_violations: int
    violations: list
    columns: tuple  # field names of one violation tuple
    tolerance: float | None
    checked: int
    worst_excess: float  # max violation beyond tolerance; <= 0 when passing

    def to_dict(self, max_violations: int | None = None) -> dict:
        viols = self.violations
        if max_violations is not None and len(viols) > max_violations:
            viols = viols[:max_violations]
        return {
            "name": self.name,
            "passed": self.passed,
            "n_violations": self.n_violations,
            "columns": list(self.columns),
            "violations": [list(v) for v in viols],
            "violations_truncated": len(viols) < self.n_violations,
            "tolerance": self.tolerance,
            "checked": self.checked,
            "worst_excess": self.worst_excess,
        }


def _report(
    name, violations, columns, tolerance, checked, worst_excess, n_violations=None
) -> StructureReport:
    n = len(violations) if n_violations is None else int(n_violations)
    return StructureReport(
        name=name,
        passed=n == 0,
        n_violations=n,
        violations=violations,
        columns=columns,
        tolerance=tolerance,
        checked=int(checked),
        worst_excess=float(worst_excess),
    )


def check_monotone(space: StateSpace, policy: np.ndarray) -> StructureReport:
    """The action must be non-decreasing in the queue along every
    (phase, active) slice.  Exact integer check."""
    cube = space.cube(np.asarray(policy, dtype=np.int64))
    diff = cube[:, 1:, :] - cube[:, :-1, :]
    bad = np.argwhere(diff < 0)
    violations = [
        (int(s), int(q) + 1, int(w), int(cube[s, q, w]), int(cube[s, q + 1, w]))
        for s, q, w in bad
    ]
    worst = float(-diff.min()) if diff.size and diff.min() < 0 else 0.0
    return _report(
        "monotone",
        violations,
        ("phase", "queue", "active", "prev_action", "action"),
        None,
        diff.size,
        worst,
    )


def check_hysteretic(space: StateSpace, policy: np.ndarray) -> StructureReport:
    """A mode the policy chooses must be kept once occupied:
    f(S, Q, f(S, Q, W)) == f(S, Q, W) for every state.  Exact check."""
    cube = space.cube(np.asarray(policy, dtype=np.int64))
    s_ix, q_ix, _ = np.indices(cube.shape)
    at_target = cube[s_ix, q_ix, cube]
    bad = np.argwhere(at_target != cube)
    violations = [
        (int(s), int(q), int(w), int(cube[s, q, w]), int(at_target[s, q, w]))
        for s, q, w in bad
    ]
    worst = float(np.max(np.abs(at_target - cube))) if violations else 0.0
    return _report(
        "hysteretic",
        violations,
        ("phase", "queue", "active", "action", "action_when_there"),
        None,
        cube.size,
        worst,
    )


def _stencil_scale(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    return np.maximum(np.maximum(np.abs(a), np.abs(b)), np.maximum(np.abs(c), np.abs(d)))


def check_partial_submodular(
    space: StateSpace,
    qfactor: np.ndarray,
    rtol: float = DEFAULT_RTOL,
    max_records: int | None = None,
) -> StructureReport:
    """Non-positive (queue, action) cross-differences of the Q-factor at every
    (phase, active): u(S,Q+1,W,a+1) - u(S,Q,W,a+1) <= u(S,Q+1,W,a) - u(S,Q,W,a).

    Adjacent pairs suffice: general (Q1 <= Q2, a1 >= a2) cross-differences
    telescope into sums of adjacent ones.  `max_records` caps only the
    recorded violation list, never the count.
    """
    u = np.asarray(qfactor, dtype=float).reshape(
        space.n_phases, space.buffer + 1, space.n_actions, space.n_actions
    )
    columns = ("phase", "queue", "active", "action", "cross_difference")
    dq = u[:, 1:, :, :] - u[:, :-1, :, :]
    cross = dq[..., 1:] - dq[..., :-1]
    if cross.size == 0:
        return _report("partial_submodular", [], columns, rtol, 0, 0.0)

    tol = rtol * _stencil_scale(
        u[:, 1:, :, 1:], u[:, :-1, :, 1:], u[:, 1:, :, :-1], u[:, :-1, :, :-1]
    )
    excess = cross - tol
    mask = excess > 0
    n_bad = int(np.count_nonzero(mask))
    bad = np.argwhere(mask)
    if max_records is not None:
        bad = bad[:max_records]
    violations = [
        (int(s), int(q) + 1, int(w), int(a) + 1, float(cross[s, q, w, a]))
        for s, q, w, a in bad.tolist()
    ]
    return _report(
        "partial_submodular",
        violations,
        columns,
        rtol,
        cross.size,
        float(excess.max()),
        n_violations=n_bad,
    )


def check_partial_submodular_exhaustive(
    space: StateSpace, qfactor: np.ndarray, rtol: float = DEFAULT_RTOL
) -> StructureReport:
    """Direct O(Q^2 a^2) version of the (queue, action) condition, for
    cross-checking the adjacent-difference implementation on small instances."""
    u = np.asarray(qfactor, dtype=float).reshape(
        space.n_phases, space.buffer + 1, space.n_actions, space.n_actions
    )
    violations = []
    checked = 0
    worst = -np.inf
    for s in range(space.n_phases):
        for w in range(space.n_actions):
            slice_u = u[s, :, w, :]  # (Q, a)
            for q1 in range(space.buffer + 1):
                for q2 in range(q1 + 1, space.buffer + 1):
                    for a2 in range(space.n_actions):
                        for a1 in range(a2 + 1, space.n_actions):
                            lhs = slice_u[q2, a1] - slice_u[q1, a1]
                            rhs = slice_u[q2, a2] - slice_u[q1, a2]
                            scale = max(
                                abs(slice_u[q2, a1]), abs(slice_u[q1, a1]),
                                abs(slice_u[q2, a2]), abs(slice_u[q1, a2]),
                            )
                            tol = rtol * scale
                            checked += 1
                            worst = max(worst, lhs - rhs - tol)
                            if lhs - rhs > tol:
                                violations.append((s, q1, q2, w, a1, a2, float(lhs - rhs)))
    return _report(
        "partial_submodular_exhaustive",
        violations,
        ("phase", "queue_lo", "queue_hi", "active", "action_hi", "action_lo", "cross_difference"),
        rtol,
        checked,
        worst if checked else 0.0,
    )


def check_value_difference_props(
    space: StateSpace, values_seq: Sequence[np.ndarray], rtol: float = DEFAULT_RTOL
) -> StructureReport:
    """Verify, for each value function in the sequence, that

    (ii)  queue increments shrink as more servers run:
          V(S,Q+1,W) - V(S,Q,W) is non-increasing in W, and
    (iii) queue increments are non-negative at W=0 and dominated one step up
          at W=M: 0 <= V'(S,Q,0) <= V'(S,Q+1,M).
    """
    violations = []
    checked = 0
    worst = -np.inf
    m_top = space.n_actions - 1
    for t, values in enumerate(values_seq, start=1):
        v = space.cube(np.asarray(values, dtype=float))
        dq = v[:, 1:, :] - v[:, :-1, :]  # (S, Q, W): V' over queue

        if dq.shape[2] > 1:
            cross = dq[:, :, 1:] - dq[:, :, :-1]
            tol = rtol * _stencil_scale(
                v[:, 1:, 1:], v[:, :-1, 1:], v[:, 1:, :-1], v[:, :-1, :-1]
            )
            excess = cross - tol
            checked += cross.size
            if cross.size:
                worst = max(worst, float(excess.max()))
            for s, q, w in np.argwhere(excess > 0):
                violations.append(
                    (t, "ii", int(s), int(q), int(w) + 1, float(cross[s, q, w]))
                )

        if dq.shape[1] > 0:
            d0 = dq[:, :, 0]
            tol0 = rtol * np.maximum(np.abs(v[:, 1:, 0]), np.abs(v[:, :-1, 0]))
            excess0 = -d0 - tol0
            checked += d0.size
            worst = max(worst, float(excess0.max()))
            for s, q in np.argwhere(excess0 > 0):
                violations.append((t, "iii_nonneg", int(s), int(q), 0, float(d0[s, q])))

        if dq.shape[1] > 1:
            gap = dq[:, :-1, 0] - dq[:, 1:, m_top]
            tolg = rtol * _stencil_scale(
                v[:, 1:-1, 0], v[:, :-2, 0], v[:, 2:, m_top], v[:, 1:-1, m_top]
            )
            excessg = gap - tolg
            checked += gap.size
            worst = max(worst, float(excessg.max()))
            for s, q in np.argwhere(excessg > 0):
                violations.append((t, "iii_cross", int(s), int(q), 0, float(gap[s, q])))

    return _report(
        "value_difference_props",
        violations,
        ("t", "property", "phase", "queue", "active", "magnitude"),
        rtol,
        checked,
        worst if checked else 0.0,
    )


def search_full_submodularity_violation(
    space: StateSpace,
    values: np.ndarray | None = None,
    qfactor: np.ndarray | None = None,
    rtol: float = DEFAULT_RTOL,
) -> dict | None:
    """Hunt for positive cross-differences outside the (queue, action) pair.

    Full lattice submodularity — what a Poisson-arrival argument would lean
    on — needs every coordinate pair.  Scanned here: (active, action) on the
    Q-factor, and (queue, active), (phase, queue), (phase, active) on the
    value function (phases in index order).  Returns the largest violation
    as a dict, or None if everything scanned is submodular within tolerance.
    """

    def cross2(arr: np.ndarray, ax1: int, ax2: int):
        hi_hi = arr
        for ax in (ax1, ax2):
            hi_hi = np.diff(hi_hi, axis=ax)
        return hi_hi

    candidates = []  # (excess, cross, pair, coords dict)

    def scan(arr: np.ndarray, ax1: int, ax2: int, pair: tuple, names: tuple):
        if arr.shape[ax1] < 2 or arr.shape[ax2] < 2:
            return
        cross = cross2(arr, ax1, ax2)
        # stencil scale: max |arr| over the 2x2 corner block
        sl_lo = [slice(None)] * arr.ndim
        sl_hi = [slice(None)] * arr.ndim
        sl_lo[ax1] = slice(None, -1)
        sl_hi[ax1] = slice(1, None)
        a_lo = np.abs(arr[tuple(sl_lo)])
        a_hi = np.abs(arr[tuple(sl_hi)])
        sl2_lo = [slice(None)] * arr.ndim
        sl2_hi = [slice(None)] * arr.ndim
        sl2_lo[ax2] = slice(None, -1)
        sl2_hi[ax2] = slice(1, None)
        scale = np.maximum(
            np.maximum(a_lo[tuple(sl2_lo)], a_lo[tuple(sl2_hi)]),
            np.maximum(a_hi[tuple(sl2_lo)], a_hi[tuple(sl2_hi)]),
        )
        excess = cross - rtol * scale
        if excess.size == 0 or excess.max() <= 0:
            return
        flat = int(np.argmax(excess))
        ix = np.unravel_index(flat, excess.shape)
        coords = {name: int(i) for name, i in zip(names, ix)}
        candidates.append((float(excess[ix]), float(cross[ix]), pair, coords))

    if qfactor is not None:
        u = np.asarray(qfactor, dtype=float).reshape(
            space.n_phases, space.buffer + 1, space.n_actions, space.n_actions
        )
        scan(u, 2, 3, ("active", "action"), ("phase", "queue", "active", "action"))

    if values is not None:
        v = space.cube(np.asarray(values, dtype=float))
        scan(v, 1, 2, ("queue", "active"), ("phase", "queue", "active"))
        scan(v, 0, 1, ("phase", "queue"), ("phase", "queue", "active"))
        scan(v, 0, 2, ("phase", "active"), ("phase", "queue", "active"))

    if not candidates:
        return None
    excess, cross, pair, coords = max(candidates, key=lambda c: c[0])
    return {
        "pair": list(pair),
        "at": coords,  # lower corner of the violating 2x2 block
        "cross_difference": cross,
        "excess_beyond_tolerance": excess,
        "tolerance": rtol,
    }


@dataclass
class ThresholdTable:
    """Queue thresholds of a monotone policy, per (phase, current servers).

    turn_on[S, W]  = smallest Q whose action exceeds W (-1: never);
    turn_off[S, W] = largest Q whose action is below W (-1: never).
    The k-indexed families generalize to jumps of k servers:
    turn_on_k[S, W, k] = smallest Q with action >= W + k, and
    turn_off_k[S, W, k] = largest Q with action <= W - k.
    `profile` stores the full action step profile, so the policy can be
    reconstructed exactly.
    """

    n_phases: int
    buffer: int
    n_servers: int
    turn_on: np.ndarray  # (N, M+1) int64
    turn_off: np.ndarray
    turn_on_k: np.ndarray  # (N, M+1, M+1), column k in 1..M
    turn_off_k: np.ndarray
    profile: np.ndarray  # (N, M+1, B+1) int64 actions

    def policy(self) -> np.ndarray:
        """Replay the stored step profile as a flat policy."""
        return np.ascontiguousarray(self.profile.transpose(0, 2, 1).reshape(-1))

    def rows(self) -> Iterator[tuple]:
        """(phase, active, k, turn_on_queue|None, turn_off_queue|None) rows,
        for every k that is reachable in at least one direction."""
        for s in range(self.n_phases):
            for w in range(self.n_servers + 1):
                for k in range(1, self.n_servers + 1):
                    up_possible = w + k <= self.n_servers
                    down_possible = w - k >= 0
                    if not (up_possible or down_possible):
                        continue
                    on = int(self.turn_on_k[s, w, k]) if up_possible else -1
                    off = int(self.turn_off_k[s, w, k]) if down_possible else -1
                    yield (s, w, k, None if on < 0 else on, None if off < 0 else off)


def extract_thresholds(space: StateSpace, policy: np.ndarray) -> ThresholdTable:
    """Threshold representation of a monotone policy.

    Monotonicity makes every {Q : f(S,Q,W) <= c} a down-set, so first-exceed /
    last-undershoot queue lengths characterize each (phase, active) slice.
    Raises NotMonotone otherwise (the report rides on the exception).
    """
    report = check_monotone(space, policy)
    if not report.passed:
        raise NotMonotone(
            f"policy has {report.n_violations} monotonicity violation(s); "
            "thresholds are undefined",
            report=report,
        )
    n, m = space.n_phases, space.n_servers
    cube = space.cube(np.asarray(policy, dtype=np.int64))
    profile = np.ascontiguousarray(cube.transpose(0, 2, 1))  # (N, M+1, B+1)

    turn_on_k = np.full((n, m + 1, m + 1), -1, dtype=np.int64)
    turn_off_k = np.full((n, m + 1, m + 1), -1, dtype=np.int64)
    for s in range(n):
        for w in range(m + 1):
            f = profile[s, w]
            for k in range(1, m + 1):
                if w + k <= m:
                    hits = np.nonzero(f >= w + k)[0]
                    if hits.size:
                        turn_on_k[s, w, k] = hits[0]
                if w - k >= 0:
                    hits = np.nonzero(f <= w - k)[0]
                    if hits.size:
                        turn_off_k[s, w, k] = hits[-1]

    if m >= 1:
        turn_on = turn_on_k[:, :, 1].copy()
        turn_off = turn_off_k[:, :, 1].copy()
    else:
        turn_on = np.full((n, 1), -1, dtype=np.int64)
        turn_off = np.full((n, 1), -1, dtype=np.int64)

    return ThresholdTable(
        n_phases=n,
        buffer=space.buffer,
        n_servers=m,
        turn_on=turn_on,
        turn_off=turn_off,
        turn_on_k=turn_on_k,
        turn_off_k=turn_off_k,
        profile=profile,
    )
