"""Finite state space, per-stage cost, and the sparse slotted transition kernel.

A system state is the triple (phase S, queue length Q, active servers W);
an action a in {0..M} is the number of servers active during the next slot.
Per slot at most one event happens: a job arrival (prob lambda_S * Delta,
blocked when the buffer is full), a job departure (prob a * mu * Delta when
the queue is non-empty; the freshly chosen server count serves immediately),
a phase shift (prob sigma_{S,S'} * Delta), or nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np

from .errors import InvalidSlot
from .model import MmppModel, SystemParams

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SysState:
    phase: int
    queue: int
    active: int


class StateSpace:
    """Bijective indexing of (phase, queue, active) triples.

    Ordering is phase-major, then queue, then active count:
    index = (phase * (B + 1) + queue) * (M + 1) + active.
    """

    def __init__(self, n_phases: int, buffer: int, n_servers: int):
        self.n_phases = int(n_phases)
        self.buffer = int(buffer)
        self.n_servers = int(n_servers)
        self.n_actions = self.n_servers + 1
        self.n_states = self.n_phases * (self.buffer + 1) * self.n_actions

    @classmethod
    def of(cls, model: MmppModel, params: SystemParams) -> "StateSpace":
        return cls(model.n_phases, params.buffer, params.n_servers)

    def __repr__(self):
        return (
            f"StateSpace(n_phases={self.n_phases}, buffer={self.buffer}, "
            f"n_servers={self.n_servers})"
        )

    def index(self, state: SysState) -> int:
        if not (
            0 <= state.phase < self.n_phases
            and 0 <= state.queue <= self.buffer
            and 0 <= state.active <= self.n_servers
        ):
            raise IndexError(f"{state} outside {self!r}")
        return (state.phase * (self.buffer + 1) + state.queue) * self.n_actions + state.active

    def decode(self, index: int) -> SysState:
        index = int(index)
        if not 0 <= index < self.n_states:
            raise IndexError(f"state index {index} outside {self!r}")
        active = index % self.n_actions
        rest = index // self.n_actions
        return SysState(rest // (self.buffer + 1), rest % (self.buffer + 1), active)

    def states(self) -> Iterator[SysState]:
        for phase in range(self.n_phases):
            for queue in range(self.buffer + 1):
                for active in range(self.n_actions):
                    yield SysState(phase, queue, active)

    def grid(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(S, Q, W) integer arrays aligned with the index order."""
        shape = (self.n_phases, self.buffer + 1, self.n_actions)
        s, q, w = np.indices(shape)
        return s.ravel(), q.ravel(), w.ravel()

    def cube(self, flat: np.ndarray) -> np.ndarray:
        """View a state-indexed array as a (phase, queue, active) cube."""
        return np.asarray(flat).reshape(self.n_phases, self.buffer + 1, self.n_actions)


def enumerate_states(model: MmppModel, params: SystemParams) -> list[SysState]:
    """All states in the documented stable order."""
    return list(StateSpace.of(model, params).states())


def stage_cost(state: SysState, action: int, params: SystemParams) -> float:
    """One-slot cost: switching energy for extra servers turned on, holding
    cost on the pre-transition queue, and running energy of the chosen
    server count.  Shutting servers down is free."""
    return (
        max(action - state.active, 0) * params.e_switch
        + params.delay_weight * state.queue
        + action * params.e_on
    )


def transition_distribution(
    state: SysState,
    action: int,
    model: MmppModel,
    params: SystemParams,
    slot: float,
) -> list[tuple[SysState, float]]:
    """Successor distribution of one slot under `action`.

    Zero-probability branches are omitted; the successor's active count always
    equals the action.  Branch order: arrival, departure, phase shifts in
    ascending target-phase order, self-loop.
    """
    lam = model.arrival_rates[state.phase]
    out: list[tuple[SysState, float]] = []
    used = 0.0

    if state.queue < params.buffer and lam > 0.0:
        p = lam * slot
        out.append((SysState(state.phase, state.queue + 1, action), p))
        used += p
    if state.queue > 0 and action > 0:
        p = action * params.service_rate * slot
        out.append((SysState(state.phase, state.queue - 1, action), p))
        used += p
    for target in range(model.n_phases):
        if target == state.phase:
            continue
        sigma = model.transition_rates[state.phase][target]
        if sigma > 0.0:
            p = sigma * slot
            out.append((SysState(target, state.queue, action), p))
            used += p

    p_self = 1.0 - used
    if p_self < -ROW_SUM_TOL or used > 1.0 + ROW_SUM_TOL:
        raise InvalidSlot(
            f"event probability mass {used!r} > 1 at state {state}, action {action}"
        )
    if p_self > 0.0:
        out.append((SysState(state.phase, state.queue, action), max(p_self, 0.0)))
    return out


@dataclass
class Kernel:
    """Materialized transition kernel and stage costs.

    Rows are (state, action) pairs, row = state * n_actions + action.  Each
    row stores at most n_phases + 2 successors in padded arrays (`succ`,
    `prob`); padding entries carry probability 0.  Column order is arrival,
    departure, phase shifts (ascending target), self-loop — the same order
    `transition_distribution` uses.
    """

    space: StateSpace
    succ: np.ndarray  # (n_states * n_actions, width) int64
    prob: np.ndarray  # (n_states * n_actions, width) float64
    cost: np.ndarray  # (n_states, n_actions) float64
    slot: float

    @property
    def n_rows(self) -> int:
        return self.succ.shape[0]

    def row(self, state_index: int, action: int) -> list[tuple[int, float]]:
        """Non-padding (successor index, probability) pairs of one row."""
        r = state_index * self.space.n_actions + action
        return [
            (int(s), float(p))
            for s, p in zip(self.succ[r], self.prob[r])
            if p > 0.0
        ]

    def row_sums(self) -> np.ndarray:
        return self.prob.sum(axis=1)

    def validate(self) -> None:
        if np.any(self.prob < 0.0) or np.any(self.prob > 1.0):
            raise InvalidSlot("a transition probability left [0, 1]")
        worst = float(np.max(np.abs(self.row_sums() - 1.0)))
        if worst > ROW_SUM_TOL:
            raise InvalidSlot(f"row sums deviate from 1 by up to {worst:g}")

    def dump(self, stream: TextIO) -> None:
        """Diagnostic dump, one row per (state, action).  Intended for small
        instances only; the output grows with n_states * n_actions."""
        space = self.space
        stream.write("state\tphase\tqueue\tactive\taction\tcost\tsuccessors\n")
        for idx in range(space.n_states):
            st = space.decode(idx)
            for a in range(space.n_actions):
                pairs = ",".join(f"{s}:{p:.17g}" for s, p in self.row(idx, a))
                stream.write(
                    f"{idx}\t{st.phase}\t{st.queue}\t{st.active}\t{a}"
                    f"\t{self.cost[idx, a]:.17g}\t{pairs}\n"
                )


def build_kernel(model: MmppModel, params: SystemParams, slot: float) -> Kernel:
    """Build the padded sparse kernel and the stage-cost table.

    Memory is proportional to n_states * n_actions * (n_phases + 2); a dense
    successor matrix would be hopeless at buffer sizes in the hundreds.
    """
    space = StateSpace.of(model, params)
    n_phases, buffer = space.n_phases, space.buffer
    n_states, n_actions = space.n_states, space.n_actions
    width = n_phases + 2

    lam = model.rate_array()
    mu = params.service_rate
    sigma = np.zeros((n_phases, n_phases))
    for i, row in enumerate(model.transition_rates):
        for j, rate in enumerate(row):
            if i != j:
                sigma[i, j] = rate

    s_grid, q_grid, w_grid = space.grid()

    # Neighbor phases of each phase, ascending.
    targets = np.array(
        [[j for j in range(n_phases) if j != i] for i in range(n_phases)], dtype=np.int64
    ).reshape(n_phases, n_phases - 1)

    succ = np.empty((n_states, n_actions, width), dtype=np.int64)
    prob = np.zeros((n_states, n_actions, width))
    cost = np.empty((n_states, n_actions))

    stride_q = n_actions  # index step when the queue moves by 1
    for a in range(n_actions):
        base = (s_grid * (buffer + 1) + q_grid) * n_actions + a  # (S, Q, a)

        can_arrive = q_grid < buffer
        p_arr = lam[s_grid] * slot * can_arrive
        succ[:, a, 0] = np.where(can_arrive, base + stride_q, base)
        prob[:, a, 0] = p_arr

        can_depart = (q_grid > 0) & (a > 0)
        p_dep = np.where(can_depart, a * mu * slot, 0.0)
        succ[:, a, 1] = np.where(can_depart, base - stride_q, base)
        prob[:, a, 1] = p_dep

        for k in range(n_phases - 1):
            tgt = targets[s_grid, k]
            prob[:, a, 2 + k] = sigma[s_grid, tgt] * slot
            succ[:, a, 2 + k] = (tgt * (buffer + 1) + q_grid) * n_actions + a

        p_self = 1.0 - prob[:, a, : width - 1].sum(axis=1)
        if p_self.min() < -ROW_SUM_TOL:
            raise InvalidSlot(
                f"self-loop probability {p_self.min()!r} < 0 under action {a}; "
                "the slot length was not validated"
            )
        succ[:, a, width - 1] = base
        prob[:, a, width - 1] = np.maximum(p_self, 0.0)

        cost[:, a] = (
            np.maximum(a - w_grid, 0) * params.e_switch
            + params.delay_weight * q_grid
            + a * params.e_on
        )

    kernel = Kernel(
        space=space,
        succ=np.ascontiguousarray(succ.reshape(n_states * n_actions, width)),
        prob=np.ascontiguousarray(prob.reshape(n_states * n_actions, width)),
        cost=cost,
        slot=float(slot),
    )
    kernel.validate()
    return kernel
