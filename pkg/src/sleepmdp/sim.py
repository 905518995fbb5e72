"""Slotted Monte-Carlo simulation of the controlled queue.

The simulator mirrors the slotted decision process exactly: same slot length,
same one-event-per-slot draw, stage cost charged on the pre-transition state.
One uniform random number is consumed per slot; the event bands, in order,
are arrival (a blocked arrival when the buffer is full), departure, phase
shifts in ascending target order, then nothing.

Randomness comes from numpy's counter-based Philox generator.  Replication i
of an experiment with master seed m uses SeedSequence((m, i)), so every
replication is an independent, platform-stable stream and a whole experiment
is reproducible from one integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import BadParameter
from .mdp import StateSpace, SysState
from .model import MmppModel, SystemParams
from .structure import ThresholdTable

Z99 = 2.5758293035489004  # two-sided 99% normal quantile
DEFAULT_TAIL_TOL = 1e-6
_BATCH_ROWS = 256

EVENT_ARRIVAL = "arrival"
EVENT_BLOCK = "block"
EVENT_DEPARTURE = "departure"
EVENT_SHIFT = "shift"
EVENT_NONE = "none"


@dataclass(frozen=True)
class SimConfig:
    """Replication plan for discounted-cost estimation.

    With horizon_slots unset, the horizon T is the smallest with
    r^T <= tail_tol, so truncation bias is bounded and reported.
    """

    initial_state: SysState | None = None
    replications: int = 10_000
    horizon_slots: int | None = None
    tail_tol: float = DEFAULT_TAIL_TOL
    seed: int = 0


@dataclass
class EpisodeResult:
    cost: float
    arrivals: int
    departures: int
    blocks: int
    phase_shifts: int
    turn_ons: int
    final_state: SysState
    horizon: int
    trace: list | None = None  # (t, S, Q, W, a, event, cost) rows when recorded


@dataclass
class SimReport:
    replications: int
    horizon: int
    tail_tol: float
    tail_actual: float  # r ** horizon
    bias_bound: float  # tail_actual * max stage cost / (1 - r)
    costs: np.ndarray  # per-replication discounted cost
    mean: float
    std_error: float
    ci99: tuple  # (lo, hi); contains the mean by construction
    counts: dict  # total event counts over all replications
    seed: int
    initial_state: SysState

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "horizon": self.horizon,
            "tail_tol": self.tail_tol,
            "tail_actual": self.tail_actual,
            "bias_bound": self.bias_bound,
            "mean": self.mean,
            "std_error": self.std_error,
            "ci99": [self.ci99[0], self.ci99[1]],
            "counts": self.counts,
            "seed": self.seed,
            "initial_state": [
                self.initial_state.phase,
                self.initial_state.queue,
                self.initial_state.active,
            ],
        }


def replication_seed(master_seed: int, replication: int) -> np.random.SeedSequence:
    """Seed of one replication's Philox stream."""
    return np.random.SeedSequence((int(master_seed), int(replication)))


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def default_initial_state(model: MmppModel) -> SysState:
    """Empty, fully asleep system in the most idle phase (smallest arrival
    rate; the OFF phase when there is one)."""
    return SysState(int(np.argmin(model.rate_array())), 0, 0)


def _shift_arrays(model: MmppModel, slot: float):
    n = model.n_phases
    shift_p = np.zeros((n, max(n - 1, 0)))
    shift_to = np.zeros((n, max(n - 1, 0)), dtype=np.int64)
    for s in range(n):
        targets = [j for j in range(n) if j != s]
        for k, j in enumerate(targets):
            shift_to[s, k] = j
            shift_p[s, k] = model.transition_rates[s][j] * slot
    return shift_p, shift_to


def make_baseline_policy(
    space: StateSpace,
    kind: str,
    *,
    queue_threshold: int | None = None,
    servers_on: int | None = None,
    table: ThresholdTable | None = None,
) -> np.ndarray:
    """Reference policies for comparison.

    kinds: "always_on", "always_off", "n_policy" (wake `servers_on` servers
    once the queue reaches `queue_threshold`, keep them while jobs remain,
    sleep everything when the queue empties), and "from_threshold_table"
    (replay an extracted ThresholdTable's step profile).
    """
    if kind == "always_on":
        return np.full(space.n_states, space.n_servers, dtype=np.int64)
    if kind == "always_off":
        return np.zeros(space.n_states, dtype=np.int64)
    if kind == "n_policy":
        if queue_threshold is None or servers_on is None:
            raise BadParameter("n_policy needs queue_threshold and servers_on")
        if not 1 <= queue_threshold <= space.buffer:
            raise BadParameter(
                f"queue_threshold {queue_threshold} outside 1..{space.buffer}"
            )
        if not 1 <= servers_on <= space.n_servers:
            raise BadParameter(f"servers_on {servers_on} outside 1..{space.n_servers}")
        _, q, w = space.grid()
        wake = (q >= queue_threshold) | ((w > 0) & (q > 0))
        return np.where(wake, np.int64(servers_on), np.int64(0))
    if kind == "from_threshold_table":
        if table is None:
            raise BadParameter("from_threshold_table needs a ThresholdTable")
        if (
            table.n_phases != space.n_phases
            or table.buffer != space.buffer
            or table.n_servers != space.n_servers
        ):
            raise BadParameter("threshold table does not match the state space")
        return table.policy()
    raise BadParameter(f"unknown baseline kind {kind!r}")


def simulate_episode(
    policy: np.ndarray,
    model: MmppModel,
    params: SystemParams,
    slot: float,
    discount: float,
    horizon: int,
    seed,
    initial_state: SysState | None = None,
    record_trace: bool = False,
) -> EpisodeResult:
    """One replication, simulated slot by slot (readable reference path).

    Deterministic given the seed; consumes exactly `horizon` uniforms in slot
    order, so it reproduces one row of the batched fast path bit for bit.
    """
    if horizon < 1:
        raise BadParameter("horizon must be >= 1")
    space = StateSpace.of(model, params)
    policy = np.asarray(policy, dtype=np.int64)
    state = initial_state if initial_state is not None else default_initial_state(model)

    arrival_p = model.rate_array() * slot
    depart_p = params.service_rate * slot
    shift_p, shift_to = _shift_arrays(model, slot)
    uniforms = _generator(seed).random(horizon)

    s, q, w = state.phase, state.queue, state.active
    disc, total = 1.0, 0.0
    arrivals = departures = blocks = shifts = turnons = 0
    trace = [] if record_trace else None

    for t in range(horizon):
        a = int(policy[(s * (space.buffer + 1) + q) * space.n_actions + w])
        turn = max(a - w, 0)
        step_cost = params.e_switch * turn + params.delay_weight * q + params.e_on * a
        total = total + disc * step_cost
        turnons += turn

        u = uniforms[t]
        x = arrival_p[s]
        event = EVENT_NONE
        if u < x:
            if q >= space.buffer:
                blocks += 1
                event = EVENT_BLOCK
            else:
                q += 1
                arrivals += 1
                event = EVENT_ARRIVAL
        else:
            if q > 0:
                x = x + depart_p * a
            if u < x:
                q -= 1
                departures += 1
                event = EVENT_DEPARTURE
            else:
                for j in range(shift_to.shape[1]):
                    x = x + shift_p[s, j]
                    if u < x:
                        s = int(shift_to[s, j])
                        shifts += 1
                        event = f"{EVENT_SHIFT}->{s}"
                        break
        if record_trace:
            trace.append((t + 1, state.phase, state.queue, state.active, a, event, step_cost))
        w = a
        disc = disc * discount
        state = SysState(s, q, w)

    return EpisodeResult(
        cost=total,
        arrivals=arrivals,
        departures=departures,
        blocks=blocks,
        phase_shifts=shifts,
        turn_ons=turnons,
        final_state=SysState(s, q, w),
        horizon=horizon,
        trace=trace,
    )


def write_trace(stream, episode: EpisodeResult) -> None:
    """Dump a recorded per-slot trace as tab-separated text."""
    if episode.trace is None:
        raise BadParameter("episode was simulated without record_trace=True")
    stream.write("t\tphase\tqueue\tactive\taction\tevent\tcost\n")
    for t, s, q, w, a, event, cost in episode.trace:
        stream.write(f"{t}\t{s}\t{q}\t{w}\t{a}\t{event}\t{cost:.17g}\n")


def discounted_horizon(discount: float, tail_tol: float) -> int:
    """Smallest T with discount^T <= tail_tol."""
    if not 0 < tail_tol < 1:
        raise BadParameter("tail_tol must be in (0, 1)")
    if discount <= 0.0:
        return 1
    return max(1, math.ceil(math.log(tail_tol) / math.log(discount)))


def max_stage_cost(params: SystemParams) -> float:
    """Largest possible one-slot cost (full buffer, all servers woken)."""
    m = params.n_servers
    return params.delay_weight * params.buffer + m * (params.e_switch + params.e_on)


def estimate_discounted_cost(
    policy: np.ndarray,
    model: MmppModel,
    params: SystemParams,
    slot: float,
    discount: float,
    config: SimConfig,
) -> SimReport:
    """Monte-Carlo estimate of the discounted cost under `policy`.

    Independent replications with per-replication seeds derived from the
    master seed; identical results whether replications run one by one or in
    batches.  The truncation-bias bound r^T * c_max / (1 - r) is reported
    alongside the 99% confidence interval.
    """
    if config.replications < 2:
        raise BadParameter("need at least 2 replications for a standard error")
    space = StateSpace.of(model, params)
    policy = np.ascontiguousarray(np.asarray(policy, dtype=np.int64))
    start = (
        config.initial_state
        if config.initial_state is not None
        else default_initial_state(model)
    )
    horizon = (
        int(config.horizon_slots)
        if config.horizon_slots is not None
        else discounted_horizon(discount, config.tail_tol)
    )
    if horizon < 1:
        raise BadParameter("horizon must be >= 1")

    arrival_p = model.rate_array() * slot
    depart_p = params.service_rate * slot
    shift_p, shift_to = _shift_arrays(model, slot)

    n = config.replications
    costs = np.empty(n)
    counts = np.zeros(5, dtype=np.int64)

    done = 0
    while done < n:
        rows = min(_BATCH_ROWS, n - done)
        uniforms = np.empty((rows, horizon))
        for i in range(rows):
            uniforms[i] = _generator(replication_seed(config.seed, done + i)).random(horizon)
        s0 = np.full(rows, start.phase, dtype=np.int64)
        q0 = np.full(rows, start.queue, dtype=np.int64)
        w0 = np.full(rows, start.active, dtype=np.int64)
        out_cost = np.empty(rows)
        out_counts = np.empty((rows, 5), dtype=np.int64)
        out_final = np.empty((rows, 3), dtype=np.int64)
        backend.run_episodes(
            policy,
            arrival_p,
            depart_p,
            shift_p,
            shift_to,
            space.buffer,
            space.n_servers,
            params.e_switch,
            params.e_on,
            params.delay_weight,
            float(discount),
            s0,
            q0,
            w0,
            uniforms,
            out_cost,
            out_counts,
            out_final,
        )
        costs[done : done + rows] = out_cost
        counts += out_counts.sum(axis=0)
        done += rows

    mean = float(costs.mean())
    std_error = float(costs.std(ddof=1) / math.sqrt(n))
    tail_actual = float(discount**horizon)
    bias_bound = (
        tail_actual * max_stage_cost(params) / (1.0 - discount) if discount < 1.0 else math.inf
    )
    return SimReport(
        replications=n,
        horizon=horizon,
        tail_tol=config.tail_tol,
        tail_actual=tail_actual,
        bias_bound=bias_bound,
        costs=costs,
        mean=mean,
        std_error=std_error,
        ci99=(mean - Z99 * std_error, mean + Z99 * std_error),
        counts={
            "arrivals": int(counts[0]),
            "departures": int(counts[1]),
            "blocks": int(counts[2]),
            "phase_shifts": int(counts[3]),
            "turn_ons": int(counts[4]),
        },
        seed=config.seed,
        initial_state=start,
    )


def classify_events(
    state: SysState,
    action: int,
    model: MmppModel,
    params: SystemParams,
    slot: float,
    uniforms: np.ndarray,
) -> np.ndarray:
    """Event drawn in a fixed (state, action) context for each uniform.

    Codes: 0 arrival (a block when the buffer is full), 1 departure,
    2 + k shift to the k-th neighbor phase, -1 nothing.  Uses the same band
    arithmetic as the simulators; meant for frequency tests and diagnostics.
    """
    u = np.asarray(uniforms, dtype=float)
    out = np.full(u.shape, -1, dtype=np.int64)
    x = model.arrival_rates[state.phase] * slot
    taken = u < x
    out[taken] = 0
    if state.queue > 0:
        x = x + params.service_rate * slot * action
    hit = ~taken & (u < x)
    out[hit] = 1
    taken |= hit
    k = 0
    for j in range(model.n_phases):
        if j == state.phase:
            continue
        x = x + model.transition_rates[state.phase][j] * slot
        hit = ~taken & (u < x)
        out[hit] = 2 + k
        taken |= hit
        k += 1
    return out
