"""Arrival model, system parameters, and slot discretization.

Arrivals follow a Markov-modulated Poisson process (MMPP): an N-phase
continuous-time Markov chain where phase S emits jobs at Poisson rate
lambda_S.  All rates are per second, slot lengths are seconds, and phases
are 0-based everywhere in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ReducibleChain, ScenarioError, SlotTooLarge, Violation

AUTO_SLOT = "auto"
DEFAULT_SLOT_SAFETY = 0.9


@dataclass(frozen=True)
class MmppModel:
    """MMPP arrival process: per-phase Poisson rates plus phase-transition rates.

    `transition_rates[i][j]` is the rate of jumping from phase i to phase j
    (off-diagonal entries only; the generator diagonal -sigma_i is implied by
    the requirement that rows sum to zero).  With a single phase the process
    degenerates to plain Poisson arrivals.
    """

    arrival_rates: tuple
    transition_rates: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "arrival_rates", tuple(float(x) for x in self.arrival_rates)
        )
        object.__setattr__(
            self,
            "transition_rates",
            tuple(tuple(float(x) for x in row) for row in self.transition_rates),
        )

    @property
    def n_phases(self) -> int:
        return len(self.arrival_rates)

    def rate_array(self) -> np.ndarray:
        return np.asarray(self.arrival_rates, dtype=float)

    def generator(self) -> np.ndarray:
        """Full N x N generator matrix with the implied diagonal."""
        n = self.n_phases
        gen = np.zeros((n, n))
        for i, row in enumerate(self.transition_rates):
            for j, rate in enumerate(row):
                if i != j:
                    gen[i, j] = rate
        gen[np.diag_indices(n)] = -gen.sum(axis=1)
        return gen

    def exit_rates(self) -> np.ndarray:
        """Total rate sigma_i of leaving each phase."""
        return -np.diag(self.generator())


@dataclass(frozen=True)
class SystemParams:
    """Server-fleet and cost parameters.

    Exactly one of `discount_factor` (per-slot r in [0, 1)) and
    `discount_rate` (continuous rate beta in 1/s, converted as exp(-beta*slot))
    must be set.  `slot` is an explicit slot length in seconds or "auto".
    """

    n_servers: int
    service_rate: float  # mu: jobs/s per active server (1 / mean service time)
    buffer: int
    e_switch: float  # joules per server turn-on
    e_on: float  # joules per active server per slot
    delay_weight: float  # omega: cost per queued job per slot
    discount_factor: float | None = None
    discount_rate: float | None = None
    slot: float | str = AUTO_SLOT


def _check_nonneg(violations: list, code: str, field: str, value) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        violations.append(Violation(code, field, f"must be a finite value >= 0, got {value!r}"))


def validation_errors(model: MmppModel, params: SystemParams) -> list[Violation]:
    """Collect every invariant violation in (model, params); empty means valid."""
    v: list[Violation] = []

    n = model.n_phases
    if n < 1:
        v.append(Violation("EmptyPhaseSet", "arrival_rates", "at least one phase is required"))
    for i, lam in enumerate(model.arrival_rates):
        _check_nonneg(v, "NegativeRate", f"arrival_rates[{i}]", lam)

    rows = model.transition_rates
    if len(rows) != n or any(len(row) != n for row in rows):
        v.append(
            Violation(
                "ShapeMismatch",
                "transition_rates",
                f"must be a {n}x{n} matrix to match {n} arrival phase(s)",
            )
        )
    else:
        for i, row in enumerate(rows):
            for j, rate in enumerate(row):
                if i != j:
                    _check_nonneg(v, "NegativeRate", f"transition_rates[{i}][{j}]", rate)

    if params.n_servers < 1:
        v.append(Violation("BadServerCount", "n_servers", "need at least one server"))
    if params.buffer < 1:
        v.append(Violation("BadBuffer", "buffer", "buffer must hold at least one job"))
    if not (math.isfinite(params.service_rate) and params.service_rate > 0):
        v.append(Violation("NegativeRate", "service_rate", "service rate must be > 0"))
    _check_nonneg(v, "NegativeRate", "e_switch", params.e_switch)
    _check_nonneg(v, "NegativeRate", "e_on", params.e_on)
    _check_nonneg(v, "NegativeRate", "delay_weight", params.delay_weight)

    r, beta = params.discount_factor, params.discount_rate
    if (r is None) == (beta is None):
        v.append(
            Violation(
                "BadDiscount",
                "discount_factor/discount_rate",
                "exactly one of the per-slot factor and the continuous rate must be given",
            )
        )
    elif r is not None and not (math.isfinite(r) and 0.0 <= r < 1.0):
        v.append(Violation("BadDiscount", "discount_factor", f"need r in [0, 1), got {r!r}"))
    elif beta is not None and not (math.isfinite(beta) and beta > 0.0):
        v.append(
            Violation(
                "BadDiscount",
                "discount_rate",
                f"continuous rate must be > 0 (0 would give r = 1), got {beta!r}",
            )
        )

    slot = params.slot
    if slot != AUTO_SLOT and not (
        isinstance(slot, (int, float)) and math.isfinite(slot) and slot > 0
    ):
        v.append(Violation("BadSlot", "slot", f'must be "auto" or a positive length in s, got {slot!r}'))

    return v


def validate_model(model: MmppModel, params: SystemParams):
    """Return (model, params) unchanged if every invariant holds.

    Raises ScenarioError carrying the complete list of violations otherwise.
    """
    violations = validation_errors(model, params)
    if violations:
        raise ScenarioError(violations)
    return model, params


@dataclass(frozen=True)
class PhaseStats:
    stationary: np.ndarray  # pi over phases, sums to 1
    mean_arrival_rate: float  # sum_S pi_S * lambda_S


def _strongly_connected(gen: np.ndarray) -> bool:
    n = gen.shape[0]
    adj = gen > 0.0

    def reaches_all(transpose: bool) -> bool:
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            nbrs = np.nonzero(adj[:, i] if transpose else adj[i])[0]
            for j in nbrs:
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        return bool(seen.all())

    return reaches_all(False) and reaches_all(True)


def phase_statistics(model: MmppModel) -> PhaseStats:
    """Stationary phase distribution pi (pi @ R = 0, sum pi = 1) and the
    long-run mean arrival rate.  Requires an irreducible phase chain."""
    n = model.n_phases
    lam = model.rate_array()
    if n == 1:
        return PhaseStats(np.ones(1), float(lam[0]))

    gen = model.generator()
    if not _strongly_connected(gen):
        raise ReducibleChain(
            "phase chain is not irreducible; the stationary distribution is not unique"
        )

    a = gen.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()
    return PhaseStats(pi, float(pi @ lam))


def _rate_bound(model: MmppModel, params: SystemParams) -> float:
    """max_S lambda_S + M*mu + max_S sigma_S: the worst-case total event rate."""
    lam_max = float(max(model.arrival_rates))
    sigma_max = float(np.max(model.exit_rates())) if model.n_phases > 1 else 0.0
    return lam_max + params.n_servers * params.service_rate + sigma_max


def choose_slot_duration(
    model: MmppModel, params: SystemParams, safety: float = DEFAULT_SLOT_SAFETY
) -> float:
    """Pick (or validate) the slot length Delta.

    The slotted chain is a valid probability model iff every state/action's
    total event probability stays <= 1, i.e. Delta * (max_S lambda_S + M*mu +
    max_S sigma_S) <= 1.  With slot="auto" this returns safety / rate_bound,
    which always satisfies the bound; an explicit slot is returned unchanged
    after the same check, otherwise SlotTooLarge reports the worst case and
    the largest admissible slot.
    """
    if not 0.0 < safety <= 1.0:
        raise ValueError(f"safety factor must lie in (0, 1], got {safety!r}")
    bound = _rate_bound(model, params)
    if params.slot == AUTO_SLOT:
        return safety / bound

    slot = float(params.slot)
    mass = slot * bound
    if mass > 1.0:
        lam = model.rate_array()
        exits = model.exit_rates()
        worst_phase = int(np.argmax(lam + exits))
        max_slot = 1.0 / bound
        raise SlotTooLarge(
            f"slot {slot:g} s gives total event probability {mass:.6g} > 1 in the "
            f"worst case (phase {worst_phase}, queue in the interior, all W={params.n_servers} "
            f"servers serving); the largest admissible slot is {max_slot:.6g} s",
            max_slot=max_slot,
        )
    return slot


def discount_for_slot(params: SystemParams, slot: float) -> float:
    """Per-slot discount factor: the literal per-slot value if given, else
    exp(-beta * slot) from the continuous rate."""
    if params.discount_factor is not None:
        return float(params.discount_factor)
    r = math.exp(-float(params.discount_rate) * float(slot))
    if r >= 1.0:
        raise ScenarioError(
            [
                Violation(
                    "BadDiscount",
                    "discount_rate",
                    f"rate {params.discount_rate!r} is too small for slot {slot:g} s: "
                    "the per-slot factor rounds to 1",
                )
            ]
        )
    return r


def discretize(
    model: MmppModel, params: SystemParams, safety: float = DEFAULT_SLOT_SAFETY
) -> tuple[float, float]:
    """Convenience: validated (slot, per-slot discount) pair."""
    slot = choose_slot_duration(model, params, safety=safety)
    return slot, discount_for_slot(params, slot)
