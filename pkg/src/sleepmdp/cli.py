"""Command-line interface: scenario files in, solution / verification /
simulation artifacts out.

A scenario is one self-contained JSON document (keys are unit-suffixed and
unknown keys are rejected), so every experiment is reproducible from a single
file.  Every output file carries a header with the tool version, the config
hash, and the slot length and per-slot discount actually used.

Exit codes: 0 success, 2 config/validation error, 3 slot too large,
4 solver did not converge (artifacts still written, flagged), 5 a required
structural check failed, 6 bad policy/simulation parameter.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    BadParameter,
    ConfigError,
    NotMonotone,
    ScenarioError,
    SlotTooLarge,
)
from .mdp import StateSpace, SysState, build_kernel
from .model import (
    AUTO_SLOT,
    MmppModel,
    SystemParams,
    choose_slot_duration,
    discount_for_slot,
    validate_model,
)
from .sim import (
    SimConfig,
    default_initial_state,
    estimate_discounted_cost,
    make_baseline_policy,
)
from .solver import finite_horizon_values, policy_iteration, qfactor_table, value_iteration
from .structure import (
    check_hysteretic,
    check_monotone,
    check_partial_submodular,
    check_value_difference_props,
    extract_thresholds,
    search_full_submodularity_violation,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SLOT = 3
EXIT_NOT_CONVERGED = 4
EXIT_STRUCTURE = 5
EXIT_BAD_PARAMETER = 6

VERIFY_HORIZON = 200  # finite-horizon sequence length checked by `verify`


@dataclass
class Scenario:
    model: MmppModel
    params: SystemParams
    algorithm: str = "vi"
    epsilon: float = 1e-6
    max_iters: int = 1_000_000
    sim: SimConfig = SimConfig()
    output_dir: str = "out"
    description: str = ""


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def _expect(problems, section, data, key, types, required=False, default=None):
    if key not in data:
        if required:
            problems.append(f"{section}: missing required key {key!r}")
        return default
    value = data[key]
    if not isinstance(value, types):
        problems.append(f"{section}.{key}: unexpected type {type(value).__name__}")
        return default
    return value


def _reject_unknown(problems, section, data, allowed):
    for key in data:
        if key not in allowed:
            problems.append(f"{section}: unknown key {key!r}")


def parse_scenario(doc: dict) -> Scenario:
    """Strictly parse a scenario document; collects every problem before
    raising ConfigError, and runs full model/parameter validation."""
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise ConfigError(["top level: expected an object"])

    _reject_unknown(
        problems, "top level", doc,
        {"description", "model", "params", "solver", "sim", "output_dir"},
    )
    description = _expect(problems, "top level", doc, "description", str, default="")
    output_dir = _expect(problems, "top level", doc, "output_dir", str, default="out")

    model_doc = _expect(problems, "top level", doc, "model", dict, required=True, default={})
    _reject_unknown(problems, "model", model_doc, {"arrival_rates_per_s", "transition_rates_per_s"})
    rates = _expect(problems, "model", model_doc, "arrival_rates_per_s", list, required=True, default=[])
    trans = _expect(problems, "model", model_doc, "transition_rates_per_s", list, required=True, default=[])
    if not all(isinstance(x, (int, float)) for x in rates):
        problems.append("model.arrival_rates_per_s: entries must be numbers")
        rates = []
    if not all(isinstance(row, list) and all(isinstance(x, (int, float)) for x in row) for row in trans):
        problems.append("model.transition_rates_per_s: must be a matrix of numbers")
        trans = [[0.0] * len(rates) for _ in rates]

    p_doc = _expect(problems, "top level", doc, "params", dict, required=True, default={})
    _reject_unknown(
        problems, "params", p_doc,
        {
            "n_servers", "service_rate_per_s", "mean_service_time_s", "buffer",
            "e_switch_j", "e_on_j_per_slot", "delay_weight_per_job_slot",
            "discount_factor_per_slot", "discount_rate_per_s", "slot_s",
        },
    )
    n_servers = _expect(problems, "params", p_doc, "n_servers", int, required=True, default=1)
    buffer = _expect(problems, "params", p_doc, "buffer", int, required=True, default=1)
    e_switch = _expect(problems, "params", p_doc, "e_switch_j", (int, float), required=True, default=0.0)
    e_on = _expect(problems, "params", p_doc, "e_on_j_per_slot", (int, float), required=True, default=0.0)
    omega = _expect(problems, "params", p_doc, "delay_weight_per_job_slot", (int, float), required=True, default=0.0)

    has_rate = "service_rate_per_s" in p_doc
    has_mst = "mean_service_time_s" in p_doc
    if has_rate == has_mst:
        problems.append("params: give exactly one of service_rate_per_s and mean_service_time_s")
        service_rate = 1.0
    elif has_rate:
        service_rate = float(_expect(problems, "params", p_doc, "service_rate_per_s", (int, float), default=1.0))
    else:
        mst = float(_expect(problems, "params", p_doc, "mean_service_time_s", (int, float), default=1.0))
        service_rate = 1.0 / mst if mst > 0 else float("nan")
        if mst <= 0:
            problems.append("params.mean_service_time_s: must be > 0")

    disc_f = _expect(problems, "params", p_doc, "discount_factor_per_slot", (int, float))
    disc_r = _expect(problems, "params", p_doc, "discount_rate_per_s", (int, float))
    slot = _expect(problems, "params", p_doc, "slot_s", (int, float, str), default=AUTO_SLOT)
    if isinstance(slot, str) and slot != AUTO_SLOT:
        problems.append(f'params.slot_s: must be a number or "auto", got {slot!r}')
        slot = AUTO_SLOT

    s_doc = _expect(problems, "top level", doc, "solver", dict, default={}) or {}
    _reject_unknown(problems, "solver", s_doc, {"algorithm", "epsilon", "max_iters"})
    algorithm = _expect(problems, "solver", s_doc, "algorithm", str, default="vi")
    if algorithm not in ("vi", "pi"):
        problems.append(f"solver.algorithm: must be 'vi' or 'pi', got {algorithm!r}")
        algorithm = "vi"
    epsilon = float(_expect(problems, "solver", s_doc, "epsilon", (int, float), default=1e-6))
    max_iters = _expect(problems, "solver", s_doc, "max_iters", int, default=1_000_000)

    sim_doc = _expect(problems, "top level", doc, "sim", dict, default={}) or {}
    _reject_unknown(
        problems, "sim", sim_doc,
        {"initial_state", "replications", "horizon_slots", "tail_tol", "seed"},
    )
    init = sim_doc.get("initial_state")
    initial_state = None
    if init is not None:
        if (
            isinstance(init, list)
            and len(init) == 3
            and all(isinstance(x, int) for x in init)
        ):
            initial_state = SysState(*init)
        else:
            problems.append("sim.initial_state: must be null or [phase, queue, active]")
    replications = _expect(problems, "sim", sim_doc, "replications", int, default=10_000)
    horizon_slots = sim_doc.get("horizon_slots")
    if horizon_slots is not None and not isinstance(horizon_slots, int):
        problems.append("sim.horizon_slots: must be null or an integer")
        horizon_slots = None
    tail_tol = float(_expect(problems, "sim", sim_doc, "tail_tol", (int, float), default=1e-6))
    seed = _expect(problems, "sim", sim_doc, "seed", int, default=0)

    if problems:
        raise ConfigError(problems)

    model = MmppModel(arrival_rates=rates, transition_rates=trans)
    params = SystemParams(
        n_servers=n_servers,
        service_rate=service_rate,
        buffer=buffer,
        e_switch=float(e_switch),
        e_on=float(e_on),
        delay_weight=float(omega),
        discount_factor=None if disc_f is None else float(disc_f),
        discount_rate=None if disc_r is None else float(disc_r),
        slot=slot if slot == AUTO_SLOT else float(slot),
    )
    validate_model(model, params)  # raises ScenarioError with the full list

    return Scenario(
        model=model,
        params=params,
        algorithm=algorithm,
        epsilon=epsilon,
        max_iters=max_iters,
        sim=SimConfig(
            initial_state=initial_state,
            replications=replications,
            horizon_slots=horizon_slots,
            tail_tol=tail_tol,
            seed=seed,
        ),
        output_dir=output_dir,
        description=description,
    )


def scenario_to_doc(s: Scenario) -> dict:
    """Canonical document; parse_scenario(scenario_to_doc(s)) == s."""
    params: dict = {
        "n_servers": s.params.n_servers,
        "service_rate_per_s": s.params.service_rate,
        "buffer": s.params.buffer,
        "e_switch_j": s.params.e_switch,
        "e_on_j_per_slot": s.params.e_on,
        "delay_weight_per_job_slot": s.params.delay_weight,
        "slot_s": s.params.slot,
    }
    if s.params.discount_factor is not None:
        params["discount_factor_per_slot"] = s.params.discount_factor
    if s.params.discount_rate is not None:
        params["discount_rate_per_s"] = s.params.discount_rate
    init = s.sim.initial_state
    return {
        "description": s.description,
        "model": {
            "arrival_rates_per_s": list(s.model.arrival_rates),
            "transition_rates_per_s": [list(row) for row in s.model.transition_rates],
        },
        "params": params,
        "solver": {
            "algorithm": s.algorithm,
            "epsilon": s.epsilon,
            "max_iters": s.max_iters,
        },
        "sim": {
            "initial_state": None if init is None else [init.phase, init.queue, init.active],
            "replications": s.sim.replications,
            "horizon_slots": s.sim.horizon_slots,
            "tail_tol": s.sim.tail_tol,
            "seed": s.sim.seed,
        },
        "output_dir": s.output_dir,
    }


def load_scenario(path: str | Path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON: {exc}"]) from exc
    return parse_scenario(doc)


def config_hash(scenario: Scenario) -> str:
    text = json.dumps(scenario_to_doc(scenario), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Artifact writing
# ---------------------------------------------------------------------------


def _meta(scenario: Scenario, slot: float, discount: float) -> dict:
    return {
        "tool": f"sleepmdp {__version__}",
        "config_sha256": config_hash(scenario),
        "slot_s": slot,
        "discount_per_slot": discount,
    }


def _header_lines(meta: dict) -> str:
    return "".join(f"# {k}: {v}\n" for k, v in meta.items())


def write_state_table(path: Path, space: StateSpace, column: str, data, meta: dict) -> None:
    with path.open("w") as fh:
        fh.write(_header_lines(meta))
        fh.write(f"state\tphase\tqueue\tactive\t{column}\n")
        for idx in range(space.n_states):
            st = space.decode(idx)
            value = data[idx]
            text = f"{value:.17g}" if isinstance(value, float) else str(int(value))
            fh.write(f"{idx}\t{st.phase}\t{st.queue}\t{st.active}\t{text}\n")


def write_thresholds(path: Path, table, meta: dict) -> None:
    with path.open("w") as fh:
        fh.write(_header_lines(meta))
        fh.write(
            "# turn_on_queue: smallest queue whose action reaches active+k; "
            "turn_off_queue: largest queue whose action drops to active-k; "
            "blank when the policy never does\n"
        )
        fh.write("phase\tactive\tk\tturn_on_queue\tturn_off_queue\n")
        for phase, active, k, on_q, off_q in table.rows():
            on_text = "" if on_q is None else str(on_q)
            off_text = "" if off_q is None else str(off_q)
            fh.write(f"{phase}\t{active}\t{k}\t{on_text}\t{off_text}\n")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_policy_file(path: str | Path, space: StateSpace) -> np.ndarray:
    """Read a policy table written by `solve` (or hand-crafted in the same
    shape): tab-separated state/phase/queue/active/action rows."""
    policy = np.full(space.n_states, -1, dtype=np.int64)
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("state\t"):
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise BadParameter(f"policy file row needs 5 columns, got {line!r}")
        idx, action = int(parts[0]), int(parts[4])
        if not 0 <= idx < space.n_states:
            raise BadParameter(f"policy file state index {idx} out of range")
        if not 0 <= action <= space.n_servers:
            raise BadParameter(f"policy file action {action} out of range")
        policy[idx] = action
    if np.any(policy < 0):
        missing = int(np.count_nonzero(policy < 0))
        raise BadParameter(f"policy file leaves {missing} state(s) unassigned")
    return policy


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _fail(code: int, kind: str, detail) -> int:
    print(json.dumps({"error": kind, "detail": detail}), file=sys.stderr)
    return code


def _report_brief(report) -> dict:
    return {
        "algorithm": report.algorithm,
        "iterations": report.iterations,
        "residual": report.residual,
        "converged": report.converged,
    }


def _prepare(scenario: Scenario):
    slot = choose_slot_duration(scenario.model, scenario.params)
    discount = discount_for_slot(scenario.params, slot)
    kernel = build_kernel(scenario.model, scenario.params, slot)
    return slot, discount, kernel


def _solve(scenario: Scenario, kernel, discount: float, algorithm: str | None = None):
    algorithm = algorithm or scenario.algorithm
    if algorithm == "pi":
        return policy_iteration(kernel, discount, epsilon=scenario.epsilon, max_iters=scenario.max_iters)
    return value_iteration(kernel, discount, epsilon=scenario.epsilon, max_iters=scenario.max_iters)


def _outdir(scenario: Scenario, args) -> Path:
    out = Path(args.out if args.out else scenario.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    if getattr(args, "epsilon", None) is not None:
        scenario = replace(scenario, epsilon=args.epsilon)
    if getattr(args, "algorithm", None) is not None:
        scenario = replace(scenario, algorithm=args.algorithm)
    sim = scenario.sim
    if getattr(args, "reps", None) is not None:
        sim = replace(sim, replications=args.reps)
    if getattr(args, "seed", None) is not None:
        sim = replace(sim, seed=args.seed)
    return replace(scenario, sim=sim)


def cmd_solve(args) -> int:
    try:
        scenario = _apply_overrides(load_scenario(args.config), args)
        slot, discount, kernel = _prepare(scenario)
    except (ConfigError, ScenarioError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except SlotTooLarge as exc:
        return _fail(EXIT_SLOT, "slot_too_large", str(exc))

    values, policy, report = _solve(scenario, kernel, discount)
    meta = _meta(scenario, slot, discount)
    out = _outdir(scenario, args)

    write_state_table(out / "values.tsv", kernel.space, "value", values, meta)
    write_state_table(out / "policy.tsv", kernel.space, "action", policy, meta)

    threshold_warning = None
    try:
        table = extract_thresholds(kernel.space, policy)
        write_thresholds(out / "thresholds.tsv", table, meta)
    except NotMonotone as exc:
        threshold_warning = str(exc)

    payload = {"meta": meta, "report": report.to_dict()}
    if threshold_warning:
        payload["threshold_warning"] = threshold_warning
    if not report.converged:
        payload["warning"] = "solver hit max_iters before reaching epsilon"
    write_json(out / "solve_report.json", payload)
    if args.dump_config:
        write_json(out / "config_normalized.json", scenario_to_doc(scenario))

    print(
        f"solved ({report.algorithm}) in {report.iterations} iterations, "
        f"residual {report.residual:.3g}, wrote {out}/"
    )
    if not report.converged:
        return _fail(EXIT_NOT_CONVERGED, "not_converged", _report_brief(report) | {"artifacts": str(out)})
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        scenario = _apply_overrides(load_scenario(args.config), args)
        slot, discount, kernel = _prepare(scenario)
    except (ConfigError, ScenarioError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except SlotTooLarge as exc:
        return _fail(EXIT_SLOT, "slot_too_large", str(exc))

    meta = _meta(scenario, slot, discount)
    out = _outdir(scenario, args)
    space = kernel.space

    if args.policy_file:
        try:
            policy = read_policy_file(args.policy_file, space)
        except BadParameter as exc:
            return _fail(EXIT_BAD_PARAMETER, "bad_parameter", str(exc))
        checks = [check_monotone(space, policy), check_hysteretic(space, policy)]
        payload = {
            "meta": meta,
            "policy_source": str(args.policy_file),
            "checks": [c.to_dict(max_violations=1000) for c in checks],
        }
        write_json(out / "verify_report.json", payload)
        failed = [c.name for c in checks if not c.passed]
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'} {c.name} ({c.n_violations} violations)")
        if failed:
            return _fail(EXIT_STRUCTURE, "structure", {"failed": failed})
        return EXIT_OK

    values, policy, report = _solve(scenario, kernel, discount)
    qfactor = qfactor_table(values, kernel, discount)
    fh_values, _ = finite_horizon_values(kernel, discount, VERIFY_HORIZON)

    checks = [
        check_monotone(space, policy),
        check_hysteretic(space, policy),
        check_partial_submodular(space, qfactor),
        check_value_difference_props(space, fh_values),
    ]
    search = search_full_submodularity_violation(space, values=values, qfactor=qfactor)

    payload = {
        "meta": meta,
        "solve": report.to_dict() | {"residual_history": []},  # keep the file small
        "checks": [c.to_dict(max_violations=1000) for c in checks],
        "full_submodularity_search": search if search else "none found",
    }
    write_json(out / "verify_report.json", payload)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} ({c.n_violations} violations)")
    print(f"full-submodularity search: {search if search else 'none found'}")

    if not report.converged:
        return _fail(EXIT_NOT_CONVERGED, "not_converged", _report_brief(report))
    failed = [c.name for c in checks if not c.passed]
    if failed:
        return _fail(EXIT_STRUCTURE, "structure", {"failed": failed})
    return EXIT_OK


def _parse_policy_spec(spec: str):
    """--policy grammar: solve | always_on | always_off | n_policy:N,m |
    n_policy_sweep:LO-HI:m1,m2,..."""
    if spec in ("solve", "always_on", "always_off"):
        return (spec,)
    if spec.startswith("n_policy_sweep:"):
        try:
            range_part, servers_part = spec.split(":", 1)[1].split(":")
            lo, hi = (int(x) for x in range_part.split("-"))
            servers = [int(x) for x in servers_part.split(",")]
            return ("n_policy_sweep", list(range(lo, hi + 1)), servers)
        except ValueError as exc:
            raise BadParameter(f"bad sweep spec {spec!r}: {exc}") from exc
    if spec.startswith("n_policy:"):
        try:
            nth, mon = (int(x) for x in spec.split(":", 1)[1].split(","))
            return ("n_policy", nth, mon)
        except ValueError as exc:
            raise BadParameter(f"bad n_policy spec {spec!r}: {exc}") from exc
    raise BadParameter(f"unknown policy spec {spec!r}")


def cmd_simulate(args) -> int:
    try:
        scenario = _apply_overrides(load_scenario(args.config), args)
        slot, discount, kernel = _prepare(scenario)
    except (ConfigError, ScenarioError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except SlotTooLarge as exc:
        return _fail(EXIT_SLOT, "slot_too_large", str(exc))

    meta = _meta(scenario, slot, discount)
    out = _outdir(scenario, args)
    space = kernel.space
    model, params, sim_cfg = scenario.model, scenario.params, scenario.sim

    try:
        spec = ("file",) if args.policy_file else _parse_policy_spec(args.policy)

        if spec[0] == "n_policy_sweep":
            values, _, report = _solve(scenario, kernel, discount)
            if not report.converged:
                return _fail(EXIT_NOT_CONVERGED, "not_converged", _report_brief(report))
            start = sim_cfg.initial_state
            if start is None:
                start = default_initial_state(model)
            v_star = float(values[space.index(start)])
            rows = []
            for mon in spec[2]:
                for nth in spec[1]:
                    pol = make_baseline_policy(
                        space, "n_policy", queue_threshold=nth, servers_on=mon
                    )
                    rep = estimate_discounted_cost(pol, model, params, slot, discount, sim_cfg)
                    rows.append((nth, mon, rep.mean, rep.ci99[0], rep.ci99[1], rep.mean - v_star))
            with (out / "comparison.tsv").open("w") as fh:
                fh.write(_header_lines(meta))
                fh.write(f"# optimal_value_at_start: {v_star:.17g}\n")
                fh.write("queue_threshold\tservers_on\tmean\tci99_lo\tci99_hi\tdelta_vs_optimal\n")
                for row in rows:
                    fh.write("\t".join(f"{x:.17g}" if isinstance(x, float) else str(x) for x in row) + "\n")
            print(f"swept {len(rows)} baselines, wrote {out}/comparison.tsv")
            if args.dump_config:
                write_json(out / "config_normalized.json", scenario_to_doc(scenario))
            return EXIT_OK

        verdict = None
        if spec[0] == "file":
            policy = read_policy_file(args.policy_file, space)
            source = str(args.policy_file)
        elif spec[0] == "solve":
            values, policy, report = _solve(scenario, kernel, discount)
            if not report.converged:
                return _fail(EXIT_NOT_CONVERGED, "not_converged", _report_brief(report))
            source = f"solve ({scenario.algorithm})"
        elif spec[0] == "n_policy":
            policy = make_baseline_policy(
                space, "n_policy", queue_threshold=spec[1], servers_on=spec[2]
            )
            source = f"n_policy(queue_threshold={spec[1]}, servers_on={spec[2]})"
        else:
            policy = make_baseline_policy(space, spec[0])
            source = spec[0]

        sim_report = estimate_discounted_cost(policy, model, params, slot, discount, sim_cfg)

        if spec[0] == "solve":
            v_star = float(values[space.index(sim_report.initial_state)])
            lo, hi = sim_report.ci99
            slack = sim_report.bias_bound
            contained = (lo - slack) <= v_star <= (hi + slack)
            verdict = {
                "v_star_at_start": v_star,
                "ci99": [lo, hi],
                "truncation_bias_bound": slack,
                "v_star_in_ci": bool(contained),
            }
            print(
                f"V*(start) = {v_star:.6g}; CI99 = [{lo:.6g}, {hi:.6g}] "
                f"(+/- bias {slack:.3g}): "
                + ("V* in 99% CI" if contained else "V* OUTSIDE 99% CI")
            )
    except BadParameter as exc:
        return _fail(EXIT_BAD_PARAMETER, "bad_parameter", str(exc))

    payload = {"meta": meta, "policy_source": source, "report": sim_report.to_dict()}
    if verdict:
        payload["verdict"] = verdict
    write_json(out / "sim_report.json", payload)
    if args.dump_config:
        write_json(out / "config_normalized.json", scenario_to_doc(scenario))
    print(
        f"simulated {sim_report.replications} replications of {source}: "
        f"mean {sim_report.mean:.6g}, CI99 [{sim_report.ci99[0]:.6g}, {sim_report.ci99[1]:.6g}], "
        f"wrote {out}/sim_report.json"
    )
    return EXIT_OK


def cmd_dump_config(args) -> int:
    try:
        scenario = load_scenario(args.config)
    except (ConfigError, ScenarioError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    text = json.dumps(scenario_to_doc(scenario), indent=2, sort_keys=True)
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sleepmdp",
        description="Sleep/wake scheduling of parallel servers under bursty arrivals: "
        "solve the discounted-cost decision process, verify the threshold structure, "
        "and validate by simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_solver=True, with_sim=False):
        p.add_argument("config", nargs="?", help="scenario file (JSON)")
        p.add_argument("--config", dest="config_flag", help="scenario file (JSON)")
        p.add_argument("--out", help="output directory (overrides the scenario)")
        p.add_argument("--dump-config", action="store_true", help="also write the normalized config")
        if with_solver:
            p.add_argument("--algorithm", choices=["vi", "pi"])
            p.add_argument("--epsilon", type=float)
        if with_sim:
            p.add_argument("--reps", type=int, help="replication count override")
            p.add_argument("--seed", type=int, help="master seed override")

    p_solve = sub.add_parser("solve", help="solve and export values, policy, thresholds")
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="solve and run the structural checks")
    common(p_verify)
    p_verify.add_argument("--policy-file", help="check this policy table instead of solving")
    p_verify.set_defaults(func=cmd_verify)

    p_sim = sub.add_parser("simulate", help="Monte-Carlo estimate of a policy's discounted cost")
    common(p_sim, with_sim=True)
    p_sim.add_argument(
        "--policy",
        default="solve",
        help="solve | always_on | always_off | n_policy:N,m | n_policy_sweep:LO-HI:m1,m2,...",
    )
    p_sim.add_argument("--policy-file", help="simulate a policy table from file")
    p_sim.set_defaults(func=cmd_simulate)

    p_dump = sub.add_parser("dump-config", help="print the normalized scenario")
    p_dump.add_argument("config", nargs="?", help="scenario file (JSON)")
    p_dump.add_argument("--config", dest="config_flag", help="scenario file (JSON)")
    p_dump.add_argument("--out", help="write to this path instead of stdout")
    p_dump.set_defaults(func=cmd_dump_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = args.config_flag or args.config
    if not config:
        parser.error("a scenario file is required (positional or --config)")
    args.config = config
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
