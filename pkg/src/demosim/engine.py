"""Run orchestration: seed resolution, world construction, the step loop,
verification dispatch, time-series accumulation, and artifact output.

Determinism contract: one RNG stream per run, consumed in a fixed order
(initialization phases first, then per step in the configured event order,
within each event in ascending person id). Same seed + same config gives an
identical draw sequence and byte-identical artifacts apart from the
generated_at timestamp.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import random
import secrets
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from .events import DEFAULT_EVENT_ORDER, step, validate_event_order
from .initialization import InitReport, init_world
from .model import (FEMALE, MALE, AssumptionFailure, IntegrityError,
                    ModelData, ModelParams, SimulationParams, WorldState,
                    validate_world)
from .predicates import SnapshotStore
from .rates import RateContext
from .space import DensityMap
from .verification import (SpaceDigest, Violation, build_registry,
                           check_initial, check_retrospective, check_step)

TIMESERIES_HEADER = ("step", "year", "alive", "males", "females", "births",
                     "deaths", "marriages", "divorces", "mean_age_years",
                     "houses_total", "houses_empty", "violations")


@dataclass(slots=True)
class RunConfig:
    sim: SimulationParams
    model: ModelParams
    data: ModelData
    density: DensityMap
    event_order: tuple[str, ...] = DEFAULT_EVENT_ORDER
    verification_mode: str = "fail"
    out_dir: str | None = None
    # effective flat config for the summary echo; CLI fills it, API users may
    config_echo: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        validate_event_order(self.event_order)
        if self.verification_mode not in ("warn", "fail"):
            raise ValueError(
                f"verification_mode must be warn or fail, "
                f"got {self.verification_mode!r}")


@dataclass(slots=True)
class TimeSeries:
    rows: list[tuple] = field(default_factory=list)

    def append(self, state: WorldState, step_index: int, births: int,
               deaths: int, marriages: int, divorces: int,
               violations: int) -> None:
        alive = [p for p in state.persons.values() if p.alive]
        males = sum(1 for p in alive if p.gender == MALE)
        spy = state.time.steps_per_year
        mean_age = (sum(p.age_steps for p in alive) / len(alive) / spy
                    if alive else 0.0)
        empty = sum(1 for h in state.houses.values() if not h.occupants)
        self.rows.append((
            step_index,
            state.time.t0_year + step_index // spy,
            len(alive), males, len(alive) - males,
            births, deaths, marriages, divorces,
            round(mean_age, 6),
            len(state.houses), empty, violations,
        ))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TIMESERIES_HEADER)
        writer.writerows(self.rows)
        return buf.getvalue()


@dataclass(slots=True)
class RunResult:
    timeseries: TimeSeries
    digest: str
    violations: list[Violation]
    state: WorldState
    init_report: InitReport
    seed: int
    summary: dict


def resolve_seed(seed: int | str) -> int:
    """A literal seed is used as-is; "random" draws entropy at startup. The
    resolved value is echoed into summary.json either way."""
    if seed == "random":
        return secrets.randbits(64)
    return int(seed)


def state_digest(state: WorldState) -> str:
    """64-bit content hash over a canonical (sorted) serialization of the
    world. Equal states give equal digests regardless of dict history."""
    h = hashlib.blake2b(digest_size=8)
    h.update(repr((state.time.step_index, state.time.t0_year,
                   state.time.steps_per_year, state.next_person_id,
                   state.next_house_id)).encode())
    for pid in sorted(state.persons):
        p = state.persons[pid]
        h.update(repr((p.id, p.gender, p.age_steps, p.born_step, p.alive,
                       p.partner, p.father, p.mother, sorted(p.children),
                       p.ever_partners, p.house, p.gave_birth)).encode())
    for hid in sorted(state.houses):
        house = state.houses[hid]
        h.update(repr((house.id, house.town, house.local_xy,
                       sorted(house.occupants))).encode())
    for tid in sorted(state.towns):
        t = state.towns[tid]
        h.update(repr((t.id, t.grid_xy, t.density, sorted(t.houses))).encode())
    return h.hexdigest()


def violations_csv(violations: list[Violation]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("step", "label", "ids", "detail"))
    for v in violations:
        writer.writerow((v.step_index, v.label,
                         ";".join(str(i) for i in v.ids), v.detail))
    return buf.getvalue()


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_artifacts(out_dir: str, series: TimeSeries,
                    violations: list[Violation], summary: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(os.path.join(out_dir, "timeseries.csv"), series.to_csv())
    _atomic_write(os.path.join(out_dir, "violations.csv"),
                  violations_csv(violations))
    _atomic_write(os.path.join(out_dir, "summary.json"),
                  json.dumps(summary, indent=2, sort_keys=True) + "\n")


def run(config: RunConfig) -> RunResult:
    """Execute one full run: init, initial checks, (t_final - t0) * N steps
    of events + per-step checks + retrospective space checks.

    In fail mode the first violating step aborts the run with
    AssumptionFailure after writing the artifacts accumulated so far; warn
    mode records violations and keeps going.
    """
    sim = config.sim
    seed = resolve_seed(sim.seed)
    rng = random.Random(seed)
    spy = sim.steps_per_year
    ctx = RateContext(config.model, config.data, spy)
    registry = build_registry(config.event_order)

    state, report = init_world(config.model, sim, config.data,
                               config.density, rng)
    problems = validate_world(state)
    if problems:
        raise IntegrityError(
            f"initialization produced a broken world: {problems[:5]}")

    series = TimeSeries()
    all_violations: list[Violation] = []
    totals = {"births": 0, "deaths": 0, "marriages": 0, "divorces": 0}

    def summarize(final_digest: str, completed_steps: int,
                  aborted: bool) -> dict:
        return {
            "generated_at": datetime.now(timezone.utc).isoformat(),
            "config": config.config_echo,
            "seed": seed,
            "event_order": list(config.event_order),
            "verification_mode": config.verification_mode,
            "steps_completed": completed_steps,
            "steps_planned": (sim.t_final - sim.t0) * spy,
            "aborted_on_violation": aborted,
            "final_digest": final_digest,
            "totals": dict(totals, violations=len(all_violations)),
            "final_alive": sum(1 for p in state.persons.values() if p.alive),
            "final_houses": len(state.houses),
            "init": report.to_dict(),
        }

    def fail(completed_steps: int) -> None:
        if config.out_dir is not None:
            write_artifacts(config.out_dir, series, all_violations,
                            summarize(state_digest(state), completed_steps,
                                      aborted=True))
        first = all_violations[0]
        raise AssumptionFailure(
            f"{len(all_violations)} violation(s); first: {first.label} at "
            f"step {first.step_index}: {first.detail}")

    initial_violations = check_initial(state, registry)
    all_violations.extend(initial_violations)
    series.append(state, 0, 0, 0, 0, 0, len(initial_violations))
    if initial_violations and config.verification_mode == "fail":
        fail(0)

    snaps = SnapshotStore()
    snaps.freeze(state)
    space_before = SpaceDigest.of(state)

    total_steps = (sim.t_final - sim.t0) * spy
    for i in range(1, total_steps + 1):
        alive_before = sum(1 for p in state.persons.values() if p.alive)
        outcome = step(state, ctx, snaps, rng, config.event_order)
        alive_after = sum(1 for p in state.persons.values() if p.alive)
        if alive_after - alive_before != outcome.births - outcome.deaths:
            raise IntegrityError(
                f"step {i}: alive delta {alive_after - alive_before} != "
                f"births {outcome.births} - deaths {outcome.deaths}")
        step_violations = check_step(state, snaps, registry)
        step_violations.extend(check_retrospective(space_before, state))
        space_before = SpaceDigest.of(state)
        all_violations.extend(step_violations)
        totals["births"] += outcome.births
        totals["deaths"] += outcome.deaths
        totals["marriages"] += outcome.marriages
        totals["divorces"] += outcome.divorces
        series.append(state, i, outcome.births, outcome.deaths,
                      outcome.marriages, outcome.divorces,
                      len(step_violations))
        if step_violations and config.verification_mode == "fail":
            fail(i)

    digest = state_digest(state)
    summary = summarize(digest, total_steps, aborted=False)
    if config.out_dir is not None:
        write_artifacts(config.out_dir, series, all_violations, summary)
    return RunResult(timeseries=series, digest=digest,
                     violations=all_violations, state=state,
                     init_report=report, seed=seed, summary=summary)


def run_batch(config: RunConfig, replicates: int, base_seed: int,
              max_workers: int | None = None) -> list[RunResult]:
    """Run independent replicates concurrently, replicate r seeded with
    base_seed + r; no state is shared between them. Results come back in
    replicate order."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")

    def one(r: int) -> RunResult:
        out = (os.path.join(config.out_dir, f"replicate_{r:03d}")
               if config.out_dir is not None else None)
        cfg = replace(config, sim=replace(config.sim, seed=base_seed + r),
                      out_dir=out)
        return run(cfg)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, range(replicates)))
