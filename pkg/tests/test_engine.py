"""Run orchestration: step counts, conservation, determinism, artifacts,
failure handling, and batch mode."""
from __future__ import annotations

import json
import os

import pytest

import demosim.engine as engine
from demosim.engine import (RunConfig, TimeSeries, TIMESERIES_HEADER,
                            resolve_seed, run, run_batch, state_digest,
                            violations_csv)
from demosim.model import (AssumptionFailure, ModelParams, SimulationParams)
from demosim.rates import default_model_data
from demosim.space import DensityMap
from demosim.verification import Violation


def config(pop=200, seed=7, t_final=2021, **kwargs) -> RunConfig:
    return RunConfig(sim=SimulationParams(t0=2020, t_final=t_final, seed=seed),
                     model=ModelParams(initial_pop=pop),
                     data=default_model_data(),
                     density=DensityMap.default(), **kwargs)


def test_resolve_seed():
    assert resolve_seed(42) == 42
    assert resolve_seed("17") == 17
    a, b = resolve_seed("random"), resolve_seed("random")
    assert isinstance(a, int) and isinstance(b, int)
    assert a != b  # 64-bit entropy; collision would be astronomical


def test_run_step_count_exact():
    result = run(config())
    assert result.summary["steps_planned"] == 365
    assert result.summary["steps_completed"] == 365
    assert len(result.timeseries.rows) == 366  # initial row included
    assert result.timeseries.rows[0][0] == 0
    assert result.timeseries.rows[-1][0] == 365
    assert result.state.time.step_index == 365


def test_run_zero_population():
    result = run(config(pop=0))
    assert all(row[2] == 0 for row in result.timeseries.rows)
    assert result.summary["totals"] == \
        {"births": 0, "deaths": 0, "marriages": 0, "divorces": 0,
         "violations": 0}


def test_run_conservation_every_step():
    result = run(config(pop=300, seed=3))
    rows = result.timeseries.rows
    for prev, cur in zip(rows, rows[1:]):
        alive_prev, alive_cur = prev[2], cur[2]
        births, deaths = cur[5], cur[6]
        assert alive_cur - alive_prev == births - deaths
    # house count never decreases
    for prev, cur in zip(rows, rows[1:]):
        assert cur[10] >= prev[10]


def test_run_determinism_digest():
    a = run(config(seed=21))
    b = run(config(seed=21))
    c = run(config(seed=22))
    assert a.digest == b.digest
    assert a.digest != c.digest
    assert a.timeseries.rows == b.timeseries.rows


def test_digest_sensitivity():
    result = run(config(pop=50, seed=1))
    state = result.state
    before = state_digest(state)
    assert state_digest(state) == before  # stable
    next(iter(state.persons.values())).age_steps += 1
    assert state_digest(state) != before


def test_run_writes_artifacts(tmp_path):
    out = str(tmp_path / "arts")
    result = run(config(pop=100, seed=2, out_dir=out))
    names = sorted(os.listdir(out))
    assert names == ["summary.json", "timeseries.csv", "violations.csv"]
    text = open(os.path.join(out, "timeseries.csv")).read()
    assert text.splitlines()[0] == ",".join(TIMESERIES_HEADER)
    assert len(text.splitlines()) == 367  # header + 366 rows
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["seed"] == 2
    assert summary["final_digest"] == result.digest
    assert summary["aborted_on_violation"] is False
    assert "generated_at" in summary
    assert summary["init"]["persons_total"] == result.init_report.persons_total
    assert not [n for n in os.listdir(out) if n.endswith(".tmp")]


def test_fail_mode_aborts_and_writes_partial(tmp_path, monkeypatch):
    planted = Violation("a_homeless", 0, (1,), "planted for the abort test")
    monkeypatch.setattr(engine, "check_initial",
                        lambda state, registry: [planted])
    out = str(tmp_path / "failed")
    with pytest.raises(AssumptionFailure):
        run(config(pop=50, seed=4, out_dir=out, verification_mode="fail"))
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["aborted_on_violation"] is True
    assert summary["steps_completed"] == 0
    vio = open(os.path.join(out, "violations.csv")).read().splitlines()
    assert vio[0] == "step,label,ids,detail"
    assert vio[1].startswith("0,a_homeless,1,")


def test_warn_mode_continues(monkeypatch):
    planted = Violation("a_homeless", 0, (1,), "planted for the warn test")
    monkeypatch.setattr(engine, "check_initial",
                        lambda state, registry: [planted])
    result = run(config(pop=50, seed=4, verification_mode="warn"))
    assert result.summary["steps_completed"] == 365
    assert result.violations == [planted]
    assert result.timeseries.rows[0][-1] == 1  # violation count in row 0


def test_invalid_verification_mode():
    with pytest.raises(ValueError):
        config(verification_mode="strict")


def test_run_batch_seeds_and_isolation(tmp_path):
    out = str(tmp_path / "batch")
    results = run_batch(config(pop=80, seed=100, out_dir=out),
                        replicates=3, base_seed=100)
    assert [r.seed for r in results] == [100, 101, 102]
    assert len({r.digest for r in results}) == 3
    assert sorted(os.listdir(out)) == \
        ["replicate_000", "replicate_001", "replicate_002"]
    # replicate 0 must match a plain run with the same seed
    solo = run(config(pop=80, seed=100))
    assert solo.digest == results[0].digest


def test_run_batch_rejects_zero():
    with pytest.raises(ValueError):
        run_batch(config(), replicates=0, base_seed=1)


def test_violations_csv_format():
    text = violations_csv([Violation("a_homeless", 3, (7, 9), "two ids")])
    assert text.splitlines() == ["step,label,ids,detail",
                                 "3,a_homeless,7;9,two ids"]


def test_timeseries_rows_cross_check():
    result = run(config(pop=250, seed=12))
    totals = result.summary["totals"]
    rows = result.timeseries.rows
    assert totals["births"] == sum(r[5] for r in rows)
    assert totals["deaths"] == sum(r[6] for r in rows)
    assert totals["marriages"] == sum(r[7] for r in rows)
    assert totals["divorces"] == sum(r[8] for r in rows)
    assert all(r[2] == r[3] + r[4] for r in rows)  # alive = males + females
