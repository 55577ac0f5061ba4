import asyncio
import json

import pytest
from loguru import logger

from app.core.exceptions import EnergyTooLow
from app.core.resources import read_columns
from app.models.schemas import InitSpec, NumericsSpec, OutputSpec, RunConfig, RunStatus
from app.scenarios.moments_scenario import MomentsScenario
from app.scenarios.scenario_runner import ScenarioRunner
from app.scenarios.tdse_scenario import TdseScenario


def _config(name="left-well", model="moments", **init):
    init = {"x0": 0.5, "energy": 9.0, **init}
    return RunConfig(
        name=name,
        model=model,
        init=InitSpec(**init),
        numerics=NumericsSpec(t_end=1.0),
    )


def test_right_well_energy_offset(test_settings):
    scenario = MomentsScenario(_config(x0=5.5, energy_offset="plus-delta"), settings=test_settings)
    init = scenario.resolve_init()
    assert init.energy_offset == pytest.approx(4.68, abs=0.01)
    assert init.energy == pytest.approx(9.0 + init.energy_offset)


def test_skewness_policies(test_settings):
    fixed = MomentsScenario(_config(), settings=test_settings).resolve_init()
    zero = MomentsScenario(_config().model_copy(update={"skewness_policy": "zero"}), settings=test_settings)
    assert fixed.skewness != 0.0 and fixed.skewness_warning is None
    assert zero.resolve_init().skewness == 0.0


def test_skewness_fallback_warning(test_settings):
    init = MomentsScenario(_config(energy=8.0), settings=test_settings).resolve_init()
    assert init.skewness == 0.0
    assert init.skewness_warning is not None


def test_settings_supply_numerics(test_settings):
    config = RunConfig(init=InitSpec(energy=9.0))
    tdse = TdseScenario(config, settings=test_settings)
    assert tdse.dt == test_settings.TDSE_DT
    assert tdse.grid.n == test_settings.GRID_N
    assert MomentsScenario(config, settings=test_settings).t_end == test_settings.MOMENTS_T_END


def test_run_moments_writes_declared_artifacts(test_settings, tmp_path):
    runner = ScenarioRunner(test_settings)
    config = _config().model_copy(update={"outputs": OutputSpec(emit_svg=True)})
    outcome = runner.run(config, tmp_path / "moments")

    assert set(outcome.artifacts) >= {"moments_series.csv", "moments_tunneling.json", "moments.svg", "run.json"}
    cols = read_columns(tmp_path / "moments" / "moments_series.csv")
    assert list(cols) == ["t", "mean_x", "mean_p", "variance", "variance_rate", "vp_diagnostic"]
    assert cols["t"][-1] == pytest.approx(1.0)

    record = json.loads((tmp_path / "moments" / "run.json").read_text())
    assert record["models"]["moments"]["regime"] == "exists-unstable"
    assert record["models"]["moments"]["tunneling"]["crossed"] is False

    status = runner.get_task_status(outcome.task_id)
    assert status.status is RunStatus.COMPLETED
    assert status.exit_code == 0
    assert status.execution_time >= 0


def test_run_is_deterministic(test_settings, tmp_path):
    runner = ScenarioRunner(test_settings)
    runner.run(_config(), tmp_path / "a")
    runner.run(_config(), tmp_path / "b")
    first = (tmp_path / "a" / "moments_series.csv").read_bytes()
    assert first == (tmp_path / "b" / "moments_series.csv").read_bytes()


def test_failed_run_is_registered(test_settings, tmp_path):
    runner = ScenarioRunner(test_settings)
    with pytest.raises(EnergyTooLow):
        runner.run(_config(energy=0.1), tmp_path / "low")
    (status,) = runner.get_all_tasks().values()
    assert status.status is RunStatus.FAILED
    assert status.exit_code == 21


def test_both_models_compared(test_settings, tmp_path):
    config = _config(model="both").model_copy(update={"numerics": NumericsSpec(t_end=0.5)})
    outcome = ScenarioRunner(test_settings).run(config, tmp_path / "both")
    assert set(outcome.results) == {"moments", "tdse"}
    assert outcome.comparison is not None
    assert outcome.comparison.verdict_agreement
    assert (tmp_path / "both" / "comparison.json").exists()
    tdse = read_columns(tmp_path / "both" / "tdse_series.csv")
    assert list(tdse) == ["t", "norm", "mean_x", "mean_p", "variance", "energy"]
    assert abs(tdse["energy"][0] - 9.0) < 1e-9


def test_tdse_snapshots(test_settings, tmp_path):
    config = RunConfig(
        name="snap",
        model="tdse",
        init=InitSpec(x0=0.5, energy=9.0),
        numerics=NumericsSpec(t_end=0.2, dt=0.01),
        outputs=OutputSpec(emit_snapshots=True, snapshot_every=0.1),
    )
    outcome = ScenarioRunner(test_settings).run(config, tmp_path / "snap")
    snapshots = sorted(p.name for p in (tmp_path / "snap" / "snapshots").iterdir())
    assert snapshots == ["psi_0.1.csv", "psi_0.2.csv", "psi_0.csv"]
    cols = read_columns(tmp_path / "snap" / "snapshots" / "psi_0.csv")
    assert list(cols) == ["x", "re", "im", "prob"]
    assert outcome.results["tdse"].init.v0 > 0


def test_run_many_bounded_concurrency(test_settings, tmp_path):
    runner = ScenarioRunner(test_settings)
    configs = [_config(name="left"), _config(name="right", x0=5.5, energy_offset="plus-delta"), _config(name="low", energy=0.1)]
    statuses = asyncio.run(runner.run_many(configs, tmp_path))
    by_name = {s.name: s for s in statuses}
    assert by_name["left"].status is RunStatus.COMPLETED
    assert by_name["right"].status is RunStatus.COMPLETED
    assert by_name["low"].status is RunStatus.FAILED and by_name["low"].exit_code == 21
    assert (tmp_path / "left" / "run.json").exists()
    assert (tmp_path / "right" / "moments_series.csv").exists()


def test_run_log_is_closed_with_its_run(test_settings, tmp_path):
    runner = ScenarioRunner(test_settings)
    runner.run(_config(name="first"), tmp_path / "first")
    runner.run(_config(name="second"), tmp_path / "second")
    logger.bind(task_id="late").warning("message after both runs")

    first = (tmp_path / "first" / "run.log").read_text(encoding="utf-8")
    assert "] first:" in first
    assert "] second:" not in first
    assert "after both runs" not in first
    assert "] second:" in (tmp_path / "second" / "run.log").read_text(encoding="utf-8")


def test_tdse_run_records_energy_match(test_settings, tmp_path):
    config = RunConfig(
        name="matched", model="tdse", init=InitSpec(x0=0.5, energy=9.0), numerics=NumericsSpec(t_end=0.1),
    )
    ScenarioRunner(test_settings).run(config, tmp_path / "matched")
    stats = json.loads((tmp_path / "matched" / "run.json").read_text())["models"]["tdse"]["stats"]
    assert stats["energy_matched"] is True
    assert stats["energy_mismatch"] < 1e-9
    assert stats["discrete_energy"] == pytest.approx(9.0, abs=1e-9)
    assert stats["v0_analytic"] > 0
