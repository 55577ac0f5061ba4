# app/scenarios/scenario_runner.py
import asyncio
import uuid
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Type

from loguru import logger

from app.analysis import compare
from app.core.config import Settings, settings as default_settings
from app.core.resources import ArtifactManager
from app.models.schemas import RunConfig, RunOutcome, RunStatus, TaskStatusResponse
from app.pipelines import default_pipelines
from app.scenarios.base_scenario import BaseScenario
from app.scenarios.moments_scenario import MomentsScenario
from app.scenarios.tdse_scenario import TdseScenario

SCENARIOS: Dict[str, Type[BaseScenario]] = {
    MomentsScenario.model: MomentsScenario,
    TdseScenario.model: TdseScenario,
}


class ScenarioRunner:
    """场景运行器：任务登记、单次运行与并发批量运行"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or default_settings
        self.active_tasks: Dict[str, TaskStatusResponse] = {}

    def output_dir(self, config: RunConfig, base: Optional[Path] = None) -> Path:
        if config.outputs.directory and base is None:
            return Path(config.outputs.directory)
        return Path(base or self.settings.OUTPUT_DIR) / config.name

    def _register(self, config: RunConfig, task_id: Optional[str] = None) -> str:
        task_id = task_id or str(uuid.uuid4())
        self.active_tasks[task_id] = TaskStatusResponse(task_id=task_id, name=config.name, status=RunStatus.PENDING)
        return task_id

    def _update_task_status(self, task_id: str, status: RunStatus, **fields) -> None:
        """更新任务状态"""
        task = self.active_tasks.get(task_id)
        if task is None:
            return
        update = {"status": status, **fields}
        if status in (RunStatus.COMPLETED, RunStatus.FAILED):
            update["end_time"] = datetime.now()
        task = task.model_copy(update=update)
        if task.start_time and task.end_time:
            task.execution_time = (task.end_time - task.start_time).total_seconds()
        self.active_tasks[task_id] = task

    def run(self, config: RunConfig, output_dir: Optional[Path] = None, task_id: Optional[str] = None) -> RunOutcome:
        """同步执行一个配置；失败时登记错误并重新抛出"""
        if task_id is None or task_id not in self.active_tasks:
            task_id = self._register(config, task_id)
        directory = Path(output_dir) if output_dir is not None else self.output_dir(config)
        self._update_task_status(task_id, RunStatus.RUNNING, start_time=datetime.now(), output_dir=str(directory))

        try:
            with logger.contextualize(task_id=task_id), ArtifactManager(directory, task_id) as artifacts:
                outcome = self._execute(config, task_id, artifacts)
        except Exception as e:
            logger.error(f"task({task_id}): run {config.name} failed, reason: {e}")
            self._update_task_status(
                task_id, RunStatus.FAILED, exit_code=getattr(e, "exit_code", 1), error_message=str(e)
            )
            raise

        self._update_task_status(task_id, RunStatus.COMPLETED, exit_code=0)
        return outcome

    def _execute(self, config: RunConfig, task_id: str, artifacts: ArtifactManager) -> RunOutcome:
        models = ["moments", "tdse"] if config.model == "both" else [config.model]
        pipelines = default_pipelines(artifacts, emit_svg=config.outputs.emit_svg)
        outcome = RunOutcome(task_id=task_id, name=config.name, output_dir=str(artifacts.directory))
        barrier_x = None

        for model in models:
            scenario = SCENARIOS[model](config, task_id=task_id, settings=self.settings)
            result = scenario.run()
            for pipeline in pipelines:
                result = pipeline.process_result(result, scenario)
            outcome.results[model] = result
            barrier_x = scenario.barrier_x
        pipelines[-1].close()

        if len(models) == 2:
            outcome.comparison = compare(
                outcome.results["moments"].series, outcome.results["tdse"].series, barrier_x
            )
            artifacts.json("comparison.json", outcome.comparison)

        artifacts.json("run.json", self._run_record(config, task_id, outcome))
        outcome.artifacts = artifacts.listing()
        return outcome

    def _run_record(self, config: RunConfig, task_id: str, outcome: RunOutcome) -> dict:
        record = {
            "task_id": task_id,
            "name": config.name,
            "config": config.model_dump(mode="json"),
            "models": {},
        }
        for model, result in outcome.results.items():
            scenario_cls = SCENARIOS[model]
            preview = scenario_cls(config, settings=self.settings)
            entry = {
                "init": result.init.model_dump(mode="json"),
                "regime": result.init.regime.value if result.init.regime else None,
                "tunneling": result.tunneling.model_dump(mode="json") if result.tunneling else None,
                "numerics": {"dt": preview.dt, "t_end": preview.t_end, "stride": preview.stride},
                "stats": result.stats,
                "artifacts": result.artifacts,
            }
            if model == "tdse":
                entry["numerics"]["grid"] = preview.grid.model_dump()
                entry["drift"] = result.series.drift.model_dump()
            record["models"][model] = entry
        if outcome.comparison is not None:
            record["comparison"] = outcome.comparison.model_dump(mode="json")
        return record

    async def run_many(self, configs: Sequence[RunConfig], base_dir: Optional[Path] = None) -> List[TaskStatusResponse]:
        """并发运行多个配置，每个配置写入各自的子目录"""
        semaphore = asyncio.Semaphore(self.settings.MAX_CONCURRENT_RUNS)
        base = Path(base_dir or self.settings.OUTPUT_DIR)
        task_ids = [self._register(config) for config in configs]

        async def run_one(config: RunConfig, task_id: str) -> None:
            async with semaphore:
                try:
                    await asyncio.to_thread(self.run, config, base / config.name, task_id)
                except Exception:
                    # 失败已记录在任务状态中
                    pass

        await asyncio.gather(*(run_one(c, t) for c, t in zip(configs, task_ids)))
        return [self.active_tasks[t] for t in task_ids]

    def get_task_status(self, task_id: str) -> Optional[TaskStatusResponse]:
        """获取任务状态"""
        return self.active_tasks.get(task_id)

    def get_all_tasks(self) -> Dict[str, TaskStatusResponse]:
        """获取所有任务"""
        return dict(self.active_tasks)


# 全局场景运行器实例
scenario_runner = ScenarioRunner()
