# app/core/resources.py
import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Union

import numpy as np
from loguru import logger

from app.core.logging import add_run_sink, remove_run_sink

PathLike = Union[str, Path]


def format_number(value: Any) -> str:
    """17 位有效数字的十进制文本；None 写为空串"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


def write_rows(fh: TextIO, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_number(v) for v in row])


def write_csv(path: PathLike, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        write_rows(fh, columns, rows)
    return path


def read_columns(path: PathLike) -> Dict[str, np.ndarray]:
    """读回 write_csv 写出的数值表，空字段为 nan"""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        names = reader.fieldnames or []
    return {
        name: np.array([float(row[name]) if row[name] != "" else math.nan for row in rows])
        for name in names
    }


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON 无 inf/nan，写为字符串
        return value if math.isfinite(value) else str(value)
    return value


def to_json_text(payload: Any) -> str:
    if hasattr(payload, "model_dump"):
        payload = payload.model_dump(mode="json")
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False)


def write_json(path: PathLike, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json_text(payload) + "\n", encoding="utf-8")
    return path


class ArtifactManager:
    """单次运行的产物目录管理器"""

    def __init__(self, directory: PathLike, task_id: Optional[str] = None):
        self.directory = Path(directory)
        self.task_id = task_id
        self.artifacts: Dict[str, Path] = {}
        self._sink_id: Optional[int] = None
        self._opened = False

    def open(self, log_file: bool = True) -> "ArtifactManager":
        """创建目录并挂载运行日志"""
        if self._opened:
            return self
        self.directory.mkdir(parents=True, exist_ok=True)
        if log_file and self.task_id:
            self._sink_id = add_run_sink(self.directory / "run.log", self.task_id)
        self._opened = True
        logger.debug(f"artifact directory opened: {self.directory}")
        return self

    def close(self) -> None:
        if self._sink_id is not None:
            remove_run_sink(self._sink_id)
            self._sink_id = None
        self._opened = False
        logger.debug(f"artifact directory closed: {self.directory} ({len(self.artifacts)} files)")

    def __enter__(self) -> "ArtifactManager":
        return self.open()

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def path(self, name: str) -> Path:
        return self.directory / name

    def _register(self, name: str, path: Path) -> Path:
        self.artifacts[name] = path
        return path

    def csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        return self._register(name, write_csv(self.path(name), columns, rows))

    def columns(self, name: str, data: Dict[str, Any]) -> Path:
        """按列写 CSV，各列长度须一致"""
        names = list(data)
        arrays = [np.asarray(data[k]) for k in names]
        lengths = {a.shape[0] for a in arrays}
        if len(lengths) > 1:
            raise ValueError(f"columns of {name} differ in length: {lengths}")
        return self.csv(name, names, zip(*arrays))

    def json(self, name: str, payload: Any) -> Path:
        return self._register(name, write_json(self.path(name), payload))

    def svg(self, name: str, figure) -> Path:
        path = self.path(name)
        figure.savefig(path, format="svg", metadata={"Date": None})
        return self._register(name, path)

    def listing(self) -> List[str]:
        return sorted(self.artifacts)
