# app/cli/dependencies.py
import json
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError

from app.core.exceptions import ConfigError
from app.models.schemas import PotentialParams, RunConfig

# 命令行参数 -> 配置字段路径
OVERRIDES = {
    "model": ("model",),
    "energy": ("init", "energy"),
    "v0": ("init", "v0"),
    "x0": ("init", "x0"),
    "k0": ("init", "k0"),
    "branch": ("init", "branch"),
    "energy_offset": ("init", "energy_offset"),
    "t_end": ("numerics", "t_end"),
    "dt": ("numerics", "dt"),
    "stride": ("numerics", "stride"),
    "out": ("outputs", "directory"),
    "name": ("name",),
}


def _line_of(text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


def read_config_file(path: Path) -> Dict[str, Any]:
    """读取 JSON 配置，语法错误报告行列号"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}", {"path": str(path)})
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(
            f"{path}:{e.lineno}:{e.colno}: {e.msg}",
            {"path": str(path), "line": e.lineno, "column": e.colno},
        )
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object", {"path": str(path)})
    data.setdefault("name", Path(path).stem)
    return data


def apply_overrides(data: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """命令行参数覆盖文件中的值；给出 energy 时清除 v0，反之亦然"""
    data = json.loads(json.dumps(data))
    for key, value in overrides.items():
        if value is None or key not in OVERRIDES:
            continue
        *parents, leaf = OVERRIDES[key]
        node = data
        for parent in parents:
            node = node.setdefault(parent, {})
        node[leaf] = value
        if key == "energy":
            node.pop("v0", None)
        elif key == "v0":
            node.pop("energy", None)
    return data


def build_config(data: Dict[str, Any], source: str = "<flags>", text: Optional[str] = None) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(p) for p in first["loc"]) or "<root>"
        line = None
        if text is not None:
            keys = [p for p in first["loc"] if isinstance(p, str)]
            line = _line_of(text, keys[-1]) if keys else None
        where = f"{source}:{line}" if line else source
        errors = [{"loc": list(err["loc"]), "msg": err["msg"], "type": err["type"]} for err in e.errors()]
        raise ConfigError(
            f"{where}: field '{field}': {first['msg']}",
            {"source": source, "field": field, "line": line, "errors": errors},
        )


def load_run_config(path: Optional[Path], overrides: Dict[str, Any], default_model: Optional[str] = None) -> RunConfig:
    if path is not None:
        text = Path(path).read_text(encoding="utf-8") if Path(path).is_file() else None
        data, source = read_config_file(path), str(path)
    else:
        text, data, source = None, {"name": default_model or "run", "init": {}}, "<flags>"
    if default_model and overrides.get("model") is None:
        overrides = {**overrides, "model": default_model}
    return build_config(apply_overrides(data, overrides), source, text)


def potential_from_args(a: Optional[float], b: Optional[float], c: Optional[float]) -> PotentialParams:
    defaults = PotentialParams()
    return PotentialParams(
        a=defaults.a if a is None else a,
        b=defaults.b if b is None else b,
        c=defaults.c if c is None else c,
    )
