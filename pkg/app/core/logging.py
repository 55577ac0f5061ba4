# app/core/logging.py
import sys
from pathlib import Path
from typing import Optional

from loguru import logger

from app.core.config import settings


def configure_logging(level: Optional[str] = None) -> None:
    """配置 loguru 日志输出"""
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.LOG_LEVEL).upper(),
        format=settings.LOG_FORMAT,
        backtrace=False,
        diagnose=False,
    )


def add_run_sink(path: Path, task_id: str) -> int:
    """为单个运行添加文件日志，只记录绑定了该 task_id 的消息"""
    return logger.add(
        path,
        level="DEBUG",
        format=settings.LOG_FORMAT,
        filter=lambda record: record["extra"].get("task_id") == task_id,
    )


def remove_run_sink(sink_id: int) -> None:
    """关闭文件句柄；同一 sink 只能移除一次"""
    logger.remove(sink_id)
