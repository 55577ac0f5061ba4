from typing import Literal
import os

from pydantic import field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """应用配置（数值默认值）"""

    model_config = SettingsConfigDict(
        case_sensitive=True,
        env_prefix="QTUNNEL_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    PROJECT_NAME: str = "Quartic Double-Well Tunneling"
    VERSION: str = "0.1.0"

    # 日志配置
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{line} - {message}"

    # 输出配置
    OUTPUT_DIR: str = "output"
    MAX_CONCURRENT_RUNS: int = 4

    # 矩方程积分
    MOMENTS_DT: float = 1e-3
    MOMENTS_T_END: float = 100.0
    MOMENTS_STRIDE: int = 10

    # Crank-Nicolson 积分
    TDSE_DT: float = 0.01
    TDSE_T_END: float = 100.0
    TDSE_STRIDE: int = 10
    GRID_X_MIN: float = -100.0
    GRID_X_MAX: float = 100.0
    GRID_N: int = 100_000
    DRIFT_BUDGET: float = 1e-9
    DRIFT_WARN: float = 1e-10
    EDGE_WIDTH: float = 10.0

    # 初始波包：calibrate-branch 在四个判定场景上选出的组合
    ENERGY_FORMULA: Literal["general", "origin"] = "origin"
    VARIANCE_BRANCH: Literal["small", "large"] = "large"

    # 稳定性扫描
    SCAN_E_MIN: float = 8.0
    SCAN_E_MAX: float = 17.5
    SCAN_STEP: float = 0.01

    @field_validator("LOG_LEVEL")
    def normalize_log_level(cls, v):
        return v.strip().upper()

    @field_validator("MOMENTS_DT", "TDSE_DT", "MOMENTS_T_END", "TDSE_T_END", "SCAN_STEP")
    def positive_numerics(cls, v):
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @model_validator(mode="after")
    def check_drift_budgets(self):
        if self.DRIFT_WARN > self.DRIFT_BUDGET:
            raise ValueError("DRIFT_WARN must not exceed DRIFT_BUDGET")
        if self.GRID_X_MIN >= self.GRID_X_MAX or self.GRID_N < 3:
            raise ValueError("grid defaults need GRID_X_MIN < GRID_X_MAX and GRID_N >= 3")
        return self


# 开发环境配置
class DevelopmentSettings(Settings):
    LOG_LEVEL: str = "DEBUG"


# 生产环境配置
class ProductionSettings(Settings):
    LOG_LEVEL: str = "WARNING"


# 测试环境配置：缩小网格，便于快速回归
class TestingSettings(Settings):
    OUTPUT_DIR: str = "output-test"
    GRID_X_MIN: float = -20.0
    GRID_X_MAX: float = 20.0
    GRID_N: int = 8001
    TDSE_T_END: float = 5.0
    MOMENTS_T_END: float = 20.0
    EDGE_WIDTH: float = 2.0


def get_settings() -> Settings:
    """根据环境获取配置"""
    env = os.getenv("ENV", "development")

    if env == "production":
        return ProductionSettings()
    elif env == "testing":
        return TestingSettings()
    else:
        return DevelopmentSettings()


settings = get_settings()
