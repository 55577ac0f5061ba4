import math
from datetime import datetime
from enum import Enum
from typing import Any, ClassVar, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.exceptions import InvalidGrid, InvalidParams, NonPositiveVariance


class RunStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class LandscapeRegime(str, Enum):
    """势能形状分类（随 c 减小依次为 A→E）"""
    SINGLE_WELL = "A"
    INFLECTION = "B"
    SHALLOW_RIGHT = "C"
    SYMMETRIC = "D"
    DEEP_RIGHT = "E"

    @property
    def label(self) -> str:
        return {
            "A": "single-well",
            "B": "inflection",
            "C": "asymmetric-shallow-right",
            "D": "symmetric",
            "E": "asymmetric-deep-right",
        }[self.value]


class EnergyRegime(str, Enum):
    NO_FIXED_POINT = "no-fixed-point"
    EXISTS_UNSTABLE = "exists-unstable"
    STABLE_TUNNELING = "stable-tunneling"
    ABOVE_BARRIER = "above-barrier"


class StationaryKind(str, Enum):
    MINIMUM = "minimum"
    MAXIMUM = "maximum"
    INFLECTION = "inflection"


# ---------------------------------------------------------------- potential

class PotentialParams(BaseModel):
    """φ(x) = (a/2)x² − (b/3)x³ + (c/4)x⁴ 的系数"""
    model_config = ConfigDict(frozen=True)

    a: float = Field(10.0, description="quadratic coefficient")
    b: float = Field(4.0, description="cubic coefficient")
    c: float = Field(0.35, description="quartic coefficient")

    @model_validator(mode="after")
    def check_coefficients(self):
        for name in ("a", "b", "c"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidParams(f"coefficient {name}={value} must be finite and non-negative", {name: value})
        return self

    def require_positive(self) -> "PotentialParams":
        """双势阱相关的计算要求三个系数均为正"""
        bad = {k: v for k, v in self.model_dump().items() if v <= 0}
        if bad:
            raise InvalidParams(f"coefficients must be positive: {bad}", bad)
        return self


class StationaryPoint(BaseModel):
    x: float
    kind: StationaryKind
    phi: float


class PotentialReport(BaseModel):
    params: PotentialParams
    c0: float = Field(..., description="symmetric-well critical coupling 2b²/9a")
    c0_prime: float = Field(..., description="inflection critical coupling b²/4a")
    stationary_points: List[StationaryPoint]
    beta_minus: Optional[float] = None
    beta_plus: Optional[float] = None
    alpha_minus: Optional[float] = None
    alpha_plus: Optional[float] = None
    barrier_height: Optional[float] = None
    delta: Optional[float] = None
    regime: LandscapeRegime
    regime_name: str


# ---------------------------------------------------------------- packets

class GaussianSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    x0: float = 0.0
    v0: float
    k0: float = 0.0

    @model_validator(mode="after")
    def check_variance(self):
        if not self.v0 > 0:
            raise NonPositiveVariance(f"packet variance must be positive, got {self.v0}", {"v0": self.v0})
        return self


# ---------------------------------------------------------------- moments

class MomentState(BaseModel):
    """约化系统的相点 (⟨x⟩, ⟨p⟩, V, dV/dt)"""
    model_config = ConfigDict(frozen=True)

    mean_x: float
    mean_p: float = 0.0
    variance: float
    variance_rate: float = 0.0

    @model_validator(mode="after")
    def check_variance(self):
        if not self.variance > 0:
            raise NonPositiveVariance(f"variance must be positive, got {self.variance}", {"variance": self.variance})
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.mean_x, self.mean_p, self.variance, self.variance_rate], dtype=float)

    @classmethod
    def from_array(cls, y) -> "MomentState":
        return cls(mean_x=float(y[0]), mean_p=float(y[1]), variance=float(y[2]), variance_rate=float(y[3]))


class MomentSystemParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    # 高斯闭合：K = 3V²，为模型常数而非状态变量
    KURTOSIS_FACTOR: ClassVar[float] = 3.0

    potential: PotentialParams
    energy: float = Field(..., ge=0, description="conserved mean energy E")
    skewness: float = Field(0.0, description="third central moment S, constant during a run")


class MomentSeries(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    states: np.ndarray = Field(..., description="(n, 4) array of mean_x, mean_p, variance, variance_rate")
    vp: np.ndarray = Field(..., description="momentum-variance diagnostic per sample")

    @property
    def mean_x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def mean_p(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def variance(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def variance_rate(self) -> np.ndarray:
        return self.states[:, 3]

    def state(self, i: int) -> MomentState:
        return MomentState.from_array(self.states[i])

    def __len__(self) -> int:
        return len(self.times)


# ---------------------------------------------------------------- fixed points

class StabilityMatrix(BaseModel):
    """(δ⟨x⟩, δV) 二阶扰动方程的 2×2 矩阵"""
    model_config = ConfigDict(frozen=True)

    a11: float
    a12: float
    a21: float
    a22: float

    @model_validator(mode="after")
    def check_finite(self):
        if not all(math.isfinite(v) for v in (self.a11, self.a12, self.a21, self.a22)):
            raise ValueError("stability matrix entries must be finite")
        return self

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    @property
    def determinant(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])


class VStarRoot(BaseModel):
    value: float
    branch: Literal["plus", "minus"]


class VStarSolution(BaseModel):
    x_star: float
    energy: float
    discriminant: float
    roots: List[VStarRoot] = Field(default_factory=list)
    rejected: List[float] = Field(default_factory=list, description="real but non-positive roots")

    def root(self, branch: str) -> Optional[float]:
        for r in self.roots:
            if r.branch == branch:
                return r.value
        return None


class FixedPointSolution(BaseModel):
    x_star: float
    v_star: float
    skewness: float
    discriminant: float
    branch: Literal["plus", "minus"]
    eigenvalues_re: Tuple[float, float]
    eigenvalues_im: Tuple[float, float]
    stable: bool

    @property
    def eigenvalues(self) -> Tuple[complex, complex]:
        return (
            complex(self.eigenvalues_re[0], self.eigenvalues_im[0]),
            complex(self.eigenvalues_re[1], self.eigenvalues_im[1]),
        )


class EnergyInterval(BaseModel):
    label: EnergyRegime
    lower: Optional[float] = None
    upper: Optional[float] = None


class ThresholdReport(BaseModel):
    params: PotentialParams
    barrier_x: float
    e_exist: float
    e_stable: float
    v_stable: float
    e_barrier: float
    regimes: List[EnergyInterval]
    well_fixed_points: List[FixedPointSolution] = Field(default_factory=list)


# ---------------------------------------------------------------- TDSE

class Grid(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_min: float = -100.0
    x_max: float = 100.0
    n: int = 100_000

    @model_validator(mode="after")
    def check_grid(self):
        if self.n < 3 or not self.x_min < self.x_max:
            raise InvalidGrid(
                f"grid needs n >= 3 and x_min < x_max, got n={self.n}, [{self.x_min}, {self.x_max}]",
                {"x_min": self.x_min, "x_max": self.x_max, "n": self.n},
            )
        return self

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)


class WaveField(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    grid: Grid
    amplitudes: np.ndarray

    @model_validator(mode="after")
    def check_field(self):
        if self.amplitudes.shape != (self.grid.n,):
            raise ValueError(f"amplitudes shape {self.amplitudes.shape} does not match grid n={self.grid.n}")
        if self.amplitudes[0] != 0 or self.amplitudes[-1] != 0:
            raise ValueError("Dirichlet endpoints must be exactly zero")
        return self


class Observables(BaseModel):
    norm: float
    mean_x: float
    mean_p: float
    variance: float
    energy: float


class DriftSummary(BaseModel):
    max_norm_drift: float = 0.0
    max_energy_drift: float = 0.0
    max_edge_probability: float = 0.0


class ObservableSeries(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    norm: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    variance: np.ndarray
    energy: np.ndarray
    drift: DriftSummary = Field(default_factory=DriftSummary)

    def __len__(self) -> int:
        return len(self.times)


# ---------------------------------------------------------------- harness

class GridSpec(BaseModel):
    x_min: Optional[float] = None
    x_max: Optional[float] = None
    n: Optional[int] = None


class InitSpec(BaseModel):
    x0: float = 0.5
    k0: float = 0.0
    energy: Optional[float] = None
    v0: Optional[float] = None
    branch: Optional[Literal["small", "large"]] = None
    energy_offset: Literal["none", "plus-delta"] = "none"
    energy_formula: Optional[Literal["general", "origin"]] = None

    @model_validator(mode="after")
    def exactly_one_of_energy_v0(self):
        if (self.energy is None) == (self.v0 is None):
            raise ValueError("exactly one of init.energy / init.v0 must be given")
        return self


class NumericsSpec(BaseModel):
    dt: Optional[float] = Field(None, gt=0)
    t_end: Optional[float] = Field(None, gt=0)
    stride: Optional[int] = Field(None, ge=1)
    grid: GridSpec = Field(default_factory=GridSpec)


class OutputSpec(BaseModel):
    directory: Optional[str] = None
    emit_svg: bool = False
    emit_snapshots: bool = False
    snapshot_every: float = Field(10.0, gt=0, description="snapshot interval in time units")


class RunConfig(BaseModel):
    """单次运行配置"""
    name: str = "run"
    model: Literal["moments", "tdse", "both"] = "moments"
    potential: PotentialParams = Field(default_factory=PotentialParams)
    init: InitSpec
    numerics: NumericsSpec = Field(default_factory=NumericsSpec)
    outputs: OutputSpec = Field(default_factory=OutputSpec)
    skewness_policy: Literal["fixed-point", "zero"] = "fixed-point"

    @field_validator("name")
    def validate_name(cls, v):
        if not v or not v.strip():
            raise ValueError("run name must not be empty")
        return v.strip()

    @model_validator(mode="after")
    def check_potential(self):
        self.potential.require_positive()
        return self


class TunnelingReport(BaseModel):
    barrier_x: float
    crossed: bool
    first_crossing_time: Optional[float] = None
    n_crossings: int = 0
    left_fraction: float
    right_fraction: float


class ComparisonReport(BaseModel):
    t_start: float
    t_end: float
    rms_mean_x: float = Field(..., ge=0)
    rms_variance: float = Field(..., ge=0)
    verdict_agreement: bool


class ResolvedInit(BaseModel):
    """解析后的初始条件，写入 run.json"""
    x0: float
    k0: float
    energy: float = Field(..., description="effective E after the Δ offset")
    energy_offset: float = 0.0
    v0: float
    branch: Optional[Literal["small", "large"]] = None
    energy_formula: Literal["general", "origin"] = "general"
    skewness: float = 0.0
    skewness_warning: Optional[str] = None
    regime: Optional[EnergyRegime] = None


class ScenarioResult(BaseModel):
    """单个模型运行的结果，依次经过各个管道"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    task_id: str
    name: str
    model: Literal["moments", "tdse"]
    init: ResolvedInit
    series: Any = Field(..., description="MomentSeries or ObservableSeries")
    tunneling: Optional[TunnelingReport] = None
    snapshots: List[Tuple[float, Any]] = Field(default_factory=list, description="(t, WaveField) pairs")
    stats: dict = Field(default_factory=dict)
    artifacts: List[str] = Field(default_factory=list)


class RunOutcome(BaseModel):
    """一次 run 的全部结果"""
    task_id: str
    name: str
    output_dir: str
    results: dict = Field(default_factory=dict, description="model -> ScenarioResult")
    comparison: Optional[ComparisonReport] = None
    artifacts: List[str] = Field(default_factory=list)


class TaskStatusResponse(BaseModel):
    """任务状态模型"""
    task_id: str = Field(..., description="任务ID")
    name: str = Field(..., description="运行名称")
    status: RunStatus = Field(..., description="任务状态")
    start_time: Optional[datetime] = Field(None, description="开始时间")
    end_time: Optional[datetime] = Field(None, description="结束时间")
    output_dir: Optional[str] = Field(None, description="产物目录")
    exit_code: Optional[int] = Field(None, description="退出码")
    error_message: Optional[str] = Field(None, description="错误信息")
    execution_time: Optional[float] = Field(None, description="执行时间（秒）")

    @model_validator(mode="after")
    def calculate_execution_time(self):
        if self.execution_time is None and self.start_time and self.end_time:
            self.execution_time = (self.end_time - self.start_time).total_seconds()
        return self


class ErrorResponse(BaseModel):
    """错误响应模型"""
    error: str = Field(..., description="错误类型")
    message: str = Field(..., description="错误消息")
    detail: Optional[Any] = Field(None, description="错误详情")
    timestamp: datetime = Field(default_factory=datetime.now, description="错误时间")
