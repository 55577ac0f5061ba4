# app/core/exceptions.py
from typing import Any, Optional


class TunnelingError(Exception):
    """所有领域错误的基类；每个子类对应一个固定的非零退出码"""

    error: str = "TunnelingError"
    exit_code: int = 1

    def __init__(self, message: str, detail: Optional[Any] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def to_response(self):
        from app.models.schemas import ErrorResponse

        return ErrorResponse(error=self.error, message=self.message, detail=self.detail)


class ConfigError(TunnelingError):
    error = "ConfigError"
    exit_code = 2


class InvalidParams(TunnelingError):
    error = "InvalidParams"
    exit_code = 10


class DegenerateQuartic(TunnelingError):
    error = "DegenerateQuartic"
    exit_code = 11


class NoBarrier(TunnelingError):
    error = "NoBarrier"
    exit_code = 12


class NonPositiveVariance(TunnelingError):
    error = "NonPositiveVariance"
    exit_code = 20


class EnergyTooLow(TunnelingError):
    error = "EnergyTooLow"
    exit_code = 21

    def __init__(self, message: str, min_energy: float, detail: Optional[Any] = None):
        super().__init__(message, detail if detail is not None else {"min_energy": min_energy})
        self.min_energy = min_energy


class GridTooNarrow(TunnelingError):
    error = "GridTooNarrow"
    exit_code = 22


class VarianceCollapse(TunnelingError):
    error = "VarianceCollapse"
    exit_code = 30

    def __init__(self, t: float, variance: float):
        super().__init__(f"variance collapsed to {variance:.3e} at t={t:.6g}", {"t": t, "variance": variance})
        self.t = t


class NonFiniteState(TunnelingError):
    error = "NonFiniteState"
    exit_code = 31

    def __init__(self, t: float):
        super().__init__(f"non-finite moment state at t={t:.6g}", {"t": t})
        self.t = t


class InvalidGrid(TunnelingError):
    error = "InvalidGrid"
    exit_code = 40


class SingularPivot(TunnelingError):
    error = "SingularPivot"
    exit_code = 41


class DriftBudgetExceeded(TunnelingError):
    error = "DriftBudgetExceeded"
    exit_code = 42


class EmptySeries(TunnelingError):
    error = "EmptySeries"
    exit_code = 50


class DisjointWindows(TunnelingError):
    error = "DisjointWindows"
    exit_code = 51
