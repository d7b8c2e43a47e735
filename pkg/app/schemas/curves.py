from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.estimates import EstimateSet, Method, StudyDesign


class SetKind(str, Enum):
    """置信集类型"""
    EMPTY = "empty"
    INTERVAL = "interval"
    FULL = "full"
    NON_INTERVAL = "non_interval"


class ConfidenceCurve(BaseModel):
    """置信曲线 ρ ↦ 1 − p_ρ 在网格上的取值"""
    model_config = ConfigDict(frozen=True)

    grid: List[float] = Field(..., description="[−1, 1] 上严格递增的 ρ 网格")
    cc: List[float] = Field(..., description="与网格对齐的 1 − p 值")
    method: Method
    est: EstimateSet
    design: StudyDesign

    @model_validator(mode="after")
    def validate_alignment(self) -> "ConfidenceCurve":
        if len(self.grid) != len(self.cc):
            raise ValueError("grid 与 cc 长度必须一致")
        if not self.grid:
            raise ValueError("置信曲线不能为空")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid 必须严格递增")
        if any(not 0 <= v <= 1 for v in self.cc):
            raise ValueError("cc 取值必须在 [0, 1] 内")
        return self


class ConfidenceSet(BaseModel):
    """水平 level 的置信集"""
    model_config = ConfigDict(frozen=True)

    level: float = Field(..., gt=0, lt=1)
    kind: SetKind
    # interval 只有一对端点，non_interval 有多对；empty 为空列表，full 为 [(−1, 1)]
    endpoints: List[Tuple[float, float]] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_endpoints(self) -> "ConfidenceSet":
        if self.kind is SetKind.EMPTY and self.endpoints:
            raise ValueError("空集不应有端点")
        if self.kind is SetKind.INTERVAL:
            if len(self.endpoints) != 1:
                raise ValueError("区间必须恰有一对端点")
            lo, hi = self.endpoints[0]
            if not -1 <= lo <= hi <= 1:
                raise ValueError("区间端点必须满足 −1 ≤ lo ≤ hi ≤ 1")
        return self

    @property
    def lower(self) -> Optional[float]:
        return self.endpoints[0][0] if self.endpoints else None

    @property
    def upper(self) -> Optional[float]:
        return self.endpoints[-1][1] if self.endpoints else None

    def contains(self, rho: float) -> bool:
        return any(lo <= rho <= hi for lo, hi in self.endpoints)


class PointEstimates(BaseModel):
    """插值（Spearman）估计与置信曲线最小点"""
    plug_in: float
    curve_minimizer: float
