from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings
from app.schemas.estimates import Method


class SimCell(BaseModel):
    """覆盖率模拟的一个参数组合"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    n: int = Field(..., alias="N", ge=4, description="三个估计共用的样本量")
    rho: float = Field(..., gt=-1, lt=1, description="真实的校正相关系数")
    k: int = Field(..., ge=2, description="测验包数量")
    R: float = Field(..., gt=0, lt=1, description="真实信度（总体 alpha）")

    @model_validator(mode="after")
    def validate_sample_size(self) -> "SimCell":
        # 样本协方差矩阵需要至少 k+1 个观测
        if self.n < self.k + 1:
            raise ValueError(f"N must be at least k + 1 = {self.k + 1}")
        return self

    @property
    def observed_rho(self) -> float:
        """两个信度都为 R 时，带噪测量间的真实相关 ρ·√R·√R = ρ·R"""
        return self.rho * self.R


class SimConfig(BaseModel):
    """覆盖率模拟配置（JSON 字段名与此一致）"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    cells: List[SimCell] = Field(..., min_length=1)
    reps: int = Field(..., ge=1, description="每个参数组合的重复次数")
    level: float = Field(settings.DEFAULT_LEVEL, gt=0, lt=1)
    methods: List[Method] = Field(..., min_length=1)
    seed: int = Field(settings.SIM_DEFAULT_SEED, ge=0, lt=2 ** 64, description="64 位随机种子")

    @field_validator("methods")
    @classmethod
    def validate_methods(cls, v: List[Method]) -> List[Method]:
        if len(set(v)) != len(v):
            raise ValueError("methods 中不能有重复项")
        return v


class CoverageRecord(BaseModel):
    """单个参数组合 × 方法的覆盖计数"""
    model_config = ConfigDict(frozen=True)

    cell: SimCell
    method: Method
    covered: int = Field(..., ge=0)
    reps: int = Field(..., ge=1)
    failures: int = Field(0, ge=0, description="推断失败的重复次数（计为未覆盖）")
    floored: int = Field(0, ge=0, description="α̂ 被截断到下限的次数")

    @model_validator(mode="after")
    def validate_counts(self) -> "CoverageRecord":
        if self.covered + self.failures > self.reps:
            raise ValueError("covered + failures 不能超过 reps")
        return self

    @property
    def coverage(self) -> float:
        return self.covered / self.reps


class MethodSummary(BaseModel):
    """单个方法在全部参数组合上的覆盖率均值与标准差"""
    method: Method
    cells: int
    mean: float
    sd: float
    failures: int
