import math
from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Method(str, Enum):
    """推断方法枚举"""
    CORR = "corr"            # 基于样本相关系数，ρ₂, ρ₃ ∈ [0, 1]
    FREE = "free"            # 同 corr，但 ρ₂, ρ₃ 允许为负
    CRONBACH = "cronbach"    # 基于 Cronbach alpha 的渐近分布
    HS = "hs"                # Hunter-Schmidt 正态近似

    @classmethod
    def _missing_(cls, value):
        # 接受 "HS"、"Corr" 等大小写写法
        if isinstance(value, str):
            lowered = value.strip().lower()
            for member in cls:
                if member.value == lowered:
                    return member
        return None

    @property
    def uses_reliabilities(self) -> bool:
        """第 2、3 个估计值是否按信度（而非相关系数）解释"""
        return self in (Method.CRONBACH, Method.HS)

    @property
    def is_model_based(self) -> bool:
        return self is not Method.HS


class EstimateSet(BaseModel):
    """观测到的三元组 (r₁, r₂, r₃) 或 (r₁, α̂₂, α̂₃)，含义取决于方法"""
    model_config = ConfigDict(frozen=True)

    r1: float = Field(..., gt=-1, lt=1, description="两个带噪测量之间的样本相关系数")
    rel2: float = Field(..., lt=1, description="corr/free 为相关系数 r₂，cronbach/HS 为信度 α̂₂")
    rel3: float = Field(..., lt=1, description="corr/free 为相关系数 r₃，cronbach/HS 为信度 α̂₃")

    @field_validator("r1", "rel2", "rel3")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("估计值必须是有限数")
        return v

    def correlations(self, method: Method) -> Tuple[float, float]:
        """第 2、3 个值在相关系数尺度上的取值（信度取正平方根）"""
        if method.uses_reliabilities:
            return math.sqrt(self.rel2), math.sqrt(self.rel3)
        return self.rel2, self.rel3

    def swapped(self) -> "EstimateSet":
        return EstimateSet(r1=self.r1, rel2=self.rel3, rel3=self.rel2)


class StudyDesign(BaseModel):
    """样本量 (N₁, N₂, N₃) 与测验包数量 (k₂, k₃)"""
    model_config = ConfigDict(frozen=True)

    n1: int = Field(..., ge=4, description="r₁ 的样本量")
    n2: Optional[int] = Field(None, ge=4, description="第 2 个估计的样本量")
    n3: Optional[int] = Field(None, ge=4, description="第 3 个估计的样本量")
    k2: Optional[int] = Field(None, ge=2, description="第 2 个 alpha 的测验包数量")
    k3: Optional[int] = Field(None, ge=2, description="第 3 个 alpha 的测验包数量")

    @model_validator(mode="after")
    def validate_pairs(self) -> "StudyDesign":
        if (self.n2 is None) != (self.n3 is None):
            raise ValueError("n2 与 n3 必须同时给出")
        if (self.k2 is None) != (self.k3 is None):
            raise ValueError("k2 与 k3 必须同时给出")
        return self

    @property
    def has_testlets(self) -> bool:
        return self.k2 is not None

    def swapped(self) -> "StudyDesign":
        return StudyDesign(n1=self.n1, n2=self.n3, n3=self.n2, k2=self.k3, k3=self.k2)


class PValueResult(BaseModel):
    """p 值及最优冗余参数"""
    model_config = ConfigDict(frozen=True)

    method: Method
    rho0: float
    p: float = Field(..., ge=0, le=1)
    # corr/free 为 (ρ₂*, ρ₃*)，cronbach 为 (R₂*, R₃*)，HS 没有冗余参数
    nuisance: Optional[Tuple[float, float]] = None
    # 非 HS 方法为最小化后的二次型 Q*；HS 为正态检验统计量的平方 z²
    objective: float = Field(..., ge=0)
