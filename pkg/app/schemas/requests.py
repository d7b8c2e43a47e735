from typing import List, Optional

from pydantic import BaseModel, Field

from app.core.config import settings
from app.schemas.estimates import Method


class EstimateRequest(BaseModel):
    """推断请求的公共字段"""
    method: Method = Field(Method.CORR, description="推断方法")
    r: List[float] = Field(..., min_length=3, max_length=3, description="r1, r2, r3")
    n: List[int] = Field(..., min_length=1, max_length=3, description="N1[, N2, N3]")
    k: Optional[List[int]] = Field(None, min_length=2, max_length=2, description="k2, k3（仅 cronbach）")
    reliabilities: Optional[bool] = Field(
        None, description="第 2、3 个值是否为信度；为空时取方法默认"
    )


class PValueRequest(EstimateRequest):
    """p 值请求"""
    rho: float = Field(..., description="原假设 ρ⁰")


class IntervalRequest(EstimateRequest):
    """置信集请求"""
    level: float = Field(settings.DEFAULT_LEVEL, gt=0, lt=1, description="置信水平")


class CurveRequest(EstimateRequest):
    """置信曲线请求"""
    grid: int = Field(settings.CC_GRID_SIZE, ge=16, le=10000, description="网格点数")
