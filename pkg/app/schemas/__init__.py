from .estimates import EstimateSet, Method, PValueResult, StudyDesign
from .curves import ConfidenceCurve, ConfidenceSet, PointEstimates, SetKind
from .simulation import CoverageRecord, MethodSummary, SimCell, SimConfig
from .requests import CurveRequest, EstimateRequest, IntervalRequest, PValueRequest

__all__ = [
    # 估计值与推断结果
    "EstimateSet", "Method", "PValueResult", "StudyDesign",

    # 置信曲线与置信集
    "ConfidenceCurve", "ConfidenceSet", "PointEstimates", "SetKind",

    # 覆盖率模拟
    "CoverageRecord", "MethodSummary", "SimCell", "SimConfig",

    # HTTP 请求体
    "CurveRequest", "EstimateRequest", "IntervalRequest", "PValueRequest",
]
