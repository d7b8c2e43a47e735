from typing import Optional, Sequence

from pydantic import ValidationError

from app.core.exceptions import ConfigurationException
from app.core.logger import logger
from app.schemas.curves import ConfidenceCurve, ConfidenceSet, PointEstimates
from app.schemas.estimates import EstimateSet, Method, PValueResult, StudyDesign
from app.services import curves, inference


def build_design(
    n: Sequence[int],
    method: Method,
    k: Optional[Sequence[int]] = None
) -> StudyDesign:
    """根据 --n / --k 输入构造研究设计并检查方法所需字段"""
    if method is Method.HS:
        if len(n) not in (1, 3):
            raise ConfigurationException("--n takes N1 or N1,N2,N3", field="n")
    elif len(n) != 3:
        raise ConfigurationException(f"method {method.value} requires --n N1,N2,N3", field="n")

    if method is Method.CRONBACH:
        if k is None or len(k) != 2:
            raise ConfigurationException("method cronbach requires --k k2,k3", field="k")
    elif k is not None:
        raise ConfigurationException("--k is only valid with method cronbach", field="k")

    fields = {"n1": n[0]}
    if len(n) == 3:
        fields.update(n2=n[1], n3=n[2])
    if k is not None:
        fields.update(k2=k[0], k3=k[1])
    try:
        return StudyDesign(**fields)
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(part) for part in error.get("loc", ())) or "n"
        raise ConfigurationException(
            f"invalid study design: {error.get('msg', '').replace('Value error, ', '')}", field=field
        ) from e


class AttenuationService:
    """一组 (估计值, 研究设计, 方法) 上的推断服务"""

    def __init__(self, est: EstimateSet, design: StudyDesign, method: Method):
        inference.validate_inputs(est, design, method)
        self.est = est
        self.design = design
        self.method = method

    @classmethod
    def from_inputs(
        cls,
        r: Sequence[float],
        n: Sequence[int],
        method: Method,
        k: Optional[Sequence[int]] = None,
        reliabilities: Optional[bool] = None
    ) -> "AttenuationService":
        est = inference.to_estimate_set(r, method, reliabilities)
        design = build_design(n, method, k)
        return cls(est, design, method)

    def pvalue(self, rho0: float) -> PValueResult:
        result = inference.pvalue(rho0, self.est, self.design, self.method, validate=False)
        logger.debug(f"p 值: method={self.method.value} rho0={rho0} p={result.p:.7g}")
        return result

    def confidence_set(self, level: Optional[float] = None, grid_n: Optional[int] = None) -> ConfidenceSet:
        return curves.confidence_set(self.est, self.design, self.method, level, grid_n)

    def confidence_curve(self, grid_n: Optional[int] = None) -> ConfidenceCurve:
        return curves.confidence_curve(self.est, self.design, self.method, grid_n)

    def point_estimates(self, grid_n: Optional[int] = None) -> PointEstimates:
        return curves.point_estimates(self.est, self.design, self.method, grid_n)

    def comparison_curve(self, grid_n: Optional[int] = None) -> ConfidenceCurve:
        """同一数据上的 Hunter-Schmidt 曲线，用于与模型方法对比"""
        r2, r3 = self.est.correlations(self.method)
        est = EstimateSet(r1=self.est.r1, rel2=r2 * r2, rel3=r3 * r3)
        return curves.confidence_curve(est, StudyDesign(n1=self.design.n1), Method.HS, grid_n)


def p_value(rho: float, r: Sequence[float], n: Sequence[int], method: str = "corr",
            k: Optional[Sequence[int]] = None, reliabilities: Optional[bool] = None) -> float:
    """库函数：H₀: ρ = rho 的 p 值"""
    return AttenuationService.from_inputs(r, n, Method(method), k, reliabilities).pvalue(rho).p


def ci(r: Sequence[float], n: Sequence[int], method: str = "corr", level: Optional[float] = None,
       k: Optional[Sequence[int]] = None, reliabilities: Optional[bool] = None) -> ConfidenceSet:
    """库函数：置信集"""
    return AttenuationService.from_inputs(r, n, Method(method), k, reliabilities).confidence_set(level)


def cc(r: Sequence[float], n: Sequence[int], method: str = "corr", grid: Optional[int] = None,
       k: Optional[Sequence[int]] = None, reliabilities: Optional[bool] = None) -> ConfidenceCurve:
    """库函数：置信曲线"""
    return AttenuationService.from_inputs(r, n, Method(method), k, reliabilities).confidence_curve(grid)
