from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool

from app.core.response import ResponseBuilder
from app.core.logger import logger
from app.schemas.requests import CurveRequest, EstimateRequest, IntervalRequest, PValueRequest
from app.services.attenuation import AttenuationService
from app.services.curves import curve_minimizer

router = APIRouter(prefix="/attenuation", tags=["衰减校正"])


def _service(request: EstimateRequest) -> AttenuationService:
    return AttenuationService.from_inputs(
        request.r, request.n, request.method, request.k, request.reliabilities
    )


@router.post("/pvalue", summary="计算 p 值")
async def compute_pvalue(request: PValueRequest):
    """H₀: ρ = ρ⁰ 的 p 值与最优冗余参数"""
    service = _service(request)
    result = await run_in_threadpool(service.pvalue, request.rho)

    return ResponseBuilder.success(
        data=result.model_dump(mode="json"),
        message="p 值计算成功"
    )


@router.post("/ci", summary="计算置信集")
async def compute_confidence_set(request: IntervalRequest):
    """水平 level 的置信集"""
    service = _service(request)
    result = await run_in_threadpool(service.confidence_set, request.level)

    logger.info(f"置信集: method={request.method.value} kind={result.kind.value} endpoints={result.endpoints}")
    return ResponseBuilder.success(
        data=result.model_dump(mode="json"),
        message="置信集计算成功"
    )


@router.post("/cc", summary="计算置信曲线")
async def compute_confidence_curve(request: CurveRequest):
    """置信曲线及其最小点"""
    service = _service(request)
    curve = await run_in_threadpool(service.confidence_curve, request.grid)
    minimizer = await run_in_threadpool(curve_minimizer, curve)

    data = curve.model_dump(mode="json", include={"grid", "cc", "method"})
    data["curve_minimizer"] = minimizer
    return ResponseBuilder.success(data=data, message="置信曲线计算成功")


@router.post("/estimate", summary="计算点估计")
async def compute_point_estimates(request: EstimateRequest):
    """Spearman 插值估计与置信曲线最小点"""
    service = _service(request)
    result = await run_in_threadpool(service.point_estimates)

    return ResponseBuilder.success(
        data=result.model_dump(mode="json"),
        message="点估计计算成功"
    )
