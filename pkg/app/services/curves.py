# -*- coding: utf-8 -*-
"""
置信曲线与置信集

置信曲线是 ρ ↦ 1 − p_ρ，在 [−1, 1] 的等距网格上逐点计算；
水平 level 的置信集是 {ρ : p(ρ) ≥ 1 − level}，先在网格上找 p − α 的
变号位置，再对每个变号区间做有界求根。
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import optimize

from app.core.config import settings
from app.core.exceptions import DomainException, FileOperationException
from app.core.logger import logger
from app.schemas.curves import ConfidenceCurve, ConfidenceSet, PointEstimates, SetKind
from app.schemas.estimates import EstimateSet, Method, StudyDesign
from app.services.inference import hs_interval, point_estimate, pvalue, validate_inputs

# 平坦曲线判定阈值
FLAT_TOLERANCE = 1e-12


def _pvalue_function(est: EstimateSet, design: StudyDesign, method: Method) -> Callable[[float], float]:
    def p_at(rho: float) -> float:
        return pvalue(rho, est, design, method, validate=False).p
    return p_at


def _evaluate(func: Callable[[float], float], grid: np.ndarray, workers: int) -> np.ndarray:
    # 各网格点相互独立；map 保持顺序，结果与并发度无关
    if workers <= 1:
        return np.array([func(float(rho)) for rho in grid])
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return np.array(list(executor.map(func, (float(rho) for rho in grid))))


def _grid(grid_n: int) -> np.ndarray:
    if grid_n < settings.MIN_GRID_SIZE:
        raise DomainException(
            f"grid size must be at least {settings.MIN_GRID_SIZE}, got {grid_n!r}",
            field="grid", value=grid_n
        )
    grid = np.linspace(-1.0, 1.0, grid_n)
    grid[0], grid[-1] = -1.0, 1.0
    return grid


def confidence_curve(
    est: EstimateSet,
    design: StudyDesign,
    method: Method,
    grid_n: Optional[int] = None,
    workers: int = 1
) -> ConfidenceCurve:
    """在 grid_n 个等距点（含 ±1）上计算 1 − p"""
    validate_inputs(est, design, method)
    grid = _grid(grid_n or settings.CC_GRID_SIZE)
    p = _evaluate(_pvalue_function(est, design, method), grid, workers)
    cc = np.clip(1.0 - p, 0.0, 1.0)
    return ConfidenceCurve(
        grid=grid.tolist(), cc=cc.tolist(), method=method, est=est, design=design
    )


def _refine_crossing(func: Callable[[float], float], lo: float, hi: float) -> float:
    """在 [lo, hi] 上求 func 的零点（两端异号）"""
    return optimize.brentq(func, lo, hi, xtol=settings.CROSSING_TOLERANCE / 100, maxiter=200)


def _runs(accepted: np.ndarray) -> List[Tuple[int, int]]:
    """连续接受的网格下标区段 [start, stop]"""
    runs = []
    start = None
    for i, flag in enumerate(accepted):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(accepted) - 1))
    return runs


def _peak_run(
    excess: Callable[[float], float],
    grid: np.ndarray,
    p: np.ndarray
) -> Optional[Tuple[float, float]]:
    """网格上没有接受点时，在最大 p 附近细化，以免漏掉窄于网格间距的置信集"""
    i = int(np.argmax(p))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    result = optimize.minimize_scalar(
        lambda rho: -excess(rho), bounds=(lo, hi), method="bounded",
        options={"xatol": settings.CROSSING_TOLERANCE}
    )
    peak = float(result.x)
    if excess(peak) < 0:
        return None
    left = lo if excess(lo) >= 0 else _refine_crossing(excess, lo, peak)
    right = hi if excess(hi) >= 0 else _refine_crossing(excess, peak, hi)
    return left, right


def confidence_set(
    est: EstimateSet,
    design: StudyDesign,
    method: Method,
    level: Optional[float] = None,
    grid_n: Optional[int] = None,
    workers: int = 1
) -> ConfidenceSet:
    """
    水平 level 的置信集 {ρ : p(ρ) ≥ 1 − level}

    HS 方法直接返回裁剪到 [−1, 1] 的闭式区间；其余方法扫描网格并在
    每个变号处求根。多个不相连的接受区段会报告为 non_interval。
    """
    level = settings.DEFAULT_LEVEL if level is None else level
    if not 0 < level < 1:
        raise DomainException(f"level must lie in (0, 1), got {level!r}", field="level", value=level)
    validate_inputs(est, design, method)

    if method is Method.HS:
        interval = hs_interval(est, design, level)
        if interval.clipped_lo is None:
            return ConfidenceSet(level=level, kind=SetKind.EMPTY)
        kind = SetKind.FULL if (interval.clipped_lo, interval.clipped_hi) == (-1.0, 1.0) else SetKind.INTERVAL
        return ConfidenceSet(
            level=level, kind=kind, endpoints=[(interval.clipped_lo, interval.clipped_hi)]
        )

    alpha = 1.0 - level
    p_at = _pvalue_function(est, design, method)

    def excess(rho: float) -> float:
        return p_at(rho) - alpha

    grid = _grid(grid_n or settings.CI_GRID_SIZE)
    p = _evaluate(p_at, grid, workers)
    accepted = p >= alpha

    if accepted.all():
        return ConfidenceSet(level=level, kind=SetKind.FULL, endpoints=[(-1.0, 1.0)])

    runs = _runs(accepted)
    if not runs:
        peak = _peak_run(excess, grid, p)
        if peak is None:
            return ConfidenceSet(level=level, kind=SetKind.EMPTY)
        return ConfidenceSet(level=level, kind=SetKind.INTERVAL, endpoints=[peak])

    endpoints = []
    for start, stop in runs:
        lo = -1.0 if start == 0 else _refine_crossing(excess, grid[start - 1], grid[start])
        hi = 1.0 if stop == len(grid) - 1 else _refine_crossing(excess, grid[stop], grid[stop + 1])
        endpoints.append((float(lo), float(hi)))

    kind = SetKind.INTERVAL if len(endpoints) == 1 else SetKind.NON_INTERVAL
    if kind is SetKind.NON_INTERVAL:
        logger.info(f"置信集不是区间: method={method.value} level={level} endpoints={endpoints}")
    return ConfidenceSet(level=level, kind=kind, endpoints=endpoints)


def curve_minimizer(curve: ConfidenceCurve) -> float:
    """
    置信曲线的最小点（点估计）

    先取网格最小值（并列时取 |ρ| 最小者），再在相邻网格点之间做
    有界一维搜索细化到 1e−6；平坦曲线返回 0。
    """
    grid = np.asarray(curve.grid)
    cc = np.asarray(curve.cc)
    if cc.max() - cc.min() <= FLAT_TOLERANCE:
        return 0.0

    ties = np.flatnonzero(cc <= cc.min() + FLAT_TOLERANCE)
    i = int(ties[np.argmin(np.abs(grid[ties]))])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]

    p_at = _pvalue_function(curve.est, curve.design, curve.method)

    def cc_at(rho: float) -> float:
        return 1.0 - p_at(rho)

    result = optimize.minimize_scalar(
        cc_at, bounds=(lo, hi), method="bounded",
        options={"xatol": settings.CROSSING_TOLERANCE}
    )
    # 最小点可能落在区间端点（如插值估计超出 [−1, 1] 时取 ±1）
    candidates = [(float(cc_at(float(x))), float(x)) for x in (lo, hi, grid[i])]
    candidates.append((float(result.fun), float(result.x)))
    best_value = min(value for value, _ in candidates)
    best = [x for value, x in candidates if value <= best_value + FLAT_TOLERANCE]
    return min(best, key=abs)


def point_estimates(
    est: EstimateSet,
    design: StudyDesign,
    method: Method,
    grid_n: Optional[int] = None
) -> PointEstimates:
    """插值估计与曲线最小点"""
    curve = confidence_curve(est, design, method, grid_n)
    return PointEstimates(plug_in=point_estimate(est, method), curve_minimizer=curve_minimizer(curve))


def curve_frame(curve: ConfidenceCurve) -> pd.DataFrame:
    return pd.DataFrame({
        "rho": curve.grid,
        "cc": curve.cc,
        "method": curve.method.value,
    })


def write_curve_csv(curve: ConfidenceCurve, path: Union[str, Path]) -> Path:
    """写出置信曲线 CSV：表头 rho,cc,method，17 位有效数字"""
    path = Path(path)
    try:
        curve_frame(curve).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        logger.error(f"写出置信曲线失败: {path} - {e}")
        raise FileOperationException("write", str(path)) from e
    logger.info(f"置信曲线已写出: {path} ({len(curve.grid)} 行)")
    return path
