# -*- coding: utf-8 -*-
"""
覆盖率模拟

每个重复：按复合对称协方差生成两组测验包得分并计算 α̂₂、α̂₃，
再生成一个真实相关为 ρ·R 的样本相关系数 r₁，三者共用样本量 N；
然后检查真实 ρ 是否落在各方法水平 level 的接受域中。

随机流由 (seed, cell, rep) 唯一确定，结果与执行顺序和线程数无关。
"""

import itertools
import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import (
    BaseCustomException,
    ConfigurationException,
    DegenerateSampleException,
    DomainException,
    FileOperationException,
)
from app.core.logger import logger, log_performance_metric, log_simulation_progress
from app.schemas.estimates import EstimateSet, Method, StudyDesign
from app.schemas.simulation import CoverageRecord, MethodSummary, SimCell, SimConfig
from app.services.inference import accepts

RECORD_COLUMNS = ["N", "rho", "k", "R", "method", "reps", "covered", "coverage", "failures"]

STANDARD_N = (50, 100, 200, 400)
STANDARD_RHO = (0.4, 0.6)
STANDARD_K = (4, 8)
STANDARD_R = (0.25, 0.36, 0.49, 0.64, 0.81)


def standard_grid() -> List[SimCell]:
    """完整的 4 × 2 × 2 × 5 = 80 个参数组合"""
    return [
        SimCell(N=n, rho=rho, k=k, R=R)
        for n, rho, k, R in itertools.product(STANDARD_N, STANDARD_RHO, STANDARD_K, STANDARD_R)
    ]


def derive_stream(seed: int, cell_index: int, rep_index: int) -> np.random.Generator:
    """由 (seed, cell, rep) 派生独立且可复现的随机流"""
    if seed < 0 or cell_index < 0 or rep_index < 0:
        raise DomainException(
            "seed, cell and rep indices must be nonnegative",
            field="seed", value=(seed, cell_index, rep_index)
        )
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(cell_index, rep_index))
    return np.random.Generator(np.random.PCG64(sequence))


def sample_bivariate_correlation(rho: float, n: int, stream: np.random.Generator) -> float:
    """从相关为 rho 的标准二元正态抽 n 对，返回样本相关系数"""
    if not -1 < rho < 1:
        raise DomainException(f"rho must lie in (-1, 1), got {rho!r}", field="rho", value=rho)
    if n < 4:
        raise DomainException(f"sample size must be >= 4, got {n!r}", field="n", value=n)
    z = stream.standard_normal((n, 2))
    x = z[:, 0]
    y = rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1]
    return float(np.corrcoef(x, y)[0, 1])


def compound_symmetry_covariance(R: float, k: int) -> float:
    """总体 alpha 为 R 时（单位方差）测验包之间的共同相关 c = R/(k − (k−1)R)"""
    if k < 2:
        raise DomainException(f"testlet count must be >= 2, got {k!r}", field="k", value=k)
    if not 0 <= R < 1:
        raise DomainException(f"reliability must lie in [0, 1), got {R!r}", field="R", value=R)
    c = R / (k - (k - 1) * R)
    if not 0 <= c < 1:
        raise DomainException(f"common correlation {c!r} outside [0, 1)", field="R", value=R)
    return c


def compound_symmetry_matrix(c: float, k: int) -> np.ndarray:
    """单位方差、非对角元为 c 的 k×k 矩阵"""
    return np.full((k, k), c) + (1.0 - c) * np.eye(k)


@lru_cache(maxsize=64)
def _cholesky_factor(R: float, k: int) -> np.ndarray:
    factor = np.linalg.cholesky(compound_symmetry_matrix(compound_symmetry_covariance(R, k), k))
    factor.setflags(write=False)
    return factor


def cronbach_alpha(cov: np.ndarray, k: int) -> float:
    """α̂ = k/(k−1)·(1 − trace(cov)/grand-sum(cov))"""
    cov = np.asarray(cov, dtype=float)
    if k < 2:
        raise DomainException(f"testlet count must be >= 2, got {k!r}", field="k", value=k)
    if cov.shape != (k, k) or not np.allclose(cov, cov.T):
        raise DomainException(f"covariance must be a symmetric {k}x{k} matrix", field="cov")
    total = float(cov.sum())
    if total <= 0:
        raise DegenerateSampleException(f"grand sum of the testlet covariance is {total!r}")
    return k / (k - 1) * (1.0 - float(np.trace(cov)) / total)


def sample_alpha(R: float, k: int, n: int, stream: np.random.Generator) -> float:
    """抽 n 个复合对称多元正态向量，返回 ML 协方差（除以 n）的 Cronbach alpha"""
    if n < k + 1:
        raise DomainException(f"sample size must be >= k + 1 = {k + 1}, got {n!r}", field="n", value=n)
    factor = _cholesky_factor(float(R), int(k))
    scores = stream.standard_normal((n, k)) @ factor.T
    cov = np.cov(scores, rowvar=False, bias=True)
    return cronbach_alpha(cov, k)


def _floor(value: float) -> Tuple[float, bool]:
    floor = settings.ALPHA_FLOOR
    if value < floor:
        return floor, True
    return value, False


def _estimates_for(
    method: Method,
    r1: float,
    alpha2: float,
    alpha3: float
) -> Tuple[EstimateSet, int]:
    """按方法组织一次重复的估计值，返回截断次数"""
    if method is Method.CRONBACH:
        return EstimateSet(r1=r1, rel2=alpha2, rel3=alpha3), 0

    (a2, low2), (a3, low3) = _floor(alpha2), _floor(alpha3)
    floored = int(low2) + int(low3)
    if method is Method.HS:
        return EstimateSet(r1=r1, rel2=a2, rel3=a3), floored
    return EstimateSet(r1=r1, rel2=math.sqrt(a2), rel3=math.sqrt(a3)), floored


def _design_for(method: Method, cell: SimCell) -> StudyDesign:
    if method is Method.HS:
        return StudyDesign(n1=cell.n)
    if method is Method.CRONBACH:
        return StudyDesign(n1=cell.n, n2=cell.n, n3=cell.n, k2=cell.k, k3=cell.k)
    return StudyDesign(n1=cell.n, n2=cell.n, n3=cell.n)


def _run_chunk(
    config: SimConfig,
    cell_index: int,
    reps: range
) -> Dict[Method, Counter]:
    """一个参数组合的一段重复；返回每个方法的计数"""
    cell = config.cells[cell_index]
    designs = {method: _design_for(method, cell) for method in config.methods}
    counts = {method: Counter() for method in config.methods}

    for rep in reps:
        stream = derive_stream(config.seed, cell_index, rep)
        try:
            alpha2 = sample_alpha(cell.R, cell.k, cell.n, stream)
            alpha3 = sample_alpha(cell.R, cell.k, cell.n, stream)
            r1 = sample_bivariate_correlation(cell.observed_rho, cell.n, stream)
        except (BaseCustomException, ValueError, ArithmeticError) as e:
            # 抽样失败时本次重复对所有方法都记为失败（未覆盖）
            for method in config.methods:
                counts[method]["failures"] += 1
            logger.warning(f"抽样失败: cell={cell_index} rep={rep} - {e}")
            continue

        for method in config.methods:
            try:
                est, floored = _estimates_for(method, r1, alpha2, alpha3)
                counts[method]["floored"] += floored
                if accepts(cell.rho, est, designs[method], method, config.level, validate=False):
                    counts[method]["covered"] += 1
            except (BaseCustomException, ValueError, ArithmeticError) as e:
                counts[method]["failures"] += 1
                logger.warning(
                    f"推断失败: cell={cell_index} rep={rep} method={method.value} "
                    f"r1={r1!r} alphas=({alpha2!r}, {alpha3!r}) - {e}"
                )
    return counts


def _chunks(reps: int, size: int) -> Iterable[range]:
    for start in range(0, reps, size):
        yield range(start, min(start + size, reps))


def run_coverage(config: SimConfig, threads: Optional[int] = None) -> List[CoverageRecord]:
    """
    对每个参数组合和方法统计覆盖次数

    Args:
        config: 模拟配置
        threads: 并发线程数，默认取 settings.SIM_THREADS

    Returns:
        List[CoverageRecord]: 按 cells 顺序、每个 cell 内按 methods 顺序排列
    """
    threads = threads or settings.SIM_THREADS
    chunk_size = settings.SIM_PROGRESS_EVERY
    tasks = [
        (cell_index, chunk)
        for cell_index in range(len(config.cells))
        for chunk in _chunks(config.reps, chunk_size)
    ]
    totals = {
        cell_index: {method: Counter() for method in config.methods}
        for cell_index in range(len(config.cells))
    }

    def merge(cell_index: int, chunk: range, counts: Dict[Method, Counter]) -> None:
        for method, counter in counts.items():
            totals[cell_index][method].update(counter)
        log_simulation_progress(cell_index, len(config.cells), chunk.stop, config.reps)

    if threads <= 1:
        for cell_index, chunk in tasks:
            merge(cell_index, chunk, _run_chunk(config, cell_index, chunk))
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            futures = [
                (cell_index, chunk, executor.submit(_run_chunk, config, cell_index, chunk))
                for cell_index, chunk in tasks
            ]
            # 计数求和满足交换律，按提交顺序汇总即可
            for cell_index, chunk, future in futures:
                merge(cell_index, chunk, future.result())

    records = []
    for cell_index, cell in enumerate(config.cells):
        for method in config.methods:
            counter = totals[cell_index][method]
            if counter["floored"]:
                logger.warning(
                    f"α̂ 截断: cell={cell_index} (N={cell.n}, R={cell.R}, k={cell.k}) "
                    f"method={method.value} - {counter['floored']} 次截断到 {settings.ALPHA_FLOOR}"
                )
            records.append(CoverageRecord(
                cell=cell,
                method=method,
                covered=counter["covered"],
                reps=config.reps,
                failures=counter["failures"],
                floored=counter["floored"],
            ))
    return records


def records_frame(records: List[CoverageRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "N": record.cell.n,
                "rho": record.cell.rho,
                "k": record.cell.k,
                "R": record.cell.R,
                "method": record.method.value,
                "reps": record.reps,
                "covered": record.covered,
                "coverage": record.coverage,
                "failures": record.failures,
            }
            for record in records
        ],
        columns=RECORD_COLUMNS,
    )


def summarize(records: List[CoverageRecord]) -> List[MethodSummary]:
    """每个方法覆盖率的均值与标准差（样本标准差，单个 cell 时为 0）"""
    frame = records_frame(records)
    summaries = []
    for method, group in frame.groupby("method", sort=False):
        sd = float(group["coverage"].std(ddof=1)) if len(group) > 1 else 0.0
        summaries.append(MethodSummary(
            method=Method(method),
            cells=len(group),
            mean=float(group["coverage"].mean()),
            sd=sd,
            failures=int(group["failures"].sum()),
        ))
    return summaries


def write_records(records: List[CoverageRecord], path: Union[str, Path]) -> Path:
    """写出覆盖率 CSV"""
    path = Path(path)
    try:
        records_frame(records).to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        logger.error(f"写出模拟结果失败: {path} - {e}")
        raise FileOperationException("write", str(path)) from e
    logger.info(f"模拟结果已写出: {path} ({len(records)} 行)")
    return path


def _field_message(error: dict) -> str:
    location = ".".join(str(part) for part in error.get("loc", ()))
    return f"{location}: {error.get('msg', '').replace('Value error, ', '')}"


def parse_config(raw: dict) -> SimConfig:
    """校验配置字典；"cells": "standard" 表示完整参数网格"""
    if not isinstance(raw, dict):
        raise ConfigurationException("simulation config must be a JSON object")
    if raw.get("cells") == "standard":
        raw = {**raw, "cells": standard_grid()}
    try:
        return SimConfig.model_validate(raw)
    except ValidationError as e:
        errors = e.errors()
        first = errors[0] if errors else {}
        field = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigurationException(
            "; ".join(_field_message(error) for error in errors), field=field
        ) from e


def load_config(path: Union[str, Path]) -> SimConfig:
    """读取 JSON 模拟配置"""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise FileOperationException("read", str(path)) from e
    except json.JSONDecodeError as e:
        raise ConfigurationException(f"malformed JSON in {path}: {e}") from e
    config = parse_config(raw)
    log_performance_metric(
        "simulation_replicates", len(config.cells) * config.reps * len(config.methods),
        context={"config": str(path)}
    )
    return config
