# -*- coding: utf-8 -*-
"""
衰减校正相关系数的 p 值计算

对 H₀: ρ = ρ⁰ 提供四种方法：
- corr: 三个估计都是样本相关系数，经 Fisher 变换近似为独立正态，
  在 ρ₁ = ρ⁰ρ₂ρ₃ 约束下对 (ρ₂, ρ₃) ∈ [0, 1]² 最小化二次型 Q，
  p = 1 − F_{χ²₃}(Q*)
- free: 同 corr，但 (ρ₂, ρ₃) ∈ [−1, 1]²
- cronbach: 第 2、3 个估计是 Cronbach alpha，z 尺度为 ½log(1−R)，
  方差取 alpha 的渐近方差 k/(2(k−1)N)
- hs: Hunter-Schmidt 正态近似，把信度当作已知常数

求解在 z 尺度上进行：冗余参数直接取 w = (η₂, η₃)，此时后两项是
关于 w 的凸二次函数，只有 η₁ = artanh(ρ⁰·g(w₂)·g(w₃)) 是非线性的。
"""

import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from app.core.config import settings
from app.core.exceptions import ConfigurationException, DomainException, SolverConvergenceException
from app.core.logger import logger, log_solver_event
from app.schemas.estimates import EstimateSet, Method, PValueResult, StudyDesign
from app.services.transforms import (
    alpha_eta,
    alpha_variance,
    artanh,
    chisq3_quantile,
    chisq3_sf,
    fisher_variance,
    normal_cdf,
    normal_quantile,
)

# 保护网格：工作坐标上均匀取点（含盒子两端）并上相关/信度尺度上的均匀点
GUARD_GRID_POINTS = 41
NUISANCE_GRID_POINTS = 21
# 从网格局部极小点出发细化的个数
GUARD_POLISH_COUNT = 3


class NuisanceSolution(NamedTuple):
    """冗余参数的最优解及最小二次型"""
    nuisance: Tuple[float, float]
    objective: float


class HSInterval(NamedTuple):
    """Hunter-Schmidt 区间；裁剪后为空时 clipped_lo/clipped_hi 为 None"""
    raw_lo: float
    raw_hi: float
    clipped_lo: Optional[float]
    clipped_hi: Optional[float]


def to_estimate_set(
    values: Sequence[float],
    method: Method,
    reliabilities: Optional[bool] = None
) -> EstimateSet:
    """
    根据原始输入构造 EstimateSet

    Args:
        values: (r₁, 第 2 个值, 第 3 个值)
        method: 推断方法
        reliabilities: 第 2、3 个值是否为信度；None 表示取方法默认
            （corr/free 默认相关系数，cronbach/hs 默认信度）
    """
    if len(values) != 3:
        raise ConfigurationException(
            f"exactly three estimates are required, got {len(values)}", field="r"
        )
    r1, second, third = (float(v) for v in values)
    if reliabilities is None:
        reliabilities = method.uses_reliabilities

    if reliabilities and not method.uses_reliabilities:
        for name, value in (("rel2", second), ("rel3", third)):
            if not 0 <= value < 1:
                raise DomainException(
                    f"reliability {name} must lie in [0, 1), got {value!r}", field=name, value=value
                )
        second, third = math.sqrt(second), math.sqrt(third)
    elif not reliabilities and method.uses_reliabilities:
        second, third = second * second, third * third

    try:
        return EstimateSet(r1=r1, rel2=second, rel3=third)
    except ValueError as e:
        raise DomainException(f"invalid estimates {tuple(values)!r}: {e}", field="r") from e


def validate_inputs(est: EstimateSet, design: StudyDesign, method: Method) -> None:
    """按方法检查估计值与研究设计的取值范围"""
    if method is Method.FREE:
        for name, value in (("rel2", est.rel2), ("rel3", est.rel3)):
            if not -1 < value < 1 or value == 0:
                raise DomainException(
                    f"{name} must lie in (-1, 1) and be nonzero for method free, got {value!r}",
                    field=name, value=value
                )
    else:
        for name, value in (("rel2", est.rel2), ("rel3", est.rel3)):
            if not 0 < value < 1:
                raise DomainException(
                    f"{name} must lie in (0, 1) for method {method.value}, got {value!r}",
                    field=name, value=value
                )

    if method.is_model_based and design.n2 is None:
        raise ConfigurationException(
            f"method {method.value} requires three sample sizes", field="n"
        )
    if method is Method.CRONBACH and not design.has_testlets:
        raise ConfigurationException("method cronbach requires testlet counts k2, k3", field="k")


def point_estimate(est: EstimateSet, method: Method) -> float:
    """Spearman 校正公式 r₁/(r₂r₃)，不裁剪"""
    r2, r3 = est.correlations(method)
    if r2 == 0 or r3 == 0:
        raise DomainException("point estimate undefined for a zero reliability index", field="r")
    return est.r1 / (r2 * r3)


def quadratic_objective(
    eta: Sequence[float],
    s: Sequence[float],
    d: Sequence[float]
) -> float:
    """(η−s)ᵀD⁻¹(η−s)，D 为对角方差矩阵"""
    eta, s, d = (np.asarray(x, dtype=float) for x in (eta, s, d))
    if np.any(d <= 0):
        raise DomainException(f"variances must be positive, got {d.tolist()!r}", field="d")
    return float(np.sum((eta - s) ** 2 / d))


def observed_scale(est: EstimateSet, method: Method) -> np.ndarray:
    """观测值在 z 尺度上的位置 s"""
    if method is Method.CRONBACH:
        # 模拟中的 α̂ 可能 ≤ 0，此时 ½log(1−α̂) 依然有定义，直接使用
        etas = [alpha_eta(v) if v >= 0 else 0.5 * math.log1p(-v) for v in (est.rel2, est.rel3)]
        return np.array([artanh(est.r1), *etas])
    return np.array([artanh(est.r1), artanh(est.rel2), artanh(est.rel3)])


def design_variances(design: StudyDesign, method: Method) -> np.ndarray:
    """对角协方差矩阵 D 的对角元"""
    if method is Method.CRONBACH:
        return np.array([
            fisher_variance(design.n1),
            alpha_variance(design.n2, design.k2),
            alpha_variance(design.n3, design.k3),
        ])
    return np.array([
        fisher_variance(design.n1),
        fisher_variance(design.n2),
        fisher_variance(design.n3),
    ])


class NuisanceProblem:
    """
    固定 ρ⁰ 时关于冗余参数的最小化问题

    工作坐标 w = (η₂, η₃)：corr/free 下 ρᵢ = tanh(wᵢ)，
    cronbach 下 Rᵢ = 1 − e^{2wᵢ}、√Rᵢ = g(wᵢ)。
    """

    def __init__(self, rho0: float, s: np.ndarray, d: np.ndarray, method: Method):
        self.rho0 = rho0
        self.s = s
        self.d = d
        self.method = method

        eps = settings.SOLVER_BOUNDARY_EPS
        if method is Method.CRONBACH:
            # R ∈ [eps, 1−eps] ⇔ w ∈ [½log(eps), ½log(1−eps)]
            self.bounds = (0.5 * math.log(eps), 0.5 * math.log1p(-eps))
        elif method is Method.CORR:
            self.bounds = (math.atanh(eps), math.atanh(1 - eps))
        else:
            self.bounds = (-math.atanh(1 - eps), math.atanh(1 - eps))

    def factor(self, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """返回 g(w) 与 g'(w)，g 把工作坐标映射到相关系数尺度"""
        if self.method is Method.CRONBACH:
            g = np.sqrt(-np.expm1(2.0 * w))
            return g, -np.exp(2.0 * w) / g
        g = np.tanh(w)
        return g, 1.0 - g * g

    def value_and_grad(self, w: np.ndarray) -> Tuple[float, np.ndarray]:
        g, dg = self.factor(w)
        x = self.rho0 * g[0] * g[1]
        resid1 = math.atanh(x) - self.s[0]
        resid = w - self.s[1:]

        value = resid1 * resid1 / self.d[0] + float(np.sum(resid * resid / self.d[1:]))
        deta = self.rho0 / (1.0 - x * x)
        grad = 2.0 * resid1 / self.d[0] * deta * dg * g[::-1] + 2.0 * resid / self.d[1:]
        return value, grad

    def value(self, w: np.ndarray) -> float:
        return self.value_and_grad(w)[0]

    def values_on_grid(self, w2: np.ndarray, w3: np.ndarray) -> np.ndarray:
        """在网格 (w2 × w3) 上向量化计算 Q"""
        W2, W3 = np.meshgrid(w2, w3, indexing="ij")
        g2, _ = self.factor(W2)
        g3, _ = self.factor(W3)
        eta1 = np.arctanh(self.rho0 * g2 * g3)
        return (
            (eta1 - self.s[0]) ** 2 / self.d[0]
            + (W2 - self.s[1]) ** 2 / self.d[1]
            + (W3 - self.s[2]) ** 2 / self.d[2]
        )

    def to_nuisance(self, w: np.ndarray) -> Tuple[float, float]:
        if self.method is Method.CRONBACH:
            values = -np.expm1(2.0 * w)
        else:
            values = np.tanh(w)
        return float(values[0]), float(values[1])

    def from_nuisance(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if self.method is Method.CRONBACH:
            w = 0.5 * np.log1p(-values)
        else:
            w = np.arctanh(values)
        return np.clip(w, *self.bounds)

    def starting_points(self, data: Tuple[float, float]) -> List[np.ndarray]:
        """初始点：观测值投影到 [eps, 1−eps]²；free 方法另加四个符号象限"""
        eps = settings.SOLVER_START_EPS
        if self.method is Method.FREE:
            magnitude = np.clip(np.abs(data), eps, 1 - eps)
            candidates = [np.clip(np.asarray(data, dtype=float), -1 + eps, 1 - eps)]
            for sign2 in (1.0, -1.0):
                for sign3 in (1.0, -1.0):
                    candidates.append(magnitude * np.array([sign2, sign3]))
        else:
            candidates = [np.clip(np.asarray(data, dtype=float), eps, 1 - eps)]

        starts: List[np.ndarray] = []
        for candidate in candidates:
            w = self.from_nuisance(candidate)
            if not any(np.array_equal(w, existing) for existing in starts):
                starts.append(w)
        return starts

    def projected_gradient(self, w: np.ndarray) -> np.ndarray:
        """盒约束下的投影梯度：贴边且指向盒外的分量置零"""
        _, grad = self.value_and_grad(w)
        lo, hi = self.bounds
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        projected = grad.copy()
        projected[(w <= lo + slack) & (grad > 0)] = 0.0
        projected[(w >= hi - slack) & (grad < 0)] = 0.0
        return projected

    def is_stationary(self, w: np.ndarray) -> bool:
        """投影梯度不超过 SOLVER_GRADIENT_TOLERANCE × max(2/d)"""
        gradient = self.projected_gradient(np.asarray(w, dtype=float))
        if not np.all(np.isfinite(gradient)):
            return False
        scale = max(1.0, float(np.max(2.0 / self.d)))
        return float(np.max(np.abs(gradient))) <= settings.SOLVER_GRADIENT_TOLERANCE * scale

    def guard_grid(self) -> np.ndarray:
        """保护网格（工作坐标），用于检查局部解是否为全局最优"""
        lo, hi = self.bounds
        if self.method is Method.FREE:
            nuisance = np.linspace(-0.98, 0.98, NUISANCE_GRID_POINTS)
        else:
            nuisance = np.linspace(0.02, 0.98, NUISANCE_GRID_POINTS)
        return np.unique(np.concatenate([
            np.linspace(lo, hi, GUARD_GRID_POINTS),
            self.from_nuisance(nuisance),
        ]))


def _grid_minima(values: np.ndarray, count: int) -> List[Tuple[int, int]]:
    """网格上不大于 8 邻域的点，按 Q 升序取前 count 个"""
    rows, cols = values.shape
    padded = np.pad(values, 1, constant_values=np.inf)
    is_min = np.ones(values.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_min &= values <= padded[1 + di:1 + di + rows, 1 + dj:1 + dj + cols]
    candidates = np.flatnonzero(is_min)
    order = candidates[np.argsort(values.ravel()[candidates], kind="stable")]
    return [
        (int(i), int(j))
        for i, j in zip(*np.unravel_index(order[:count], values.shape))
    ]


def _inputs_summary(problem: NuisanceProblem) -> dict:
    return {
        "rho0": problem.rho0,
        "method": problem.method.value,
        "s": [float(v) for v in problem.s],
        "d": [float(v) for v in problem.d],
    }


def _local_minimize(problem: NuisanceProblem, start: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    从单个初始点做有界拟牛顿最小化

    L-BFGS-B 线搜索停滞（ABNORMAL）但投影梯度已足够小时直接接受；
    否则用 Nelder-Mead 收尾，两者都不是驻点时才报告不收敛。
    """
    bounds = [problem.bounds, problem.bounds]
    result = optimize.minimize(
        problem.value_and_grad,
        start,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": settings.SOLVER_MAX_ITER, "ftol": 1e-13, "gtol": 1e-9},
    )
    if result.success or problem.is_stationary(result.x):
        return result.x, float(result.fun)

    log_solver_event(
        "lbfgsb_fallback", problem.method.value, problem.rho0,
        objective=float(result.fun), details={"message": str(result.message)}
    )
    # fatol 取相对量：Q 的舍入误差约为 |Q|·1e-16
    polish = optimize.minimize(
        problem.value,
        result.x,
        method="Nelder-Mead",
        bounds=bounds,
        options={
            "maxiter": settings.SOLVER_MAX_ITER,
            "xatol": settings.SOLVER_TOLERANCE,
            "fatol": 1e-12 * max(1.0, float(result.fun)),
        },
    )
    if not (polish.success or problem.is_stationary(polish.x)):
        inputs = _inputs_summary(problem)
        logger.error(f"约束优化未收敛: {inputs} - {polish.message}")
        raise SolverConvergenceException(
            f"nuisance optimization did not converge for {inputs}", inputs=inputs
        )
    if polish.fun <= result.fun:
        return polish.x, float(polish.fun)
    return result.x, float(result.fun)


def _minimize(
    problem: NuisanceProblem,
    data: Tuple[float, float],
    target: Optional[float] = None
) -> Tuple[np.ndarray, float]:
    """
    多起点最小化

    先从观测值出发求解，再从保护网格上最好的几个局部极小点出发细化，
    取全部结果中的最小值。target 不为 None 时，一旦某个解的 Q ≤ target
    即提前返回（只需判断接受域成员关系时使用）。
    """
    best_w: Optional[np.ndarray] = None
    best_q = math.inf
    for start in problem.starting_points(data):
        w, q = _local_minimize(problem, start)
        if q < best_q:
            best_w, best_q = w, q
        if target is not None and best_q <= target:
            return best_w, best_q

    grid = problem.guard_grid()
    values = problem.values_on_grid(grid, grid)
    for i, j in _grid_minima(values, GUARD_POLISH_COUNT):
        start = np.array([grid[i], grid[j]])
        w, q = _local_minimize(problem, start)
        if values[i, j] < q:
            w, q = start, float(values[i, j])
        if q < best_q - 1e-9 * max(1.0, best_q):
            log_solver_event(
                "guard_grid_improvement", problem.method.value, problem.rho0,
                objective=best_q, details={"grid_value": float(values[i, j]), "polished": q}
            )
        if q < best_q:
            best_w, best_q = w, q
        if target is not None and best_q <= target:
            break

    return best_w, max(0.0, best_q)


def _check_rho0(rho0: float) -> float:
    rho0 = float(rho0)
    if not math.isfinite(rho0) or not -1 <= rho0 <= 1:
        raise DomainException("rho must lie in [-1,1]", field="rho", value=rho0)
    return rho0


def _build_problem(
    rho0: float,
    est: EstimateSet,
    design: StudyDesign,
    method: Method
) -> Tuple[NuisanceProblem, Tuple[float, float]]:
    if not method.is_model_based:
        raise ConfigurationException("method hs has no nuisance parameters", field="method")
    problem = NuisanceProblem(
        _check_rho0(rho0), observed_scale(est, method), design_variances(design, method), method
    )
    return problem, (est.rel2, est.rel3)


def solve_nuisance(
    rho0: float,
    est: EstimateSet,
    design: StudyDesign,
    method: Method,
    validate: bool = True
) -> NuisanceSolution:
    """
    在约束 η₁ = artanh(ρ⁰·ρ₂·ρ₃) 下最小化 (η−s)ᵀD⁻¹(η−s)

    Returns:
        NuisanceSolution: corr/free 为 (ρ₂*, ρ₃*)，cronbach 为 (R₂*, R₃*)，以及 Q*
    """
    if validate:
        validate_inputs(est, design, method)
    problem, data = _build_problem(rho0, est, design, method)
    w, q = _minimize(problem, data)
    return NuisanceSolution(nuisance=problem.to_nuisance(w), objective=q)


def hs_pvalue(rho0: float, est: EstimateSet, design: StudyDesign) -> PValueResult:
    """Hunter-Schmidt p 值 2Φ(−|z|)，z = (r₁ − ρ⁰√R₂√R₃)·√(N₁−1)/(1−r₁²)；ρ⁰ 可取任意实数"""
    rho0 = float(rho0)
    if not math.isfinite(rho0):
        raise DomainException("rho must be finite", field="rho", value=rho0)
    r2, r3 = est.correlations(Method.HS)
    z = (est.r1 - rho0 * r2 * r3) * math.sqrt(design.n1 - 1) / (1.0 - est.r1 ** 2)
    p = min(1.0, 2.0 * normal_cdf(-abs(z)))
    return PValueResult(method=Method.HS, rho0=rho0, p=p, nuisance=None, objective=z * z)


def pvalue(
    rho0: float,
    est: EstimateSet,
    design: StudyDesign,
    method: Method,
    validate: bool = True
) -> PValueResult:
    """H₀: ρ = ρ⁰ 的 p 值"""
    if validate:
        validate_inputs(est, design, method)
    if method is Method.HS:
        return hs_pvalue(rho0, est, design)

    solution = solve_nuisance(rho0, est, design, method, validate=False)
    return PValueResult(
        method=method,
        rho0=float(rho0),
        p=chisq3_sf(solution.objective),
        nuisance=solution.nuisance,
        objective=solution.objective,
    )


def accepts(
    rho0: float,
    est: EstimateSet,
    design: StudyDesign,
    method: Method,
    level: float,
    validate: bool = True
) -> bool:
    """ρ⁰ 是否落在水平 level 的接受域内，即 p(ρ⁰) ≥ 1 − level"""
    if not 0 < level < 1:
        raise DomainException(f"level must lie in (0, 1), got {level!r}", field="level", value=level)
    if validate:
        validate_inputs(est, design, method)
    if method is Method.HS:
        return hs_pvalue(rho0, est, design).p >= 1 - level

    # p ≥ 1 − level ⇔ Q* ≤ χ²₃ 的 level 分位数，找到一个可行点即可
    critical = chisq3_quantile(level)
    problem, data = _build_problem(rho0, est, design, method)
    _, q = _minimize(problem, data, target=critical)
    return q <= critical


def hs_interval(est: EstimateSet, design: StudyDesign, level: float) -> HSInterval:
    """Hunter-Schmidt 区间：中心 ± z_{(1+level)/2}·(1−r₁²)/(√(N₁−1)·r₂r₃)"""
    if not 0 < level < 1:
        raise DomainException(f"level must lie in (0, 1), got {level!r}", field="level", value=level)
    validate_inputs(est, design, Method.HS)

    r2, r3 = est.correlations(Method.HS)
    center = est.r1 / (r2 * r3)
    half_width = (
        normal_quantile((1 + level) / 2)
        * (1 - est.r1 ** 2)
        / (math.sqrt(design.n1 - 1) * r2 * r3)
    )
    raw_lo, raw_hi = center - half_width, center + half_width

    clipped_lo, clipped_hi = max(raw_lo, -1.0), min(raw_hi, 1.0)
    if clipped_lo > clipped_hi:
        return HSInterval(raw_lo, raw_hi, None, None)
    return HSInterval(raw_lo, raw_hi, clipped_lo, clipped_hi)
