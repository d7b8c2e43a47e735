# -*- coding: utf-8 -*-
"""
标量变换与分布函数

所有推断方法共用的数学层：
- Fisher z 变换及其逆变换
- 相关系数与 Cronbach alpha 的渐近方差
- 标准正态与三自由度卡方分布的 CDF / 分位数

所有函数都是参数的纯函数，可并发调用。
"""

import math

import numpy as np
from scipy import optimize, special

from app.core.config import settings
from app.core.exceptions import DomainException

# z 尺度上的值：相关系数的 artanh，或信度的 ½log(1−R)
ZScale = float
# [0, 1] 内的概率
Probability = float


def _require_finite(value: float, field: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainException(f"{field} must be finite, got {value!r}", field=field, value=value)
    return value


def artanh(x: float) -> ZScale:
    """Fisher 变换 ½·ln((1+x)/(1−x))，要求 |x| < 1"""
    x = _require_finite(x, "x")
    if abs(x) >= 1:
        raise DomainException(f"artanh requires |x| < 1, got {x!r}", field="x", value=x)
    return math.atanh(x)


def tanh(z: ZScale) -> float:
    """Fisher 逆变换"""
    return math.tanh(_require_finite(z, "z"))


def fisher_variance(n: int) -> float:
    """artanh(r) 的近似方差 1/(n−3)"""
    if int(n) != n or n <= 3:
        raise DomainException(f"sample size must be an integer >= 4, got {n!r}", field="n", value=n)
    return 1.0 / (int(n) - 3)


def alpha_eta(R: float) -> ZScale:
    """信度在 z 尺度上的位置 ½·ln(1−R)，随 R 严格递减"""
    R = _require_finite(R, "R")
    if not 0 <= R < 1:
        raise DomainException(f"reliability must lie in [0, 1), got {R!r}", field="R", value=R)
    return 0.5 * math.log1p(-R)


def alpha_variance(n: int, k: int) -> float:
    """½log(1−α̂) 的渐近方差 k / (2(k−1)n)"""
    if int(k) != k or k < 2:
        raise DomainException(f"testlet count must be an integer >= 2, got {k!r}", field="k", value=k)
    if int(n) != n or n < 1:
        raise DomainException(f"sample size must be a positive integer, got {n!r}", field="n", value=n)
    return k / (2.0 * (k - 1) * n)


def normal_cdf(z: float) -> Probability:
    """标准正态分布函数 Φ(z)"""
    return float(special.ndtr(_require_finite(z, "z")))


def normal_quantile(p: Probability) -> float:
    """标准正态分位数 Φ⁻¹(p)，p ∈ (0, 1)"""
    p = _require_finite(p, "p")
    if not 0 < p < 1:
        raise DomainException(f"probability must lie in (0, 1), got {p!r}", field="p", value=p)
    return float(special.ndtri(p))


def _check_chisq_argument(x: float) -> float:
    x = _require_finite(x, "x")
    if x < 0:
        raise DomainException(f"chi-squared argument must be >= 0, got {x!r}", field="x", value=x)
    return x


def chisq3_cdf(x: float) -> Probability:
    """
    三自由度卡方分布函数

    奇数自由度的闭式：F(x) = 2Φ(√x) − 1 − √(2x/π)·e^(−x/2)，
    其中 2Φ(√x) − 1 用 erf(√(x/2)) 计算以保留小 x 处的精度。
    """
    x = _check_chisq_argument(x)
    value = special.erf(math.sqrt(x / 2.0)) - math.sqrt(2.0 * x / math.pi) * math.exp(-x / 2.0)
    return min(1.0, max(0.0, float(value)))


def chisq3_sf(x: float) -> Probability:
    """上尾概率 1 − F(x)，大 x 处直接用 erfc 计算避免相减抵消"""
    x = _check_chisq_argument(x)
    value = special.erfc(math.sqrt(x / 2.0)) + math.sqrt(2.0 * x / math.pi) * math.exp(-x / 2.0)
    return min(1.0, max(0.0, float(value)))


def chisq3_quantile(p: Probability) -> float:
    """三自由度卡方分布的 p 分位数，p ∈ [0, 1)"""
    p = _require_finite(p, "p")
    if not 0 <= p < 1:
        raise DomainException(f"probability must lie in [0, 1), got {p!r}", field="p", value=p)
    if p == 0:
        return 0.0

    upper = settings.QUANTILE_UPPER
    if chisq3_cdf(upper) < p:
        raise DomainException(
            f"quantile for p={p!r} exceeds the search bracket [0, {upper}]",
            field="p", value=p
        )

    # Brent 法：二分保证收敛，割线/反插值加速
    return optimize.brentq(
        lambda x: chisq3_cdf(x) - p,
        0.0,
        upper,
        xtol=settings.QUANTILE_TOLERANCE,
        rtol=4 * np.finfo(float).eps,
        maxiter=500
    )
