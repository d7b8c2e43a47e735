"""服务层模块

提供推断计算服务，包括：
- 标量变换与分布函数 (transforms)
- p 值与约束优化 (inference)
- 置信曲线与置信集 (curves)
- 覆盖率模拟 (simulation)
"""

from .attenuation import AttenuationService, p_value, ci, cc

__all__ = [
    "AttenuationService",
    "p_value",
    "ci",
    "cc",
]
