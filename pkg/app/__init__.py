# 衰减校正相关系数推断服务
# 基于 FastAPI + NumPy + SciPy 构建

__version__ = "1.0.0"
__description__ = "测量误差衰减校正相关系数的 p 值、置信集与置信曲线"
