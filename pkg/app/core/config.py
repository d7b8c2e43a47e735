from pydantic_settings import BaseSettings
from pydantic import field_validator
from typing import Optional
from pathlib import Path

# 项目根目录
BASE_DIR = Path(__file__).resolve().parent.parent.parent


class Settings(BaseSettings):
    """应用配置类"""

    model_config = {
        "env_file": BASE_DIR / ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": False,
        "extra": "ignore"
    }

    # 应用基础配置
    PROJECT_NAME: str = "disattenuate"
    PROJECT_DESCRIPTION: str = "测量误差衰减校正相关系数的 p 值、置信集与置信曲线计算服务"
    PROJECT_VERSION: str = "1.0.0"
    DEBUG: bool = False
    API_V1_STR: str = "/api/v1"

    # 服务器配置
    HOST: str = "0.0.0.0"
    PORT: int = 8000

    # 日志配置（未设置 LOG_FILE 时只输出到 stderr）
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None
    LOG_ROTATION: str = "10 MB"
    LOG_RETENTION: str = "30 days"

    # 约束优化配置
    SOLVER_BOUNDARY_EPS: float = 1e-9   # 冗余参数盒子 [eps, 1-eps]
    SOLVER_START_EPS: float = 1e-6      # 初始点投影到 [eps, 1-eps]
    SOLVER_TOLERANCE: float = 1e-10
    SOLVER_MAX_ITER: int = 10000
    SOLVER_GRADIENT_TOLERANCE: float = 1e-6  # 投影梯度相对于曲率 2/d 的容差

    # χ²₃ 分位数
    QUANTILE_UPPER: float = 200.0
    QUANTILE_TOLERANCE: float = 1e-10

    # 置信曲线 / 置信集
    DEFAULT_LEVEL: float = 0.95
    CI_GRID_SIZE: int = 512
    CC_GRID_SIZE: int = 200
    MIN_GRID_SIZE: int = 16
    CROSSING_TOLERANCE: float = 1e-6

    # 覆盖率模拟
    ALPHA_FLOOR: float = 1e-6
    SIM_DEFAULT_SEED: int = 0
    SIM_THREADS: int = 1
    SIM_PROGRESS_EVERY: int = 1000

    @field_validator(
        "SOLVER_BOUNDARY_EPS", "SOLVER_START_EPS", "SOLVER_TOLERANCE", "SOLVER_GRADIENT_TOLERANCE",
        "QUANTILE_TOLERANCE", "CROSSING_TOLERANCE"
    )
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("tolerance must be positive")
        return v

    @field_validator("CI_GRID_SIZE", "CC_GRID_SIZE", "MIN_GRID_SIZE")
    @classmethod
    def validate_grid(cls, v: int) -> int:
        if v < 16:
            raise ValueError("grid size must be at least 16")
        return v

    @field_validator("DEFAULT_LEVEL", "ALPHA_FLOOR")
    @classmethod
    def validate_open_unit(cls, v: float) -> float:
        if not 0 < v < 1:
            raise ValueError("value must lie in (0, 1)")
        return v

    @field_validator("SOLVER_MAX_ITER", "SIM_THREADS", "SIM_PROGRESS_EVERY")
    @classmethod
    def validate_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("count must be at least 1")
        return v


# 创建全局配置实例
settings = Settings()
