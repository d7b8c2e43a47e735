"""核心模块

包含应用程序的核心功能：
- 配置管理
- 日志记录
- 异常处理
- 响应格式化
- 中间件
"""

from .config import settings
from .logger import (
    logger,
    get_logger,
    log_request,
    log_solver_event,
    log_simulation_progress,
    log_performance_metric
)
from .exceptions import (
    BaseCustomException,
    DomainException,
    ConfigurationException,
    SolverConvergenceException,
    DegenerateSampleException,
    FileOperationException,
    register_exception_handlers
)

__all__ = [
    # 配置
    "settings",

    # 日志
    "logger",
    "get_logger",
    "log_request",
    "log_solver_event",
    "log_simulation_progress",
    "log_performance_metric",

    # 异常
    "BaseCustomException",
    "DomainException",
    "ConfigurationException",
    "SolverConvergenceException",
    "DegenerateSampleException",
    "FileOperationException",
    "register_exception_handlers",
]
