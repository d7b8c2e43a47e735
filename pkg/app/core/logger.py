import sys
import logging
from pathlib import Path
from typing import Dict, Any, Optional
from loguru import logger
from app.core.config import settings


def _stderr_sink(message) -> None:
    """每次写入时解析 sys.stderr，测试替换 stderr 后依然写到当前流"""
    sys.stderr.write(message)


class InterceptHandler(logging.Handler):
    """将标准库 logging 记录转发到 loguru"""

    def emit(self, record: logging.LogRecord) -> None:
        try:
            level = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        # 查找调用者
        frame, depth = logging.currentframe(), 2
        while frame and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(
            level, record.getMessage()
        )


class LoggerManager:
    """日志管理器"""

    def __init__(self):
        self.logger = logger
        self._setup_logger()

    def _setup_logger(self):
        """设置日志配置"""
        # 移除默认处理器
        self.logger.remove()

        console_format = (
            "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
            "<level>{level: <8}</level> | "
            "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | "
            "<level>{message}</level>"
        )

        file_format = (
            "{time:YYYY-MM-DD HH:mm:ss} | "
            "{level: <8} | "
            "{name}:{function}:{line} | "
            "{message}"
        )

        # 控制台输出走 stderr，stdout 留给命令行结果
        self._console_id = self.logger.add(
            _stderr_sink,
            format=console_format,
            level="DEBUG" if settings.DEBUG else settings.LOG_LEVEL.upper(),
            colorize=True,
            backtrace=settings.DEBUG,
            diagnose=settings.DEBUG
        )

        if settings.LOG_FILE:
            log_file = Path(settings.LOG_FILE)
            log_file.parent.mkdir(parents=True, exist_ok=True)

            self.logger.add(
                log_file,
                format=file_format,
                level="INFO",
                rotation=settings.LOG_ROTATION,
                retention=settings.LOG_RETENTION,
                compression="zip",
                encoding="utf-8"
            )

            # 求解器日志单独成文件，便于排查不收敛的输入
            self.logger.add(
                log_file.with_name("solver.log"),
                format=file_format,
                level="DEBUG",
                rotation=settings.LOG_ROTATION,
                retention="7 days",
                compression="zip",
                encoding="utf-8",
                filter=lambda record: "solver" in record["extra"]
            )

    def get_logger(self, name: str = None):
        """获取日志器"""
        if name:
            return self.logger.bind(name=name)
        return self.logger

    def set_level(self, level: str):
        """重新设置控制台日志级别（命令行 --verbose 使用），文件日志不受影响"""
        self.logger.remove(self._console_id)
        self._console_id = self.logger.add(
            _stderr_sink,
            format="<level>{level: <8}</level> | <level>{message}</level>",
            level=level.upper(),
            colorize=True
        )

    def log_request(self, method: str, url: str, status_code: int,
                    duration: float, ip: str = None):
        """记录请求日志"""
        self.logger.bind(access=True).info(
            f"{method} {url} - {status_code} - {duration:.3f}s - "
            f"IP: {ip or 'Unknown'}"
        )

    def log_solver_event(self, event: str, method: str, rho0: float,
                         objective: float = None, details: Dict[str, Any] = None):
        """记录约束优化求解过程"""
        log_msg = f"Solver: {event} - method={method} rho0={rho0:.6g}"
        if objective is not None:
            log_msg += f" Q*={objective:.6g}"
        if details:
            log_msg += f" - {details}"

        self.logger.bind(solver=True).debug(log_msg)

    def log_simulation_progress(self, cell_index: int, total_cells: int,
                                done: int, reps: int, details: str = None):
        """记录模拟进度"""
        log_msg = f"Simulation: cell {cell_index + 1}/{total_cells} - {done}/{reps} reps"
        if details:
            log_msg += f" - {details}"

        self.logger.bind(simulation=True).info(log_msg)

    def log_performance_metric(self, metric_name: str, value: float,
                               unit: str = None, context: Dict[str, Any] = None):
        """记录性能指标"""
        log_msg = f"Performance Metric: {metric_name} = {value:.4g}"
        if unit:
            log_msg += f" {unit}"
        if context:
            log_msg += f" - Context: {context}"

        self.logger.info(log_msg)

    def configure_uvicorn_logging(self, level: Optional[int] = logging.INFO):
        """配置Uvicorn日志"""
        intercept_handler = InterceptHandler()
        for name in ("uvicorn", "uvicorn.access", "uvicorn.error"):
            uvicorn_logger = logging.getLogger(name)
            uvicorn_logger.handlers.clear()
            uvicorn_logger.setLevel(level)
            uvicorn_logger.addHandler(intercept_handler)
            uvicorn_logger.propagate = False


# 创建全局日志管理器实例
logger_manager = LoggerManager()

# 导出常用的日志器
logger = logger_manager.get_logger()
get_logger = logger_manager.get_logger

# 导出日志记录方法
log_request = logger_manager.log_request
log_solver_event = logger_manager.log_solver_event
log_simulation_progress = logger_manager.log_simulation_progress
log_performance_metric = logger_manager.log_performance_metric
