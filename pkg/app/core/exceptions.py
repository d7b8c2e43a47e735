from typing import Any, Dict, List, Optional
from fastapi import FastAPI, HTTPException, Request, status
from fastapi.exceptions import RequestValidationError
from starlette.exceptions import HTTPException as StarletteHTTPException

from app.core.logger import logger
from app.core.response import ResponseBuilder


class BaseCustomException(Exception):
    """自定义异常基类"""

    # 命令行退出码：1 表示数值/运行时失败，2 表示用法错误
    exit_code: int = 1

    def __init__(
        self,
        message: str,
        error_code: str = None,
        status_code: int = status.HTTP_400_BAD_REQUEST,
        details: Dict[str, Any] = None
    ):
        self.message = message
        self.error_code = error_code or self.__class__.__name__
        self.status_code = status_code
        self.details = details or {}
        super().__init__(self.message)


class DomainException(BaseCustomException, ValueError):
    """数值输入超出定义域"""

    exit_code = 2

    def __init__(self, message: str, field: str = None, value: Any = None, **kwargs):
        super().__init__(message, **kwargs)
        if field:
            self.details["field"] = field
        if value is not None:
            # 非有限值无法进入 JSON 响应，统一存为字符串
            self.details["value"] = str(value)


class ConfigurationException(BaseCustomException):
    """配置异常（模拟配置格式错误、命令行参数组合不合法）"""

    exit_code = 2

    def __init__(self, message: str = "Configuration error", field: str = None, **kwargs):
        super().__init__(message, **kwargs)
        if field:
            self.details["field"] = field


class SolverConvergenceException(BaseCustomException):
    """优化器在迭代预算内未收敛"""

    def __init__(self, message: str, inputs: Dict[str, Any] = None, **kwargs):
        kwargs.setdefault("status_code", status.HTTP_500_INTERNAL_SERVER_ERROR)
        super().__init__(message, **kwargs)
        if inputs:
            self.details["inputs"] = inputs


class DegenerateSampleException(BaseCustomException):
    """样本退化（如测验包协方差总和非正）"""

    def __init__(self, message: str = "Degenerate sample", **kwargs):
        kwargs.setdefault("status_code", status.HTTP_500_INTERNAL_SERVER_ERROR)
        super().__init__(message, **kwargs)


class FileOperationException(BaseCustomException):
    """文件操作异常"""

    def __init__(self, operation: str, file_path: str = None, **kwargs):
        message = f"File {operation} failed"
        if file_path:
            message += f" for {file_path}"

        super().__init__(message, **kwargs)
        self.details["operation"] = operation
        if file_path:
            self.details["file_path"] = file_path


# 自定义异常到业务状态码的映射
EXCEPTION_CODE_MAPPING = {
    "DomainException": 1003,
    "ConfigurationException": 1003,
    "SolverConvergenceException": 1500,
    "DegenerateSampleException": 1500,
    "FileOperationException": 1000,
}


async def custom_exception_handler(request: Request, exc: BaseCustomException):
    """自定义异常处理器"""
    request_id = getattr(request.state, "request_id", None)
    business_code = EXCEPTION_CODE_MAPPING.get(exc.error_code, 1000)

    logger.error(
        f"Custom Exception: {exc.error_code} - {exc.message} - "
        f"Path: {request.url.path} - Method: {request.method} - "
        f"Request ID: {request_id}"
    )

    return ResponseBuilder.error(business_code, exc.message, exc.details)


async def http_exception_handler(request: Request, exc: HTTPException):
    """HTTP异常处理器"""
    status_code_mapping = {
        404: (1005, "请求路径不存在"),
        405: (1004, "请求方法不支持"),
        500: (1000, "系统内部错误"),
    }
    business_code, error_message = status_code_mapping.get(exc.status_code, (1000, "系统内部错误"))

    logger.warning(
        f"HTTP Exception: {exc.status_code} - {exc.detail} - "
        f"Path: {request.url.path} - Method: {request.method}"
    )

    return ResponseBuilder.error(business_code, error_message)


def format_validation_errors(errors: List[Dict[str, Any]]) -> List[Dict[str, str]]:
    """将 Pydantic 验证错误整理为字段级信息"""
    formatted = []
    for error in errors:
        location = [str(part) for part in error.get("loc", ()) if part != "body"]
        message = error.get("msg", "")
        formatted.append({
            "field": ".".join(location),
            "message": message.replace("Value error, ", ""),
            "type": error.get("type", "")
        })
    return formatted


async def validation_exception_handler(request: Request, exc: RequestValidationError):
    """请求参数验证异常处理器"""
    errors = format_validation_errors(exc.errors())

    logger.warning(
        f"Validation Error: Path: {request.url.path} - Errors: {errors}"
    )

    first: Optional[Dict[str, str]] = errors[0] if errors else None
    message = f"{first['field']}: {first['message']}" if first else "数据验证失败"

    return ResponseBuilder.error(1002, message, {"errors": errors})


async def general_exception_handler(request: Request, exc: Exception):
    """兜底异常处理器"""
    logger.exception(
        f"Unhandled Exception: {type(exc).__name__} - {exc} - Path: {request.url.path}"
    )

    return ResponseBuilder.error(1000, "系统内部错误")


def register_exception_handlers(app: FastAPI):
    """注册异常处理器"""
    app.add_exception_handler(BaseCustomException, custom_exception_handler)
    app.add_exception_handler(StarletteHTTPException, http_exception_handler)
    app.add_exception_handler(RequestValidationError, validation_exception_handler)
    app.add_exception_handler(Exception, general_exception_handler)
