# -*- coding: utf-8 -*-
"""
FastAPI 应用主入口文件

集成所有组件：
- 应用配置
- 中间件
- 异常处理
- API 路由
"""

import uvicorn
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from fastapi import FastAPI

from .core.config import settings
from .core.middleware import setup_middleware
from .core.exceptions import register_exception_handlers
from .core.logger import logger
from .core.response import ResponseBuilder
from .api import api_router


@asynccontextmanager
async def lifespan(app: FastAPI):
    """应用生命周期：启动与关闭时记录日志"""
    logger.info(f"启动 {settings.PROJECT_NAME} v{settings.PROJECT_VERSION}")
    logger.info(
        f"求解参数: boundary_eps={settings.SOLVER_BOUNDARY_EPS} "
        f"ci_grid={settings.CI_GRID_SIZE} cc_grid={settings.CC_GRID_SIZE}"
    )
    yield
    logger.info("应用已关闭")


def create_app() -> FastAPI:
    """
    创建 FastAPI 应用实例

    Returns:
        FastAPI: 配置完成的 FastAPI 应用实例
    """
    app = FastAPI(
        title=settings.PROJECT_NAME,
        description=settings.PROJECT_DESCRIPTION,
        version=settings.PROJECT_VERSION,
        openapi_url=f"{settings.API_V1_STR}/openapi.json" if settings.DEBUG else None,
        docs_url="/docs" if settings.DEBUG else None,
        redoc_url="/redoc" if settings.DEBUG else None,
        lifespan=lifespan,
    )

    # 设置中间件
    setup_middleware(app)

    # 设置异常处理器
    register_exception_handlers(app)

    # 注册 API 路由
    app.include_router(api_router)

    @app.get("/health")
    async def health_check():
        """健康检查端点"""
        return ResponseBuilder.success(
            data={
                "status": "healthy",
                "service": settings.PROJECT_NAME,
                "version": settings.PROJECT_VERSION,
                "timestamp": datetime.now(timezone.utc).isoformat()
            },
            message="服务运行正常"
        )

    return app


# 创建应用实例
app = create_app()


if __name__ == "__main__":
    uvicorn.run(
        "app.main:app",
        host=settings.HOST,
        port=settings.PORT,
        reload=settings.DEBUG,
        log_level="debug" if settings.DEBUG else "info",
    )
