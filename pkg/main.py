#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
项目入口

    python main.py serve              启动 HTTP 服务
    python main.py <子命令> [参数...]  等同于 disattenuate 命令行
"""

import sys

from app.core.config import settings


def serve() -> None:
    import uvicorn

    from app.core.logger import logger_manager

    logger_manager.configure_uvicorn_logging()
    uvicorn.run(
        "app.main:app",
        host=settings.HOST,
        port=settings.PORT,
        reload=settings.DEBUG,
        log_level="debug" if settings.DEBUG else "info",
    )


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == "serve":
        serve()
    else:
        from app.cli import main

        sys.exit(main())
