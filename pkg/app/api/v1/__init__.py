# -*- coding: utf-8 -*-
"""
API v1 路由初始化模块

统一管理和导入所有 v1 版本的 API 路由，包括：
- 衰减校正推断路由 (attenuation)
"""

from fastapi import APIRouter

from .attenuation import router as attenuation_router

# 创建 v1 版本的主路由
api_v1_router = APIRouter(prefix="/v1")

# 注册各个子路由
api_v1_router.include_router(attenuation_router)

# 导出主路由
__all__ = ["api_v1_router"]
