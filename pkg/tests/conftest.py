# -*- coding: utf-8 -*-
"""
Pytest 配置文件

包含测试夹具：论文级算例的估计值与研究设计、测试客户端、随机实例生成等
"""

import math
import os
from typing import Tuple

import pytest
from fastapi import FastAPI
from fastapi.testclient import TestClient

# 设置测试环境变量（须在导入 app 之前）
os.environ.setdefault("LOG_LEVEL", "WARNING")

from app.main import create_app  # noqa: E402
from app.schemas.estimates import EstimateSet, StudyDesign  # noqa: E402


@pytest.fixture
def app() -> FastAPI:
    """
    创建测试 FastAPI 应用
    """
    return create_app()


@pytest.fixture
def client(app: FastAPI) -> TestClient:
    """
    创建测试客户端
    """
    return TestClient(app)


@pytest.fixture
def listing_case() -> Tuple[EstimateSet, StudyDesign]:
    """
    r = (0.20, √0.45, √0.55)，N = (100, 100, 100)，corr 方法
    """
    est = EstimateSet(r1=0.20, rel2=math.sqrt(0.45), rel3=math.sqrt(0.55))
    return est, StudyDesign(n1=100, n2=100, n3=100)


@pytest.fixture
def example_one() -> Tuple[EstimateSet, StudyDesign]:
    """
    488 名学生，r₁ = 0.57，alpha 为 0.56 与 0.55（按相关系数 √α 传入）
    """
    est = EstimateSet(r1=0.57, rel2=math.sqrt(0.56), rel3=math.sqrt(0.55))
    return est, StudyDesign(n1=488, n2=488, n3=488)


@pytest.fixture
def example_two() -> Tuple[EstimateSet, StudyDesign]:
    """
    r₁ = 0.52（N₁ = 85），两个 alpha 都为 0.79（N₂ = 2028，N₃ = 711）
    """
    est = EstimateSet(r1=0.52, rel2=math.sqrt(0.79), rel3=math.sqrt(0.79))
    return est, StudyDesign(n1=85, n2=2028, n3=711)
