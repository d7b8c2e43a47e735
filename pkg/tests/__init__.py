# -*- coding: utf-8 -*-
"""
测试模块初始化文件

包含测试相关的公共配置和工具函数
"""