#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 3:00 PM
@File       : __init__.py
@Description: 配置加载、报表导出、参数扫描
"""
