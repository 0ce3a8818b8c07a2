#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 5:10 PM
@File       : __init__.py
@Description: pytest 测试
"""
