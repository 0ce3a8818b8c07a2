#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 9:10 AM
@File       : __init__.py
@Description: 全局配置与随包场景
"""
