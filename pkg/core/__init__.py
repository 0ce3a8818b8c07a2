#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 9:30 AM
@File       : __init__.py
@Description: 负荷模型、无源性判据、网络模型与仿真
"""
