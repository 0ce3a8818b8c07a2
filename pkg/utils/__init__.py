#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 9:18 AM
@File       : __init__.py
@Description: 
"""
