#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 9:20 AM
@File       : logger.py
@Description: 日志工具模块
              - 控制台 (stderr) + 按日期切换的文件日志
              - 文件名格式: <log_dir>/passivity-YYYY-MM-DD.log
              - PASSIVITY_LOG_DIR 为空时只输出到控制台
"""
import logging
import os
from datetime import date
from logging.handlers import BaseRotatingHandler

from config.settings import LOG_DIR, LOG_LEVEL


class DailyRotatingFileHandler(BaseRotatingHandler):
    """
    按日期轮转的文件处理器

    每条记录写入前检查日期，跨天时关闭旧文件并打开当天的新文件。
    """

    def __init__(self, log_dir: str, prefix: str = "passivity", encoding: str = "utf-8"):
        """
        Args:
            log_dir: 日志目录路径 (不存在时自动创建)
            prefix: 文件名前缀
            encoding: 文件编码
        """
        self.log_dir = log_dir
        self.prefix = prefix
        os.makedirs(log_dir, exist_ok=True)
        self.current_date = date.today()
        super().__init__(self._filename_for(self.current_date), "a", encoding=encoding, delay=True)

    def _filename_for(self, day: date) -> str:
        return os.path.join(self.log_dir, f"{self.prefix}-{day.isoformat()}.log")

    def shouldRollover(self, record) -> bool:
        return date.today() != self.current_date

    def doRollover(self):
        if self.stream:
            self.stream.close()
            self.stream = None
        self.current_date = date.today()
        self.baseFilename = os.path.abspath(self._filename_for(self.current_date))


def setup_logger(name: str = "PassivityCert") -> logging.Logger:
    """
    设置日志记录器

    Args:
        name: 日志记录器名称

    Returns:
        配置好的日志记录器 (重复调用不会重复添加处理器)
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, LOG_LEVEL, logging.INFO))

    if not logger.handlers:
        formatter = logging.Formatter(
            '%(asctime)s.%(msecs)03d | %(levelname)s | %(message)s',
            datefmt='%H:%M:%S'
        )

        if LOG_DIR:
            fh = DailyRotatingFileHandler(LOG_DIR)
            fh.setFormatter(formatter)
            logger.addHandler(fh)

        # 控制台输出走 stderr，stdout 留给 CSV / 报表
        ch = logging.StreamHandler()
        ch.setFormatter(formatter)
        logger.addHandler(ch)

    return logger


# 全局单例 logger
logger = setup_logger("PassivityCert")
