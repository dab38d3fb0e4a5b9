# -*- coding: utf-8 -*-

from .version import __version__

import logging
import logging.handlers

LOG_FORMAT = '%(asctime)s.%(msecs)d {name} %(levelname)s: %(message)s'
"""
Format of log records emitted by :py:func:`get_logger` handlers
"""

LOG_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
"""
Timestamp format of log records
"""


def get_logger(name, level=logging.DEBUG, log_path=None):
    """
    Configures and returns logger `name` with a stream handler on
    standard error and, if `log_path` is set, a file handler rotated
    at midnight

    :param name: logger name, usually ``ttaad``
    :type name: str
    :param level: logging level
    :type level: int
    :param log_path: file to also log to
    :type log_path: str
    :return: the configured logger
    :rtype: :py:class:`logging.Logger`
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    logger.handlers = []

    formatter = logging.Formatter(LOG_FORMAT.format(name=name),
                                  LOG_DATE_FORMAT)

    if log_path is not None:
        handler = logging.handlers.TimedRotatingFileHandler(log_path,
                                                            when='midnight',
                                                            backupCount=28)
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    handler = logging.StreamHandler()
    handler.setFormatter(formatter)
    logger.addHandler(handler)

    return logger


from ttaad.data_io import read_image
from ttaad.transforms import fft_filter_image
from ttaad.transforms import hflip
from ttaad.transforms import get_transform
from ttaad.scoring import anomaly_score
from ttaad.scoring import score_pipeline
from ttaad.evaluation import auroc
from ttaad.evaluation import evaluate
from ttaad.runs import expected_runs_mc
from ttaad.runs import expected_runs_quadrature
from ttaad.harness import run_ttaad
from ttaad.harness import run_demo
