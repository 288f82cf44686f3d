"""
Simple Logging Utilities for QkdHorse
"""
import sys
import logging
from typing import Optional, TextIO

#** Variables **#
__all__ = ['LOG_FORMAT', 'basic_logger']

#: shared format for every qkdhorse log handler
LOG_FORMAT = '[%(process)d] [%(name)s] [%(levelname)s] %(message)s'

#** Functions **#

def basic_logger(name: str, loglevel: int, stream: Optional[TextIO] = None) -> logging.Logger:
    """
    spawn logging instance w/ the given loglevel

    :param name:     name of the logging instance
    :param loglevel: level of verbosity on logging instance
    :param stream:   output stream for the handler (defaults to stderr)
    :return:         configured logging instance
    """
    stream = stream or sys.stderr
    log    = logging.getLogger(name)
    log.setLevel(loglevel)
    # reconfigure the existing handler on repeated calls
    for handler in log.handlers:
        if getattr(handler, '_qkdhorse', False):
            handler.setStream(stream)
            handler.setLevel(loglevel)
            return log
    fmt     = logging.Formatter(LOG_FORMAT)
    handler = logging.StreamHandler(stream)
    handler.setFormatter(fmt)
    handler.setLevel(loglevel)
    handler._qkdhorse = True
    log.addHandler(handler)
    return log
