import sys

from loguru import logger

from app.core.config import settings

LOG_FORMAT = "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <7}</level> | {name}:{function} - {message}"


def setup_logging(level: str = None) -> None:
    """Route all log output to a single stderr sink"""
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.LOG_LEVEL).upper(),
        format=LOG_FORMAT,
        colorize=None,
        backtrace=settings.DEBUG,
        diagnose=settings.DEBUG,
    )
