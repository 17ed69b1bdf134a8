"""
Log Helper - loguru sink setup shared by the CLI and the test session
"""

import sys
from pathlib import Path
from typing import Optional, Union

from loguru import logger

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} | {message}"


def setup_logging(level: str = "INFO", log_file: Optional[Union[str, Path]] = None,
                  console: bool = True) -> None:
    """
    Replace the default loguru sink.

    Args:
        level: Minimum level for every sink
        log_file: Optional rotating file sink
        console: Log to stderr
    """
    logger.remove()
    if console:
        logger.add(sys.stderr, level=level, format=LOG_FORMAT)
    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        logger.add(path, rotation="100 MB", retention="30 days", level=level, format=LOG_FORMAT)
    logger.debug(f"Logging configured (level={level}, file={log_file})")
