import logging
import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()


def setup_logging(log_level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """Configure logging for the application.

    Falls back to HOLEPOINT_LOG_LEVEL / HOLEPOINT_LOG_FILE from the environment
    (or a .env file) when arguments are not given.
    """
    level_name = (log_level or os.getenv("HOLEPOINT_LOG_LEVEL", "INFO")).upper()
    log_file = log_file or os.getenv("HOLEPOINT_LOG_FILE")

    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format='%(asctime)s - %(name)s - %(funcName)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance"""
    return logging.getLogger(name)
