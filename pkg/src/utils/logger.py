#!/usr/bin/env python3
"""
Logging del proyecto
Consola con colores (vía tqdm.write) y archivo diario en logs/; el nivel
se toma de SRUDGP_LOG_LEVEL
"""

import logging
import os
import sys
from pathlib import Path
from datetime import datetime
from typing import Optional

from tqdm import tqdm


LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class ColoredFormatter(logging.Formatter):
    """Colorea el nivel cuando stdout es una terminal"""

    COLORS = {
        logging.DEBUG: '\033[36m',
        logging.INFO: '\033[32m',
        logging.WARNING: '\033[33m',
        logging.ERROR: '\033[31m',
        logging.CRITICAL: '\033[35m',
    }
    RESET = '\033[0m'

    def format(self, record):
        color = self.COLORS.get(record.levelno)
        if color and sys.stdout.isatty():
            record = logging.makeLogRecord(record.__dict__)
            record.levelname = f"{color}{record.levelname}{self.RESET}"
        return super().format(record)


class TqdmConsoleHandler(logging.Handler):
    """Escribe en la consola a través de tqdm para no romper la barra de entrenamiento"""

    def emit(self, record):
        try:
            tqdm.write(self.format(record), file=sys.stdout)
        except Exception:
            self.handleError(record)


def resolve_level(default: int = logging.INFO) -> int:
    """Nivel de log desde SRUDGP_LOG_LEVEL (DEBUG, INFO, ...)"""
    name = os.getenv("SRUDGP_LOG_LEVEL", "").strip().upper()
    if not name:
        return default
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else default


def setup_logger(
    name: str,
    log_file: Optional[Path] = None,
    level: int = logging.INFO,
    console_output: bool = True
) -> logging.Logger:
    """Logger con consola y archivo opcional; si ya tiene handlers se devuelve tal cual"""
    logger = logging.getLogger(name)
    logger.setLevel(level)
    if logger.handlers:
        return logger

    handlers = []
    if console_output:
        handlers.append((TqdmConsoleHandler(), ColoredFormatter(LOG_FORMAT, datefmt=DATE_FORMAT)))
    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append((logging.FileHandler(log_file, encoding='utf-8'),
                         logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)))
    for handler, formatter in handlers:
        handler.setLevel(level)
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    return logger


def get_default_log_file(script_name: str) -> Path:
    """Genera ruta de log por defecto (logs/<script>_YYYYMMDD.log)"""
    project_root = Path(__file__).resolve().parents[2]
    logs_dir = project_root / "logs"
    logs_dir.mkdir(exist_ok=True)

    timestamp = datetime.now().strftime("%Y%m%d")
    return logs_dir / f"{script_name}_{timestamp}.log"


def get_project_logger(name: str = "srudgp") -> logging.Logger:
    """Obtiene logger principal del proyecto"""
    log_file = get_default_log_file("project")
    return setup_logger(name, log_file=log_file, level=resolve_level())
