"""
Structured logging for SchurLab
Console output goes to stderr so stdout stays machine readable;
rotating JSON files are written when file logging is enabled.
"""

import logging
import logging.handlers
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional
import json

from schurlab.core.config import settings


_EXTRA_FIELDS = (
    "experiment", "task_id", "task_name", "status", "seed", "duration",
    "residual", "value", "metric_name", "unit", "error_code", "n", "dim", "p",
)


class JSONFormatter(logging.Formatter):
    """
    JSON formatter for structured experiment logs
    """

    def format(self, record):
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno
        }

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        for field in _EXTRA_FIELDS:
            if hasattr(record, field):
                log_entry[field] = getattr(record, field)

        return json.dumps(log_entry, default=str)


class LoggerManager:
    """
    Centralized logger management for the lab
    """

    def __init__(self, log_dir: Optional[str] = None, to_file: Optional[bool] = None):
        self.log_dir = Path(log_dir or settings.log_dir)
        self.to_file = settings.log_to_file if to_file is None else to_file
        self.level = getattr(logging, settings.log_level.upper(), logging.INFO)
        if self.to_file:
            self.log_dir.mkdir(parents=True, exist_ok=True)
        self._configure_loggers()

    def _file_handler(self, name: str, level: int, backups: int = 5) -> logging.Handler:
        handler = logging.handlers.RotatingFileHandler(
            self.log_dir / name,
            maxBytes=10*1024*1024,  # 10MB
            backupCount=backups
        )
        handler.setFormatter(JSONFormatter())
        handler.setLevel(level)
        return handler

    def _configure_loggers(self):
        """Configure the root logger and the domain loggers"""
        root_logger = logging.getLogger()
        root_logger.setLevel(self.level)
        root_logger.handlers.clear()

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        ))
        console_handler.setLevel(self.level)
        root_logger.addHandler(console_handler)

        if self.to_file:
            root_logger.addHandler(self._file_handler("app.log", logging.INFO))
            root_logger.addHandler(self._file_handler("error.log", logging.ERROR))

        self._configure_domain_logger("numerics", "numerics.log")
        self._configure_domain_logger("experiments", "experiments.log", backups=10)
        self._configure_domain_logger("performance", "performance.log", backups=20)

    def _configure_domain_logger(self, name: str, filename: str, backups: int = 5):
        domain_logger = logging.getLogger(name)
        domain_logger.handlers.clear()
        domain_logger.setLevel(self.level)
        if self.to_file:
            domain_logger.addHandler(self._file_handler(filename, logging.DEBUG, backups))
            domain_logger.propagate = False
        else:
            domain_logger.propagate = True

    @staticmethod
    def get_logger(name: str) -> logging.Logger:
        """Get a configured logger by name"""
        return logging.getLogger(name)

    @staticmethod
    def log_task_execution(task_name: str, task_id: int, status: str,
                           duration: Optional[float] = None, error: Optional[str] = None):
        """Log worker task execution details"""
        logger = logging.getLogger("experiments")
        extra = {
            "task_name": task_name,
            "task_id": task_id,
            "status": status,
            "duration": duration,
        }
        if error:
            extra["error_code"] = error
        logger.debug(f"Task {task_name}[{task_id}] {status}", extra=extra)

    @staticmethod
    def log_experiment_event(experiment: str, event: str, **fields: Any):
        """Log an experiment lifecycle event with its parameters"""
        logger = logging.getLogger("experiments")
        extra: Dict[str, Any] = {"experiment": experiment}
        extra.update({k: v for k, v in fields.items() if k in _EXTRA_FIELDS})
        logger.info(f"Experiment {experiment}: {event}", extra=extra)

    @staticmethod
    def log_performance_metric(metric_name: str, value: float, unit: str = "s"):
        """Log performance metrics"""
        logger = logging.getLogger("performance")
        extra = {
            "metric_name": metric_name,
            "value": value,
            "unit": unit
        }
        logger.debug(f"Performance metric: {metric_name} = {value}{unit}", extra=extra)


logger_manager: Optional[LoggerManager] = None


def setup_logging(log_dir: Optional[str] = None, to_file: Optional[bool] = None) -> LoggerManager:
    """Configure logging once per process (the CLI calls this on startup)"""
    global logger_manager
    logger_manager = LoggerManager(log_dir=log_dir, to_file=to_file)
    return logger_manager


numerics_logger = LoggerManager.get_logger("numerics")
experiment_logger = LoggerManager.get_logger("experiments")
performance_logger = LoggerManager.get_logger("performance")
main_logger = LoggerManager.get_logger("main")
