"""Logging and run statistics for tube-spectra."""

import logging
import logging.handlers
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

try:
    import colorlog

    HAS_COLORLOG = True
except ImportError:
    HAS_COLORLOG = False

try:
    import psutil

    HAS_PSUTIL = True
except ImportError:
    HAS_PSUTIL = False

FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
CONSOLE_FORMAT = "%(levelname)s: %(message)s"


class LabLogger:
    """Root-logger setup plus per-operation statistics for one CLI run."""

    def __init__(self, config: Dict[str, Any]):
        self.config = config
        self.logger = self._setup_logger()
        self.stats: Dict[str, Any] = {
            "started": datetime.now().isoformat(timespec="seconds"),
            "start_time": time.time(),
            "operations": 0,
            "successes": 0,
            "failures": 0,
            "rows_computed": 0,
            "rows_failed": 0,
            "peak_rss_mb": self._rss_mb(),
            "performance_metrics": [],
        }

    def _setup_logger(self) -> logging.Logger:
        """Attach file and console handlers to the root logger so module loggers propagate."""
        logger = logging.getLogger()
        logger.setLevel(getattr(logging, self.config.get("level", "INFO")))

        for handler in list(logger.handlers):
            logger.removeHandler(handler)
            handler.close()

        log_path_str = self.config.get("file_path")
        if log_path_str:
            log_path = Path(log_path_str).expanduser()
            log_path.parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.handlers.RotatingFileHandler(
                log_path,
                maxBytes=self.config.get("max_file_size_mb", 10) * 1024 * 1024,
                backupCount=self.config.get("backup_count", 5),
                encoding="utf-8",
            )
            file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
            logger.addHandler(file_handler)

        if self.config.get("console_output", True):
            console_handler = logging.StreamHandler()
            if HAS_COLORLOG and self.config.get("colored", True):
                console_handler.setFormatter(
                    colorlog.ColoredFormatter("%(log_color)s%(levelname)s%(reset)s: %(message)s")
                )
            else:
                console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
            logger.addHandler(console_handler)

        return logger

    @staticmethod
    def _rss_mb() -> Optional[float]:
        if not HAS_PSUTIL:
            return None
        return psutil.Process().memory_info().rss / (1024 * 1024)

    def _sample_memory(self) -> None:
        rss = self._rss_mb()
        if rss is not None:
            self.stats["peak_rss_mb"] = max(self.stats["peak_rss_mb"] or 0.0, rss)

    def log_operation_start(self, operation: str, details: Optional[Dict[str, Any]] = None) -> str:
        """Log the start of a pipeline operation and return its id."""
        self.stats["operations"] += 1
        operation_id = f"{operation}_{self.stats['operations']}"

        if details:
            self.logger.info(f"Starting {operation}: {details}")
        else:
            self.logger.info(f"Starting {operation}")

        if self.config.get("detailed_timing", True):
            self.stats["performance_metrics"].append(
                {
                    "operation_id": operation_id,
                    "operation": operation,
                    "start_time": time.time(),
                    "details": details or {},
                }
            )
        return operation_id

    def log_operation_success(
        self,
        operation: str,
        operation_id: Optional[str] = None,
        result: Optional[Dict[str, Any]] = None,
    ) -> None:
        self.stats["successes"] += 1
        self._sample_memory()
        if result:
            self.logger.info(f"Completed {operation}: {result}")
        else:
            self.logger.info(f"Completed {operation}")
        if operation_id and self.config.get("detailed_timing", True):
            self._update_performance_metric(operation_id, "success", result)

    def log_operation_failure(
        self, operation: str, error: str, operation_id: Optional[str] = None
    ) -> None:
        self.stats["failures"] += 1
        self._sample_memory()
        self.logger.error(f"Operation {operation} failed: {error}")
        if operation_id and self.config.get("detailed_timing", True):
            self._update_performance_metric(operation_id, "failure", {"error": error})

    def log_rows(self, computed: int, failed: int) -> None:
        """Count report rows; failed rows are those carrying an error message."""
        self.stats["rows_computed"] += computed
        self.stats["rows_failed"] += failed
        if failed:
            self.logger.warning(f"{failed} of {computed} rows carry errors")

    def _update_performance_metric(
        self, operation_id: str, status: str, result: Optional[Dict[str, Any]] = None
    ) -> None:
        for metric in self.stats["performance_metrics"]:
            if metric["operation_id"] == operation_id:
                metric["end_time"] = time.time()
                metric["duration"] = metric["end_time"] - metric["start_time"]
                metric["status"] = status
                metric["result"] = result or {}
                break

    def get_statistics(self) -> Dict[str, Any]:
        """Current run statistics, JSON-serializable."""
        self._sample_memory()
        runtime = time.time() - self.stats["start_time"]
        return {
            **self.stats,
            "runtime_seconds": round(runtime, 3),
            "has_psutil": HAS_PSUTIL,
        }


def setup_logging(
    level: str = "INFO",
    log_file: Optional[Path] = None,
    max_file_size_mb: int = 10,
    backup_count: int = 5,
    console_output: bool = True,
    colored: bool = True,
    detailed_timing: bool = True,
) -> LabLogger:
    """Configure logging for a run; without ``log_file`` only the console is used."""
    config = {
        "level": level,
        "file_path": str(log_file) if log_file else "",
        "max_file_size_mb": max_file_size_mb,
        "backup_count": backup_count,
        "console_output": console_output,
        "colored": colored,
        "detailed_timing": detailed_timing,
    }
    return LabLogger(config)
