"""
Structured logger shared by every kernbound module.

Usage:
    from .logger import logger
    log = logger.create("kernbound", __file__)
    log.info("Dictionary built", {"p": 3, "m": 60})
    log.error("Gram failed PSD validation", {"kernel": "rbf1"}, error=exc)

Reports own stdout, so every line is written to stderr unless a custom
``output`` callable is configured.
"""

import json
import os
import sys
import traceback
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, Optional


LOG_LEVELS = {
    "error": 0,
    "warn": 1,
    "info": 2,
    "debug": 3,
    "trace": 4,
}

COLORS = {
    "reset": "\x1b[0m",
    "red": "\x1b[31m",
    "yellow": "\x1b[33m",
    "blue": "\x1b[34m",
    "cyan": "\x1b[36m",
    "gray": "\x1b[90m",
}

LEVEL_COLORS = {
    "error": COLORS["red"],
    "warn": COLORS["yellow"],
    "info": COLORS["blue"],
    "debug": COLORS["cyan"],
    "trace": COLORS["gray"],
}


_level_override: Optional[str] = None


def set_log_level(level: Optional[str]) -> None:
    """Force a level on every logger, including ones created at import time."""
    global _level_override
    if level is not None and level.lower() not in LOG_LEVELS:
        raise ValueError(f"Unknown log level: {level}")
    _level_override = level.lower() if level else None


def _env_level() -> str:
    level = os.getenv("KERNBOUND_LOG_LEVEL") or os.getenv("LOG_LEVEL") or "info"
    level = level.lower()
    return level if level in LOG_LEVELS else "info"


class LoggerConfig:
    """Logger configuration; unset fields fall back to the environment."""

    def __init__(
        self,
        level: Optional[str] = None,
        colorize: Optional[bool] = None,
        timestamp: bool = True,
        json_format: Optional[bool] = None,
        output: Optional[Callable[[str], None]] = None,
    ):
        self.level = (level or _env_level()).lower()
        if colorize is None:
            colorize = os.getenv("NO_COLOR") != "1" and sys.stderr.isatty()
        self.colorize = colorize
        self.timestamp = timestamp
        self.json_format = json_format if json_format is not None else os.getenv("LOG_FORMAT") == "json"
        self.output = output


def extract_filename(filepath: str) -> str:
    if not filepath:
        return "unknown"
    return Path(filepath).name


def format_human(entry: Dict[str, Any], config: LoggerConfig) -> str:
    level = entry["level"]
    paint = LEVEL_COLORS.get(level, "") if config.colorize else ""
    gray = COLORS["gray"] if config.colorize else ""
    reset = COLORS["reset"] if config.colorize else ""

    parts = []
    if config.timestamp:
        parts.append(f"{gray}[{entry['timestamp']}]{reset}")
    parts.append(f"{paint}{level.upper().ljust(5)}{reset}")
    parts.append(f"{gray}[{entry['package']}:{entry['filename']}]{reset}")
    parts.append(entry["message"])
    line = " ".join(parts)

    if entry.get("data"):
        line += f" {gray}{json.dumps(entry['data'], default=str)}{reset}"
    error = entry.get("error")
    if error is not None:
        stack = "".join(traceback.format_exception(type(error), error, error.__traceback__))
        line += f"\n{stack}"
    return line


def format_json(entry: Dict[str, Any]) -> str:
    output = dict(entry)
    error = entry.get("error")
    if error is not None:
        output["error"] = {
            "message": str(error),
            "type": type(error).__name__,
            "code": getattr(error, "code", None),
        }
    return json.dumps(output, default=str)


class Logger:
    """Logger bound to one package/module pair."""

    def __init__(self, package_name: str, filename: str, config: Optional[LoggerConfig] = None):
        self.package_name = package_name
        self.filename = extract_filename(filename)
        self.config = config or LoggerConfig()

    def is_enabled(self, level: str) -> bool:
        active = _level_override or self.config.level
        threshold = LOG_LEVELS.get(active, LOG_LEVELS["info"])
        return LOG_LEVELS.get(level, LOG_LEVELS["info"]) <= threshold

    def _emit(
        self,
        level: str,
        message: str,
        data: Optional[Dict[str, Any]] = None,
        error: Optional[BaseException] = None,
    ) -> None:
        if not self.is_enabled(level):
            return

        entry: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="milliseconds"),
            "level": level,
            "package": self.package_name,
            "filename": self.filename,
            "message": str(message),
        }
        if data:
            entry["data"] = data
        if error is not None:
            entry["error"] = error

        line = format_json(entry) if self.config.json_format else format_human(entry, self.config)
        if self.config.output:
            self.config.output(line)
        else:
            print(line, file=sys.stderr)

    def info(self, message: str, data: Optional[Dict[str, Any]] = None, error: Optional[BaseException] = None) -> None:
        self._emit("info", message, data, error)

    def warn(self, message: str, data: Optional[Dict[str, Any]] = None, error: Optional[BaseException] = None) -> None:
        self._emit("warn", message, data, error)

    def error(self, message: str, data: Optional[Dict[str, Any]] = None, error: Optional[BaseException] = None) -> None:
        self._emit("error", message, data, error)

    def debug(self, message: str, data: Optional[Dict[str, Any]] = None, error: Optional[BaseException] = None) -> None:
        self._emit("debug", message, data, error)

    def trace(self, message: str, data: Optional[Dict[str, Any]] = None, error: Optional[BaseException] = None) -> None:
        self._emit("trace", message, data, error)

    def child(self, child_filename: str, **overrides: Any) -> "Logger":
        config = LoggerConfig(
            level=overrides.get("level", self.config.level),
            colorize=overrides.get("colorize", self.config.colorize),
            timestamp=overrides.get("timestamp", self.config.timestamp),
            json_format=overrides.get("json_format", self.config.json_format),
            output=overrides.get("output", self.config.output),
        )
        return Logger(self.package_name, child_filename, config)

    def with_context(self, context: Dict[str, Any]) -> "ContextLogger":
        return ContextLogger(self, context)


class ContextLogger:
    """Merges a fixed context (run id, seed, command) into every entry."""

    def __init__(self, parent: Logger, context: Dict[str, Any]):
        self._parent = parent
        self._context = context

    def _merge(self, data: Optional[Dict[str, Any]]) -> Dict[str, Any]:
        merged = dict(self._context)
        if data:
            merged.update(data)
        return merged

    def info(self, message: str, data: Optional[Dict[str, Any]] = None, error: Optional[BaseException] = None) -> None:
        self._parent.info(message, self._merge(data), error)

    def warn(self, message: str, data: Optional[Dict[str, Any]] = None, error: Optional[BaseException] = None) -> None:
        self._parent.warn(message, self._merge(data), error)

    def error(self, message: str, data: Optional[Dict[str, Any]] = None, error: Optional[BaseException] = None) -> None:
        self._parent.error(message, self._merge(data), error)

    def debug(self, message: str, data: Optional[Dict[str, Any]] = None, error: Optional[BaseException] = None) -> None:
        self._parent.debug(message, self._merge(data), error)

    def trace(self, message: str, data: Optional[Dict[str, Any]] = None, error: Optional[BaseException] = None) -> None:
        self._parent.trace(message, self._merge(data), error)


class LoggerFactory:
    LOG_LEVELS = LOG_LEVELS

    @staticmethod
    def create(
        package_name: str,
        filename: str,
        level: Optional[str] = None,
        colorize: Optional[bool] = None,
        timestamp: bool = True,
        json_format: Optional[bool] = None,
        output: Optional[Callable[[str], None]] = None,
    ) -> Logger:
        """
        Create a logger for a module.

        Args:
            package_name: Package label shown in each line
            filename: Usually ``__file__``
            level: error, warn, info, debug or trace (default from env)
            json_format: Emit JSON lines (default: LOG_FORMAT == "json")
            output: Custom sink; defaults to stderr
        """
        config = LoggerConfig(
            level=level,
            colorize=colorize,
            timestamp=timestamp,
            json_format=json_format,
            output=output,
        )
        return Logger(package_name, filename, config)


logger = LoggerFactory()
