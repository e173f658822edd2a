"""Unit tests for dgflow.core.logging_config.

Tests cover configuration validation, initialization, array summaries,
event normalization and error handling in the logging system.
"""

import json
import logging
import logging.handlers
from pathlib import Path

import numpy as np
import pytest
import structlog
from structlog.stdlib import ProcessorFormatter

from dgflow.core.basis import NodeKind
from dgflow.core.logging_config import (
    ErrorCodes,
    LoggingConfig,
    normalize_event_dict,
    setup_logging,
    summarize_arrays,
)


@pytest.fixture
def temp_log_dir(tmp_path: Path) -> Path:
    """Create a temporary directory for log files."""
    log_dir = tmp_path / "logs"
    log_dir.mkdir()
    return log_dir


@pytest.fixture
def valid_config(temp_log_dir: Path) -> LoggingConfig:
    """Create a valid logging configuration."""
    return LoggingConfig(
        level="INFO",
        format="json",
        file=str(temp_log_dir / "test.log"),
        max_bytes=1024,
        backup_count=2,
    )


# Test LoggingConfig
def test_logging_config_defaults():
    """Test default values in LoggingConfig."""
    config = LoggingConfig()
    assert config.level == "INFO"
    assert config.console_level is None
    assert config.format == "console"
    assert config.max_bytes == 10 * 1024 * 1024
    assert config.backup_count == 5
    assert config.timezone == "UTC"
    assert "dgflow_log.json" in config.file


def test_logging_config_normalizes_case():
    config = LoggingConfig(level="debug", console_level="warning", format="JSON")
    assert config.level == "DEBUG"
    assert config.console_level == "WARNING"
    assert config.format == "json"


def test_logging_config_validation():
    """Test validation of logging configuration values."""
    with pytest.raises(ValueError, match="Invalid LOG_LEVEL"):
        LoggingConfig(level="INVALID")

    with pytest.raises(ValueError, match="Invalid console_level"):
        LoggingConfig(console_level="LOUD")

    with pytest.raises(ValueError, match="Invalid LOG_FORMAT"):
        LoggingConfig(format="INVALID")

    with pytest.raises(ValueError, match="LOG_MAX_BYTES must be positive"):
        LoggingConfig(max_bytes=0)

    with pytest.raises(ValueError, match="LOG_BACKUP_COUNT must be positive"):
        LoggingConfig(backup_count=0)

    with pytest.raises(ValueError, match="Invalid timezone"):
        LoggingConfig(timezone="Mars/Olympus_Mons")


def test_logging_config_from_env(monkeypatch: pytest.MonkeyPatch, tmp_path: Path):
    """Test loading configuration from environment variables."""
    env_vars = {
        "LOG_LEVEL": "DEBUG",
        "CONSOLE_LOG_LEVEL": "ERROR",
        "LOG_FORMAT": "json",
        "LOG_FILE": str(tmp_path / "run.log"),
        "LOG_MAX_BYTES": "2048",
        "LOG_BACKUP_COUNT": "3",
        "LOG_TIMEZONE": "Europe/Madrid",
    }
    for key, value in env_vars.items():
        monkeypatch.setenv(key, value)

    config = LoggingConfig.from_env()
    assert config.level == "DEBUG"
    assert config.console_level == "ERROR"
    assert config.format == "json"
    assert config.file == env_vars["LOG_FILE"]
    assert config.max_bytes == 2048
    assert config.backup_count == 3
    assert config.timezone == "Europe/Madrid"


# Test setup_logging
def test_setup_logging_creates_handlers(valid_config: LoggingConfig):
    """Test that setup_logging creates the expected handlers."""
    setup_logging(valid_config)
    root_logger = logging.getLogger()

    assert len(root_logger.handlers) == 1  # File handler only without console level
    assert isinstance(root_logger.handlers[0], logging.handlers.RotatingFileHandler)
    assert root_logger.level == logging.INFO


def test_setup_logging_console_handler(valid_config: LoggingConfig):
    """A console level adds a second handler and lowers the root level."""
    valid_config.console_level = "DEBUG"
    setup_logging(valid_config)
    root_logger = logging.getLogger()

    assert len(root_logger.handlers) == 2
    assert any(
        isinstance(h, logging.handlers.RotatingFileHandler)
        for h in root_logger.handlers
    )
    assert all(isinstance(h.formatter, ProcessorFormatter) for h in root_logger.handlers)
    assert root_logger.level == logging.DEBUG


def test_setup_logging_invalid_directory(tmp_path: Path):
    """A log path below a regular file cannot be created."""
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    config = LoggingConfig(file=str(blocker / "dir" / "test.log"))
    with pytest.raises(OSError):
        setup_logging(config)


def test_setup_logging_creates_log_file(valid_config: LoggingConfig):
    """Test that log file is created."""
    setup_logging(valid_config)
    assert Path(valid_config.file).exists()


# Test summarize_arrays
def test_summarize_arrays_keeps_small_arrays():
    """Small arrays are logged as plain lists."""
    result = summarize_arrays("test_logger", "info", {"node": np.array([2, 0, 3])})
    assert result == {"node": [2, 0, 3]}


def test_summarize_arrays_replaces_large_arrays():
    """Large arrays are replaced by shape, dtype and extrema."""
    data = np.linspace(-1.0, 2.0, 5 * 27).reshape(5, 3, 3, 3)
    result = summarize_arrays("test_logger", "info", {"state": data, "element": 4})
    assert result["element"] == 4
    assert result["state"] == {
        "shape": [5, 3, 3, 3],
        "dtype": "float64",
        "min": -1.0,
        "max": 2.0,
    }
    json.dumps(result)


def test_summarize_arrays_nested_content():
    """Arrays inside containers are summarized too."""
    event = {
        "outer": {"residual": np.zeros(100), "step": 3},
        "orders": [np.array([3, 3, 2]), (1, 2, 3)],
        "event": "test",
    }
    result = summarize_arrays("test_logger", "info", event)
    assert result["outer"]["residual"]["shape"] == [100]
    assert result["outer"]["step"] == 3
    assert result["orders"] == [[3, 3, 2], [1, 2, 3]]
    assert result["event"] == "test"


def test_normalize_event_dict_flattens_enums_and_numpy():
    event = {
        "event": "Adapted orders",
        "error_code": ErrorCodes.STAGE_FAILURE,
        "kind": NodeKind.GAUSS,
        "dt": np.float64(0.25),
        "element": np.int64(7),
    }
    result = normalize_event_dict("test_logger", "warning", event)

    assert result["level"] == "warning"
    assert result["error_code"] == "STAGE_FAILURE"
    assert result["kind"] == "gauss"
    assert type(result["dt"]) is float
    assert type(result["element"]) is int
    json.dumps(result)


# Integration tests
def test_logging_output_format(valid_config: LoggingConfig):
    """Test the format of logged output."""
    setup_logging(valid_config)
    logger = structlog.get_logger("test")

    logger.info("Test log message", step=np.int64(12), dt=np.float64(1e-3))

    with open(valid_config.file) as f:
        log_line = f.readlines()[-1]

    log_entry = json.loads(log_line)
    assert log_entry["event"] == "Test log message"
    assert log_entry["level"] == "info"
    assert log_entry["step"] == 12
    assert log_entry["dt"] == pytest.approx(1e-3)
    assert "timestamp" in log_entry


def test_logging_timezone(valid_config: LoggingConfig):
    valid_config.timezone = "Asia/Tokyo"
    setup_logging(valid_config)
    structlog.get_logger("test").info("Timestamped")

    with open(valid_config.file) as f:
        log_entry = json.loads(f.readlines()[-1])
    assert log_entry["timezone"] == "Asia/Tokyo"
    assert log_entry["timestamp"].endswith("+09:00")


def test_logging_rotation(valid_config: LoggingConfig):
    """Test log file rotation."""
    valid_config.max_bytes = 100
    setup_logging(valid_config)
    logger = structlog.get_logger("test")

    for _ in range(10):
        logger.info("Test message " * 5)

    log_file = Path(valid_config.file)
    assert log_file.exists()
    assert (log_file.parent / f"{log_file.name}.1").exists()


def test_error_logging(valid_config: LoggingConfig):
    """Test error logging with stack traces."""
    setup_logging(valid_config)
    logger = structlog.get_logger("test")

    try:
        raise ValueError("Test error")
    except ValueError:
        logger.error("Error occurred", exc_info=True)

    with open(valid_config.file) as f:
        log_line = f.readlines()[-1]

    log_entry = json.loads(log_line)
    assert log_entry["level"] == "error"
    assert "exception" in log_entry
    assert "ValueError: Test error" in log_entry["exception"]
