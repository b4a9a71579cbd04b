"""
Tests for settings, structured logging and error handling
"""

import json
import logging

import pytest

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from schurlab.core.config import Settings, settings, thread_cap
from schurlab.core.error_handling import (
    ConfigValidationError,
    ErrorCategory,
    ErrorHandler,
    MissingInputError,
    NodeClashError,
    SchurLabException,
    ToleranceBreachError,
)
from schurlab.core.logging import JSONFormatter, LoggerManager


class TestSettings:
    """Defaults and environment overrides"""

    def test_numeric_defaults(self):
        """Tolerances and grid sizes have their documented defaults"""
        fresh = Settings()
        assert fresh.node_tol_rel == 1e-12
        assert fresh.fourier_points_3d == 1024
        assert fresh.partition_sharpness == 64.0
        assert fresh.q_table_max_n == 6

    def test_env_override(self, monkeypatch):
        """SCHURLAB_ prefixed variables override the defaults"""
        monkeypatch.setenv("SCHURLAB_THREADS", "7")
        assert Settings().threads == 7

    def test_thread_cap(self, monkeypatch):
        """Requests are clamped to [1, threads]"""
        monkeypatch.setattr(settings, "threads", 3)
        assert thread_cap() == 3
        assert thread_cap(10) == 3
        assert thread_cap(2) == 2
        assert thread_cap(0) == 1


class TestErrorHandler:
    """Structured records and exit codes"""

    @pytest.fixture
    def handler(self):
        return ErrorHandler()

    def test_exit_codes(self, handler):
        """Validation maps to 2, tolerance breaches to 3, everything else to 1"""
        assert handler.exit_code_for(ConfigValidationError("bad config")) == 2
        assert handler.exit_code_for(NodeClashError("clash")) == 2
        assert handler.exit_code_for(ToleranceBreachError("breach", suite="remark")) == 3
        assert handler.exit_code_for(ValueError("bad value")) == 2
        assert handler.exit_code_for(MissingInputError("gone")) == 1
        assert handler.exit_code_for(RuntimeError("boom")) == 1

    def test_handle_error_record(self, handler):
        """Records carry the error code, category and details"""
        record = handler.handle_error(ToleranceBreachError("breach", suite="divdiff", residual=1.0, tol=1e-9),
                                      {"command": "verify"})
        assert record["success"] is False
        assert record["error"]["error_code"] == "TOLERANCE_BREACH"
        assert record["error"]["category"] == "tolerance"
        assert record["error"]["details"]["suite"] == "divdiff"
        assert record["context"] == {"command": "verify"}
        json.dumps(record, default=str)

    def test_convert_generic_errors(self, handler):
        """Builtin exceptions become SchurLab exceptions"""
        converted = handler.convert_error(FileNotFoundError("missing.json"))
        assert isinstance(converted, MissingInputError)
        converted = handler.convert_error(TypeError("wrong type"))
        assert converted.category == ErrorCategory.VALIDATION
        converted = handler.convert_error(KeyError("x"))
        assert isinstance(converted, SchurLabException)
        assert converted.error_code == "UNKNOWN_ERROR"

    def test_error_statistics(self, handler):
        """Handled errors are counted by category and code"""
        handler.handle_error(ConfigValidationError("a"))
        handler.handle_error(ConfigValidationError("b"))
        stats = handler.get_error_statistics()
        assert stats["error_counts"]["validation:CONFIG_VALIDATION"] == 2
        assert stats["total_errors"] == 2

        print("✅ Error statistics test passed")


class TestLogging:
    """JSON log formatting"""

    def test_json_formatter_extra_fields(self):
        """Known extra fields are carried into the JSON entry"""
        record = logging.LogRecord("experiments", logging.INFO, __file__, 1, "finished", None, None)
        record.experiment = "estimate_norm"
        record.seed = 3
        entry = json.loads(JSONFormatter().format(record))
        assert entry["message"] == "finished"
        assert entry["experiment"] == "estimate_norm"
        assert entry["seed"] == 3
        assert "timestamp" in entry

    def test_file_logging(self, tmp_path):
        """File logging writes rotating JSON logs under the log directory"""
        manager = LoggerManager(log_dir=str(tmp_path), to_file=True)
        LoggerManager.log_experiment_event("unit", "started", seed=1)
        for handler in logging.getLogger("experiments").handlers:
            handler.flush()
        assert (tmp_path / "experiments.log").exists()
        LoggerManager(to_file=False)
        assert manager.log_dir == tmp_path
