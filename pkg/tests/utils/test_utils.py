"""
Test Suite for Utility Functions
Tests stage profiling and logging setup
"""

import logging

import pytest

from geowarp.logger import resolve_level, setup_logging
from geowarp.utils import profile_stage


@pytest.fixture
def restore_root_logger():
    """Put the root logger back after setup_logging reconfigures it"""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield root
    root.handlers[:] = handlers
    root.setLevel(level)


class TestProfileStage:
    """Test profile_stage"""

    def test_disabled_records_nothing(self):
        """Test non-verbose runs leave the timing dict empty"""
        timings = {}
        with profile_stage("render", timings, verbose=False):
            pass
        assert timings == {}

    def test_records_duration(self):
        """Test verbose runs store seconds and milliseconds"""
        timings = {}
        with profile_stage("render", timings, verbose=True):
            sum(range(1000))
        assert set(timings["render"]) == {"duration_seconds", "duration_ms"}
        assert timings["render"]["duration_ms"] >= 0.0

    def test_records_on_failure(self):
        """Test the timing is kept when the block raises"""
        timings = {}
        with pytest.raises(RuntimeError):
            with profile_stage("optimize", timings, verbose=True):
                raise RuntimeError("diverged")
        assert "optimize" in timings


class TestSetupLogging:
    """Test setup_logging"""

    def test_level_from_environment(self, monkeypatch, restore_root_logger):
        """Test LOG_LEVEL selects the root level"""
        monkeypatch.setenv("LOG_LEVEL", "warning")
        monkeypatch.delenv("LOG_TO_FILE", raising=False)
        logger = setup_logging(force=True)
        assert logger.name == "geowarp"
        assert restore_root_logger.level == logging.WARNING

    def test_unknown_level_falls_back_to_info(self, monkeypatch, restore_root_logger):
        """Test unrecognized levels use INFO"""
        monkeypatch.setenv("LOG_LEVEL", "chatty")
        monkeypatch.delenv("LOG_TO_FILE", raising=False)
        setup_logging(force=True)
        assert restore_root_logger.level == logging.INFO

    def test_file_handler(self, monkeypatch, tmp_path, restore_root_logger):
        """Test LOG_TO_FILE adds a file handler"""
        monkeypatch.setenv("LOG_TO_FILE", "true")
        monkeypatch.setenv("LOG_FILE", str(tmp_path / "run.log"))
        setup_logging(force=True)
        file_handlers = [h for h in restore_root_logger.handlers if isinstance(h, logging.FileHandler)]
        assert len(file_handlers) == 1
        for handler in file_handlers:
            handler.close()

    def test_verbose_overrides_level(self, monkeypatch, restore_root_logger):
        """Test verbose logs at DEBUG whatever LOG_LEVEL says"""
        monkeypatch.setenv("LOG_LEVEL", "ERROR")
        monkeypatch.delenv("LOG_TO_FILE", raising=False)
        setup_logging(force=True, verbose=True)
        assert restore_root_logger.level == logging.DEBUG

    def test_resolve_level(self):
        """Test level names are case and whitespace insensitive"""
        assert resolve_level(" debug ") == logging.DEBUG
        assert resolve_level("Critical") == logging.CRITICAL
        assert resolve_level("") == logging.INFO
