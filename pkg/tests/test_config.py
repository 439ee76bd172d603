import importlib

import pytest
from loguru import logger

from c2ed2.config import get_settings, reset_settings
from c2ed2.errors import ConfigError
from c2ed2.log import configure_logging
from c2ed2.simulation import DgpConfig, run_study


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("C2ED2_THREADS", "3")
    monkeypatch.setenv("C2ED2_LOG_LEVEL", "debug")
    monkeypatch.setenv("C2ED2_RANK_TOL", "1e-10")
    reset_settings()
    try:
        settings = get_settings()
        assert settings.threads == 3
        assert settings.log_level == "DEBUG"
        assert settings.rank_tol == 1e-10
        assert get_settings() is settings
    finally:
        reset_settings()


def test_settings_defaults(monkeypatch):
    for name in ("C2ED2_THREADS", "C2ED2_LOG_LEVEL", "C2ED2_RANK_TOL"):
        monkeypatch.delenv(name, raising=False)
    reset_settings()
    try:
        settings = get_settings()
        assert (settings.threads, settings.log_level, settings.rank_tol) == (1, "INFO", None)
    finally:
        reset_settings()


def test_logging_goes_to_stderr(capsys):
    logger = configure_logging("INFO")
    logger.info("hello from the pipeline")
    captured = capsys.readouterr()
    assert "hello from the pipeline" in captured.err
    assert captured.out == ""


def test_invalid_environment_is_config_error(monkeypatch):
    monkeypatch.setenv("C2ED2_THREADS", "lots")
    reset_settings()
    try:
        with pytest.raises(ConfigError, match="C2ED2_THREADS"):
            get_settings()
    finally:
        reset_settings()


def test_invalid_log_level():
    with pytest.raises(ConfigError):
        configure_logging("chatty")
    configure_logging("INFO")


def test_package_logs_silent_until_configured():
    import c2ed2

    messages = []
    importlib.reload(c2ed2)
    sink = logger.add(messages.append, level="DEBUG")
    try:
        run_study(DgpConfig(n_units=40, seed=1), estimators=["ols"], n_reps=1)
        assert messages == []
    finally:
        logger.remove(sink)

    configure_logging("DEBUG")
    sink = logger.add(messages.append, level="DEBUG")
    try:
        run_study(DgpConfig(n_units=40, seed=1), estimators=["ols"], n_reps=1)
        assert any("Monte Carlo" in str(m) for m in messages)
    finally:
        logger.remove(sink)
        configure_logging("INFO")
