"""
Tests for configuration management.
"""

import pytest

from config import ConfigurationError, SolverConfig, get_config, reset_config

ENV_KEYS = (
    "BQP_ENVELOPE_CAP",
    "BQP_DENOMINATOR",
    "BQP_JOBS",
    "BQP_LAZY_ROWS",
    "BQP_LAZY_BATCH",
    "BQP_WITNESS_TRIES",
    "BQP_LOG_LEVEL",
)


@pytest.fixture(autouse=True)
def clean_config(monkeypatch):
    """Reset configuration and solver variables before each test."""
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)
    reset_config()
    yield
    reset_config()


def test_config_validation():
    """Test configuration validation."""
    # Test valid configuration
    config = SolverConfig(envelope_cap=10, denominator=8, jobs=2)
    assert config.envelope_cap == 10
    assert config.jobs == 2

    # Test invalid cap
    with pytest.raises(ConfigurationError):
        SolverConfig(envelope_cap=0)

    # Test invalid denominator
    with pytest.raises(ConfigurationError):
        SolverConfig(denominator=-1)

    with pytest.raises(ConfigurationError):
        SolverConfig(jobs=0)

    with pytest.raises(ConfigurationError) as exc:
        SolverConfig(log_level="LOUD")
    assert "log_level" in str(exc.value)


def test_env_loading(monkeypatch):
    """Test loading configuration from environment variables."""
    test_env = {
        "BQP_ENVELOPE_CAP": "12",
        "BQP_DENOMINATOR": "16",
        "BQP_JOBS": "3",
        "BQP_LAZY_ROWS": "false",
        "BQP_LAZY_BATCH": "8",
        "BQP_WITNESS_TRIES": "50",
        "BQP_LOG_LEVEL": "debug",
    }

    for key, value in test_env.items():
        monkeypatch.setenv(key, value)

    config = SolverConfig.load_from_env(env_file=False)
    assert config.envelope_cap == 12
    assert config.denominator == 16
    assert config.jobs == 3
    assert config.lazy_rows is False
    assert config.lazy_batch == 8
    assert config.witness_tries == 50
    assert config.log_level == "DEBUG"


def test_invalid_env_values(monkeypatch):
    """Test handling of invalid environment variable values."""
    monkeypatch.setenv("BQP_DENOMINATOR", "invalid")

    with pytest.raises(ValueError):
        SolverConfig.load_from_env(env_file=False)


def test_out_of_range_env_values(monkeypatch):
    """Test that parsed but out-of-range overrides are rejected."""
    monkeypatch.setenv("BQP_ENVELOPE_CAP", "99")

    with pytest.raises(ConfigurationError):
        SolverConfig.load_from_env(env_file=False)


def test_default_values():
    """Test default configuration values."""
    config = SolverConfig()
    assert config.envelope_cap == 16
    assert config.denominator == 64
    assert config.jobs == 1
    assert config.lazy_rows is True
    assert config.log_level == "WARNING"


def test_get_config_is_cached(monkeypatch):
    """Test that get_config returns one instance until reset."""
    first = get_config(env_file=False)
    monkeypatch.setenv("BQP_JOBS", "4")
    assert get_config(env_file=False) is first

    reset_config()
    assert get_config(env_file=False).jobs == 4
