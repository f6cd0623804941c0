"""
Configuration management for the bilinear hull toolkit.
Handles environment variables and solver settings.
"""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class ConfigurationError(Exception):
    """Custom exception for configuration-related errors."""

    pass


@dataclass
class SolverConfig:
    """
    Configuration settings shared by the envelope oracles, the LP kernel and
    the experiment drivers.

    Attributes:
        envelope_cap (int): Largest n for which the 2^n-column envelope LP is built
        denominator (int): Denominator bound for random sample points
        jobs (int): Worker processes for sample evaluation
        lazy_rows (bool): Activate multi-variable rows on demand in fixed-x solves
        lazy_batch (int): Maximum number of rows activated per round
        witness_tries (int): Candidate points tried by the minimality witness search
        log_level (str): Logging level name
    """

    envelope_cap: int = 16
    denominator: int = 64
    jobs: int = 1
    lazy_rows: bool = True
    lazy_batch: int = 64
    witness_tries: int = 400
    log_level: str = "WARNING"

    def __post_init__(self):
        """Validate configuration after initialization."""
        self._validate_config()

    def _validate_config(self) -> None:
        """
        Validate the configuration settings.

        Raises:
            ConfigurationError: If any configuration values are invalid
        """
        if not isinstance(self.envelope_cap, int) or not 1 <= self.envelope_cap <= 24:
            raise ConfigurationError("envelope_cap must be an integer between 1 and 24")

        if not isinstance(self.denominator, int) or self.denominator < 1:
            raise ConfigurationError("denominator must be a positive integer")

        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigurationError("jobs must be a positive integer")

        if not isinstance(self.lazy_batch, int) or self.lazy_batch < 1:
            raise ConfigurationError("lazy_batch must be a positive integer")

        if not isinstance(self.witness_tries, int) or self.witness_tries < 1:
            raise ConfigurationError("witness_tries must be a positive integer")

        if self.log_level.upper() not in _LOG_LEVELS:
            raise ConfigurationError(
                f"log_level must be one of {', '.join(_LOG_LEVELS)}, got {self.log_level!r}"
            )

    @classmethod
    def load_from_env(cls, env_file: bool = True) -> "SolverConfig":
        """
        Load configuration from environment variables.

        Args:
            env_file: Whether to load from .env file. Defaults to True.

        Returns:
            SolverConfig: Configuration object with settings from environment

        Raises:
            ConfigurationError: If an override is out of range
            ValueError: If a numeric override cannot be parsed
        """
        if env_file:
            load_dotenv()

        overrides = {}
        if cap := os.getenv("BQP_ENVELOPE_CAP"):
            overrides["envelope_cap"] = int(cap)

        if denominator := os.getenv("BQP_DENOMINATOR"):
            overrides["denominator"] = int(denominator)

        if jobs := os.getenv("BQP_JOBS"):
            overrides["jobs"] = int(jobs)

        if lazy := os.getenv("BQP_LAZY_ROWS"):
            overrides["lazy_rows"] = lazy.strip().lower() in ("1", "true", "yes", "on")

        if batch := os.getenv("BQP_LAZY_BATCH"):
            overrides["lazy_batch"] = int(batch)

        if tries := os.getenv("BQP_WITNESS_TRIES"):
            overrides["witness_tries"] = int(tries)

        if level := os.getenv("BQP_LOG_LEVEL"):
            overrides["log_level"] = level.upper()

        return cls(**overrides)


_config_instance = None


def get_config(env_file: bool = True) -> SolverConfig:
    """
    Get the configuration, initializing it if necessary.

    Args:
        env_file: Whether to load from .env file. Defaults to True.

    Returns:
        SolverConfig: The configuration instance

    Raises:
        ConfigurationError: If the configuration is invalid
    """
    global _config_instance
    if _config_instance is None:
        _config_instance = SolverConfig.load_from_env(env_file=env_file)
    return _config_instance


def reset_config():
    """
    Reset the configuration instance.
    This is primarily used for testing purposes.
    """
    global _config_instance
    _config_instance = None
