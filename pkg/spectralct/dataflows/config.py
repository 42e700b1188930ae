import spectralct.default_config as default_config
from typing import Any, Dict, Optional
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Use default config but allow it to be overridden
_config: Optional[Dict] = None


def initialize_config():
    """Initialize the configuration with default values."""
    global _config
    if _config is None:
        _config = default_config.DEFAULT_CONFIG.copy()


def set_config(config: Dict):
    """Update the configuration with custom values."""
    global _config
    if _config is None:
        _config = default_config.DEFAULT_CONFIG.copy()
    _config.update(config)


def get_config() -> Dict:
    """Get the current configuration."""
    if _config is None:
        initialize_config()
    return _config.copy()


def get_setting(key_name: str, env_var_name: str) -> Any:
    """Get a setting from environment variables or config."""
    # First check environment variables
    value = os.getenv(env_var_name)

    # If not found, check config
    if value is None and _config is not None and key_name in _config:
        value = _config[key_name]

    return value


def get_output_dir() -> str:
    """Get the default run output directory."""
    return get_setting("output_dir", "SPECTRALCT_OUTPUT_DIR")


def get_log_level() -> str:
    """Get the log level name for the CLI handler."""
    return str(get_setting("log_level", "SPECTRALCT_LOG_LEVEL")).upper()


# Initialize with default config
initialize_config()
