# spectralct/dataflows/__init__.py

from .config import get_config, get_log_level, get_output_dir, get_setting, set_config
from .utils import atomic_write_bytes, read_table, save_output, save_png, write_json

__all__ = [
    "get_config",
    "get_log_level",
    "get_output_dir",
    "get_setting",
    "set_config",
    "atomic_write_bytes",
    "read_table",
    "save_output",
    "save_png",
    "write_json",
]
