"""
Configuration module for shiftlab.
Supports both YAML and environment variable configuration.
"""
import os
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv


def _env_bool(name: str, default: Any) -> bool:
    return os.getenv(name, str(default)).lower() in ("1", "true", "yes")


class Config:
    """Configuration class with support for environment variables and YAML."""

    def __init__(self, config_path: Optional[str] = None):
        load_dotenv()

        self.yaml_config: Dict[str, Any] = {}
        if config_path and os.path.exists(config_path):
            with open(config_path, 'r', encoding='utf-8') as file:
                self.yaml_config = yaml.safe_load(file) or {}

        self._init_output_config()
        self._init_numerics_config()
        self._init_logging_config()

    def _init_output_config(self):
        """Initialize output configuration."""
        yaml_output = self.yaml_config.get('output', {})

        self.OUTPUT_DIR = os.getenv('SHIFTLAB_OUTPUT_DIR', yaml_output.get('dir', './shiftlab_output'))
        self.INCLUDE_META = _env_bool('SHIFTLAB_INCLUDE_META', yaml_output.get('include_meta', True))

    def _init_numerics_config(self):
        """Initialize numerical defaults; every key may be overridden by SHIFTLAB_<KEY>."""
        yaml_num = self.yaml_config.get('numerics', {})

        def pick(key: str, default: Any, cast):
            return cast(os.getenv(f'SHIFTLAB_{key.upper()}', yaml_num.get(key, default)))

        self.FIXED_POINT_GRID = pick('fixed_point_grid', 4096, int)
        self.W_ORDER = pick('w_order', 512, int)
        self.KOENIGS_ORDER = pick('koenigs_order', 30, int)
        self.EIGEN_GRID = pick('eigen_grid', 2048, int)
        self.EIGEN_TOL = pick('eigen_tol', 1e-10, float)
        self.EIGEN_MAX_ITER = pick('eigen_max_iter', 20000, int)
        self.STEP_DEPTH = pick('step_depth', 40, int)
        self.STEPS_PER_LAYER = pick('steps_per_layer', 64, int)
        self.PN_CAP = pick('pn_cap', 8, int)
        self.ZETA_LAMBDA_FLOOR = pick('zeta_lambda_floor', 10.0, float)
        self.TOL_ZERO = pick('tol_zero', 1e-8, float)
        self.TOL_NONZERO = pick('tol_nonzero', 1e-6, float)

    def _init_logging_config(self):
        """Initialize logging configuration."""
        yaml_logging = self.yaml_config.get('logging', {})

        self.LOG_LEVEL = os.getenv('LOG_LEVEL', yaml_logging.get('level', 'INFO'))
        self.LOG_FORMAT = os.getenv('LOG_FORMAT', yaml_logging.get('format', '%(asctime)s - %(name)s - %(levelname)s - %(message)s'))

    def get_output_config(self) -> Dict[str, Any]:
        """Get output configuration as dictionary."""
        return {
            'dir': self.OUTPUT_DIR,
            'include_meta': self.INCLUDE_META,
        }

    def get_numerics_config(self) -> Dict[str, Any]:
        """Get numerical defaults as dictionary."""
        return {
            'fixed_point_grid': self.FIXED_POINT_GRID,
            'w_order': self.W_ORDER,
            'koenigs_order': self.KOENIGS_ORDER,
            'eigen_grid': self.EIGEN_GRID,
            'eigen_tol': self.EIGEN_TOL,
            'eigen_max_iter': self.EIGEN_MAX_ITER,
            'step_depth': self.STEP_DEPTH,
            'steps_per_layer': self.STEPS_PER_LAYER,
            'pn_cap': self.PN_CAP,
            'zeta_lambda_floor': self.ZETA_LAMBDA_FLOOR,
            'tol_zero': self.TOL_ZERO,
            'tol_nonzero': self.TOL_NONZERO,
        }

    def get_logging_config(self) -> Dict[str, Any]:
        """Get logging configuration as dictionary."""
        return {
            'level': self.LOG_LEVEL,
            'format': self.LOG_FORMAT,
        }


def get_config(config_path: Optional[str] = None) -> Config:
    """Build a configuration instance from the packaged YAML (or the given path)."""
    config_file = config_path or os.path.join(os.path.dirname(__file__), 'config.yaml')
    return Config(config_file)
