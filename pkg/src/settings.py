"""
Run configuration: config.yaml defaults, environment overrides and logging setup
"""
import copy
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import yaml
from dotenv import load_dotenv

from errors import ConfigError

logger = logging.getLogger(__name__)

VERSION = '1.0.0'

LOG_FORMAT = '%(asctime)s | %(levelname)-8s | %(name)-20s | %(message)s'
LOG_DATEFMT = '%Y-%m-%d %H:%M:%S'

DEFAULTS = {
    'profile': {'alpha': 1.0, 'k': 0.0, 'epsilon': 0.1},
    'grid': {'n': 'auto', 'min_nodes': 401, 'nodes_per_epsilon': 16},
    'steady': {'tol': 1e-10, 'max_iter': 100, 'max_halvings': 10},
    'spectrum': {'m': 4, 'source': 'composite', 'allow_below_floor': False},
    'sweep': {'epsilons': [0.3, 0.25, 0.2, 0.15, 0.1]},
    'evolution': {
        'nu': 1e-3,
        'dt': 0.01,
        't_end': 'auto',
        'sample_every': 10,
        'newton_tol': 1e-11,
        'reference': 'steady',
    },
    'output': {'format': 'csv'},
    'jobs': 1,
    'logging': {'level': 'INFO', 'file': None},
}

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


def _merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_path: Optional[str] = None) -> dict:
    """
    Load configuration from YAML on top of the built-in defaults

    Environment variables (read after loading .env):
        BURGERS_JOBS: overrides `jobs`
        BURGERS_LOG_LEVEL: overrides `logging.level`

    Args:
        config_path: Path to a YAML file; None uses the defaults only

    Returns:
        dict: Merged configuration

    Raises:
        ConfigError: unreadable file or malformed YAML
    """
    load_dotenv()

    config = copy.deepcopy(DEFAULTS)
    if config_path is not None:
        try:
            with open(config_path, 'r') as f:
                loaded = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot load config {config_path}: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {config_path} must be a mapping")
        config = _merge(config, loaded)

    jobs = os.getenv('BURGERS_JOBS')
    if jobs:
        try:
            config['jobs'] = int(jobs)
        except ValueError:
            raise ConfigError(f"BURGERS_JOBS must be an integer, got {jobs!r}")
    level = os.getenv('BURGERS_LOG_LEVEL')
    if level:
        config['logging']['level'] = level.upper()
    return config


def validate_config(config: dict) -> List[str]:
    """
    Check every configured value

    Args:
        config: Merged configuration dictionary

    Returns:
        list: Problems found (empty when the configuration is valid)
    """
    errors = []

    eps = config['profile'].get('epsilon')
    if not isinstance(eps, (int, float)) or eps <= 0:
        errors.append(f"profile.epsilon must be positive, got {eps!r}")

    n = config['grid'].get('n')
    if n != 'auto' and (not isinstance(n, int) or n < 3):
        errors.append(f"grid.n must be 'auto' or an integer >= 3, got {n!r}")

    m = config['spectrum'].get('m')
    if not isinstance(m, int) or m < 1:
        errors.append(f"spectrum.m must be a positive integer, got {m!r}")
    if config['spectrum'].get('source') not in ('composite', 'steady'):
        errors.append("spectrum.source must be 'composite' or 'steady'")

    sweep = config['sweep'].get('epsilons') or []
    if not sweep or any(not isinstance(e, (int, float)) or e <= 0 for e in sweep):
        errors.append(f"sweep.epsilons must be a non-empty list of positive values, got {sweep!r}")

    evo = config['evolution']
    if not isinstance(evo.get('dt'), (int, float)) or evo['dt'] <= 0:
        errors.append(f"evolution.dt must be positive, got {evo.get('dt')!r}")
    t_end = evo.get('t_end')
    if t_end != 'auto' and (not isinstance(t_end, (int, float)) or t_end <= 0):
        errors.append(f"evolution.t_end must be 'auto' or positive, got {t_end!r}")
    if not isinstance(evo.get('sample_every'), int) or evo['sample_every'] < 1:
        errors.append("evolution.sample_every must be an integer >= 1")
    if evo.get('reference') not in ('steady', 'composite'):
        errors.append("evolution.reference must be 'steady' or 'composite'")

    if config['output'].get('format') not in ('csv', 'json'):
        errors.append("output.format must be 'csv' or 'json'")
    if not isinstance(config.get('jobs'), int) or config['jobs'] < 1:
        errors.append(f"jobs must be an integer >= 1, got {config.get('jobs')!r}")
    if str(config['logging'].get('level', '')).upper() not in LOG_LEVELS:
        errors.append(f"logging.level must be one of {', '.join(LOG_LEVELS)}")

    return errors


def setup_logging(config: dict):
    """
    Setup logging configuration

    Records go to stderr so stdout stays free for results; a file handler is added
    only when logging.file is set.

    Args:
        config: Configuration dictionary
    """
    log_config = config.get('logging', {})
    log_level = getattr(logging, str(log_config.get('level', 'INFO')).upper(), logging.INFO)
    handlers = [logging.StreamHandler(sys.stderr)]

    log_file = log_config.get('file')
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=log_level,
        format=LOG_FORMAT,
        datefmt=LOG_DATEFMT,
        handlers=handlers,
        force=True
    )
