import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import replace
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from .serializers import build_run_config

logger = logging.getLogger(__name__)


def resolve_config_path(name_or_path):
    """A file path, or the name of a profile shipped in driver/profiles"""
    path = Path(name_or_path)
    if path.is_file():
        return path
    profile = Path(settings.PROFILES_DIR) / f'{name_or_path}.toml'
    if profile.is_file():
        return profile
    raise ImproperlyConfigured(f'No config file or profile named {name_or_path!r}')


def apply_overrides(cfg):
    """RUN_SEED and RUN_OUTPUT_DIR from the environment win over the file"""
    if settings.RUN_SEED is not None:
        cfg = replace(cfg, seed=settings.RUN_SEED)
    if settings.RUN_OUTPUT_DIR:
        cfg = replace(cfg, output_dir=settings.RUN_OUTPUT_DIR)
    return cfg


def load_run_config(name_or_path, overrides=True):
    path = resolve_config_path(name_or_path)
    try:
        with path.open('rb') as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ImproperlyConfigured(f'Config file {path} is not valid TOML: {e}')

    cfg = build_run_config(data)
    if overrides:
        cfg = apply_overrides(cfg)
    logger.debug('Loaded run config %s from %s', cfg.name, path)
    return cfg
