import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from django.core.exceptions import ImproperlyConfigured

from .serializers import build_scenario

logger = logging.getLogger(__name__)


def load_scenario(path):
    """
    Read a scenario TOML file. The scenario keys may sit at the top level
    or under a [scenario] table.
    """
    path = Path(path)
    try:
        with path.open('rb') as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ImproperlyConfigured(f'Scenario file not found: {path}')
    except tomllib.TOMLDecodeError as e:
        raise ImproperlyConfigured(f'Scenario file {path} is not valid TOML: {e}')

    data = data.get('scenario', data)
    scenario = build_scenario(data)
    logger.debug('Loaded scenario %s from %s', scenario.name, path)
    return scenario
