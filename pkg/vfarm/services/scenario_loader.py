"""
Fichiers de scénario : YAML avec inclusions partagées, validés en ScenarioConfig
"""

import copy
import logging
from pathlib import Path
from typing import Any, Optional, Union

import yaml
from pydantic import ValidationError

from vfarm.config import PATHS
from vfarm.models.scenario import ScenarioConfig
from vfarm.utils.errors import ConfigValidationError, InputDataError, from_pydantic

logger = logging.getLogger(__name__)

MAX_INCLUDE_DEPTH = 8


def deep_merge(base: dict, override: dict) -> dict:
    """Fusion imbriquée ; ``override`` l'emporte, les dictionnaires fusionnent clé par clé"""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class ScenarioLoader:
    """Lit les fichiers de scénario et résout les fichiers qu'ils référencent"""

    def __init__(self, data_dir: Optional[Path] = None):
        self.data_dir = Path(data_dir or PATHS['data_dir'])

    def read_yaml(self, path: Union[str, Path], _depth: int = 0) -> dict[str, Any]:
        path = Path(path)
        if not path.exists():
            raise InputDataError(f'Config file not found: {path}', path=str(path))
        if _depth > MAX_INCLUDE_DEPTH:
            raise ConfigValidationError(
                f'Includes nested too deeply at {path}', field='include'
            )
        try:
            with open(path, encoding='utf-8') as handle:
                document = yaml.safe_load(handle) or {}
        except yaml.YAMLError as e:
            raise ConfigValidationError(f'Cannot parse {path}: {e}', field=str(path))
        if not isinstance(document, dict):
            raise ConfigValidationError(f'{path} must hold a mapping', field=str(path))

        includes = document.pop('include', []) or []
        if isinstance(includes, str):
            includes = [includes]
        merged: dict[str, Any] = {}
        for name in includes:
            merged = deep_merge(merged, self.read_yaml(path.parent / name, _depth + 1))
        return deep_merge(merged, document)

    def _resolve(self, name: str, config_dir: Path) -> Path:
        candidate = Path(name)
        if candidate.is_absolute():
            return candidate
        local = config_dir / candidate
        if local.exists() or local.with_name(local.name + '_direct.csv').exists():
            return local.resolve()
        return (self.data_dir / candidate).resolve()

    def _resolve_files(self, config: ScenarioConfig, config_dir: Path) -> ScenarioConfig:
        lue = self._resolve(config.lue_table, config_dir)
        if not lue.exists():
            raise InputDataError(f'LUE table not found: {lue}', path=str(lue))
        updates: dict[str, Any] = {'lue_table': str(lue)}

        if config.climate.source == 'file':
            climate_path = self._resolve(config.climate.path, config_dir)
            if not climate_path.exists():
                raise InputDataError(
                    f'Climate file not found: {climate_path}', path=str(climate_path)
                )
            updates['climate'] = config.climate.model_copy(update={'path': str(climate_path)})

        if config.optics.table_source == 'imported':
            stem = self._resolve(config.optics.table_path, config_dir)
            direct = stem.with_name(stem.name + '_direct.csv')
            if not direct.exists():
                raise InputDataError(f'Efficiency table not found: {direct}', path=str(direct))
            updates['optics'] = config.optics.model_copy(update={'table_path': str(stem)})

        if config.calibration:
            artifact = self._resolve(config.calibration, config_dir)
            if not artifact.exists():
                raise InputDataError(
                    f'Calibration artifact not found: {artifact} (run the calibrate command)',
                    path=str(artifact),
                )
            updates['calibration'] = str(artifact)
        return config.model_copy(update=updates)

    def build(self, document: dict[str, Any], config_dir: Path) -> ScenarioConfig:
        try:
            config = ScenarioConfig.model_validate(document)
        except ValidationError as e:
            raise from_pydantic(e)
        return self._resolve_files(config, config_dir)

    def load(
        self, path: Union[str, Path], overrides: Optional[dict[str, Any]] = None
    ) -> ScenarioConfig:
        path = Path(path)
        document = self.read_yaml(path)
        if overrides:
            document = deep_merge(document, overrides)
        document.pop('scenarios', None)
        config = self.build(document, path.parent)
        logger.info(f'Loaded scenario {config.label} from {path}')
        return config

    def load_set(
        self, path: Union[str, Path], overrides: Optional[dict[str, Any]] = None
    ) -> list[ScenarioConfig]:
        """Un fichier d'ensemble liste des fichiers de scénario sous ``scenarios:``.

        Son dictionnaire ``overrides:`` optionnel est fusionné dans chaque scénario.
        """
        path = Path(path)
        document = self.read_yaml(path)
        names = document.get('scenarios')
        if not names:
            # Un fichier de scénario seul est un ensemble d'un élément
            return [self.load(path, overrides)]
        if not isinstance(names, list):
            raise ConfigValidationError('scenarios must be a list of files', field='scenarios')
        shared = deep_merge(document.get('overrides') or {}, overrides or {})
        return [self.load(path.parent / name, shared) for name in names]


scenario_loader = ScenarioLoader()
