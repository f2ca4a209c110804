"""
Écriture des fichiers de résultats ; chacun porte l'empreinte de configuration et la version
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from vfarm import __version__
from vfarm.utils.errors import InputDataError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.10g'


def stamp(config_hash: Optional[str], **extra: Any) -> dict[str, Any]:
    meta = {'tool': 'vfarm', 'version': __version__, 'config_hash': config_hash}
    meta.update(extra)
    return meta


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        # Pas d'infini en JSON ; on garde un sens lisible
        return 'inf' if value > 0 else ('-inf' if value < 0 else 'nan')
    if hasattr(value, 'model_dump'):
        return _jsonable(value.model_dump(mode='json'))
    return value


def write_table(frame: pd.DataFrame, path, metadata: dict[str, Any]) -> Path:
    """Texte délimité avec des lignes d'en-tête '# clé: valeur'"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        for key in sorted(metadata):
            handle.write(f'# {key}: {metadata[key]}\n')
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.debug(f'Wrote {len(frame)} rows to {path}')
    return path


def write_json(payload: Any, path, metadata: dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {'metadata': _jsonable(metadata), 'data': _jsonable(payload)}
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(document, handle, indent=2, sort_keys=True)
        handle.write('\n')
    return path


def read_table(path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise InputDataError(f'File not found: {path}', path=str(path))
    try:
        return pd.read_csv(path, comment='#', sep=None, engine='python')
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputDataError(f'Cannot parse {path}: {e}', path=str(path))


def read_json(path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise InputDataError(f'File not found: {path}', path=str(path))
    try:
        with open(path, encoding='utf-8') as handle:
            return json.load(handle)
    except json.JSONDecodeError as e:
        raise InputDataError(f'Invalid JSON in {path}: {e}', path=str(path))
