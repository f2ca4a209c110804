"""
Configuration au niveau du processus pour le simulateur de ferme verticale.

Les paramètres de scénario sont dans les fichiers YAML de ``configs/`` ; ce module
ne garde que ce qui varie selon la machine ou l'appel (chemins, logs, nombre de
processus, nombre de rayons), lu dans l'environnement ou un fichier ``.env``.
"""

from pathlib import Path

from decouple import config

# Chemins de base
BASE_DIR = Path(__file__).resolve().parent
PROJECT_DIR = BASE_DIR.parent
DATA_DIR = Path(config('VFARM_DATA_DIR', default=str(PROJECT_DIR / 'data')))
CONFIGS_DIR = PROJECT_DIR / 'configs'
CACHE_DB_PATH = Path(
    config('VFARM_CACHE_DB', default=str(DATA_DIR / 'optics_cache.db'))
)

PATHS = {
    'data_dir': DATA_DIR,
    'configs_dir': CONFIGS_DIR,
    'cache_db': CACHE_DB_PATH,
    'log_dir': Path(config('VFARM_LOG_DIR', default=str(PROJECT_DIR / 'logs'))),
    'default_lue_table': DATA_DIR / 'lue_lettuce.csv',
}

# Logging
LOG_CONFIG = {
    'level': config('VFARM_LOG_LEVEL', default='INFO'),
    'to_file': config('VFARM_LOG_TO_FILE', default=False, cast=bool),
    'max_bytes': 10 * 1024 * 1024,
    'backup_count': 10,
}

# Traceur Monte Carlo (valeurs utilisées quand le scénario ne les remplace pas)
OPTICS_CONFIG = {
    'ray_count': config('VFARM_RAY_COUNT', default=100_000, cast=int),
    'chunk_size': config('VFARM_RAY_CHUNK', default=25_000, cast=int),
    'bounce_cap': 50,
    'altitude_grid': list(range(5, 95, 5)),
    'flux_map_pitch': 0.01,
}

# Simulations annuelles et balayages
RUN_CONFIG = {
    'workers': config('VFARM_WORKERS', default=1, cast=int),
}

