"""
Configuration centralisée des logs du simulateur
"""

import logging
import logging.handlers
import os
import time
from pathlib import Path

# Niveau très détaillé pour suivre le moteur heure par heure
TRACE = 5
logging.addLevelName(TRACE, 'TRACE')


def trace(self, message, *args, **kwargs):
    """Méthode de log au niveau TRACE"""
    if self.isEnabledFor(TRACE):
        self._log(TRACE, message, args, **kwargs)


logging.Logger.trace = trace  # type: ignore[attr-defined]

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def verbosity_to_level(verbosity: int) -> int:
    """Convertit l'option -v répétable en niveau de log"""
    if verbosity <= 0:
        return logging.WARNING
    if verbosity == 1:
        return logging.INFO
    if verbosity == 2:
        return logging.DEBUG
    return TRACE


def setup_logging(
    log_level=logging.INFO, log_to_console=True, log_to_file=False, log_dir=None
):
    """Configuration globale des logs du simulateur"""
    logger = logging.getLogger()
    logger.setLevel(log_level)

    # Supprime les handlers existants pour éviter les doublons entre appels CLI
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    formatter = logging.Formatter(LOG_FORMAT, datefmt='%Y-%m-%d %H:%M:%S')

    if log_to_console:
        # stderr laisse stdout libre pour les rapports
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        console_handler.setLevel(log_level)
        logger.addHandler(console_handler)

    if log_to_file:
        if log_dir is None:
            log_dir = Path(__file__).resolve().parent.parent.parent / 'logs'
        os.makedirs(log_dir, exist_ok=True)

        file_handler = logging.handlers.RotatingFileHandler(
            Path(log_dir) / 'vfarm.log',
            maxBytes=10 * 1024 * 1024,
            backupCount=10,
            encoding='utf-8',
        )
        file_handler.setFormatter(formatter)
        file_handler.setLevel(log_level)
        logger.addHandler(file_handler)

    configure_library_logging()
    return logger


def configure_library_logging():
    """Réduit les loggers tiers trop bavards"""
    logging.getLogger('joblib').setLevel(logging.WARNING)
    logging.getLogger('numexpr').setLevel(logging.WARNING)
    logging.getLogger('sqlalchemy.engine').setLevel(logging.WARNING)


class PerformanceLogger:
    """Chronomètre les étapes coûteuses et logue les secondes écoulées"""

    def __init__(self, logger, prefix=''):
        self.logger = logger
        self.prefix = prefix
        self.start_times: dict[str, float] = {}

    def start(self, operation):
        operation_key = f'{self.prefix}{operation}'
        self.start_times[operation_key] = time.perf_counter()
        self.logger.debug(f'Starting: {operation}')

    def end(self, operation, success=True):
        """Arrête le chrono et logue la durée ; renvoie les secondes écoulées"""
        operation_key = f'{self.prefix}{operation}'
        if operation_key not in self.start_times:
            self.logger.warning(f'Tried to end an operation never started: {operation}')
            return None

        elapsed = time.perf_counter() - self.start_times.pop(operation_key)
        status = 'completed' if success else 'failed'
        self.logger.info(f'{operation} {status} in {elapsed:.3f}s')
        return elapsed
