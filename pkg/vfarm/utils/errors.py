"""
Exceptions du simulateur et leur conversion en enregistrements lisibles par machine
"""

import logging
from typing import Any

from pydantic import ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_INPUT = 4
EXIT_SIMULATION = 5
EXIT_CALIBRATION = 6


class VFarmException(Exception):
    """Exception de base du simulateur"""

    def __init__(self, message='An error occurred', exit_code=EXIT_UNEXPECTED, details=None):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class UsageError(VFarmException):
    """Levée pour une sous-commande inconnue ou des arguments manquants"""

    def __init__(self, message='Invalid usage', details=None):
        super().__init__(message, exit_code=EXIT_USAGE, details=details)


class ConfigValidationError(VFarmException):
    """Levée quand une valeur de configuration est invalide"""

    def __init__(self, message='Invalid configuration', field=None, error=None):
        super().__init__(
            message, exit_code=EXIT_CONFIG, details={'field': field, 'error': error}
        )


class InputDataError(VFarmException):
    """Levée quand un fichier d'entrée manque ou que son contenu est invalide"""

    def __init__(self, message='Invalid input data', path=None, row=None, details=None):
        super().__init__(
            message,
            exit_code=EXIT_INPUT,
            details={'path': path, 'row': row, **(details or {})},
        )
        self.row = row


class SimulationError(VFarmException):
    """Levée quand la boucle horaire produit une valeur non finie"""

    def __init__(self, message='Simulation fault', hour=None, details=None):
        super().__init__(
            message,
            exit_code=EXIT_SIMULATION,
            details={'hour': hour, **(details or {})},
        )
        self.hour = hour


class CalibrationMismatchError(VFarmException):
    """Levée quand on compare des résultats calibrés différemment"""

    def __init__(self, message='Mixed calibration states', details=None):
        super().__init__(message, exit_code=EXIT_CALIBRATION, details=details)


def from_pydantic(exc: ValidationError, prefix: str = '') -> ConfigValidationError:
    """Traduit une ValidationError pydantic en ConfigValidationError"""
    errors = []
    for error in exc.errors():
        field = '.'.join([str(loc) for loc in error['loc']])
        if prefix:
            field = f'{prefix}.{field}' if field else prefix
        errors.append({'field': field, 'message': error['msg'], 'type': error['type']})

    first = errors[0] if errors else {'field': prefix, 'message': str(exc)}
    wrapped = ConfigValidationError(
        f"Invalid value for '{first['field']}': {first['message']}",
        field=first['field'],
        error=first['message'],
    )
    wrapped.details['errors'] = errors
    return wrapped


def error_record(exc: BaseException) -> dict[str, Any]:
    """Construit l'enregistrement d'erreur JSON écrit par la CLI"""
    if isinstance(exc, VFarmException):
        logger.error(f'{exc.__class__.__name__}: {exc.message} - {exc.details}')
        return {
            'success': False,
            'error': exc.message,
            'exit_code': exc.exit_code,
            'details': exc.details,
        }

    logger.exception(f'Unhandled exception: {str(exc)}')
    return {
        'success': False,
        'error': 'Internal error',
        'exit_code': EXIT_UNEXPECTED,
        'details': {'type': exc.__class__.__name__, 'message': str(exc)},
    }


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, VFarmException):
        return exc.exit_code
    return EXIT_UNEXPECTED
