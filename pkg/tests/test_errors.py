"""Enregistrements d'erreur, codes de sortie et utilitaires de log."""

import logging

import pytest
from pydantic import BaseModel, Field, ValidationError

from vfarm.utils.errors import (
    EXIT_CALIBRATION,
    EXIT_CONFIG,
    EXIT_INPUT,
    EXIT_UNEXPECTED,
    CalibrationMismatchError,
    ConfigValidationError,
    InputDataError,
    error_record,
    exit_code_for,
    from_pydantic,
)
from vfarm.utils.logging_config import TRACE, PerformanceLogger, verbosity_to_level


class _Pipes(BaseModel):
    n_pipes: int = Field(ge=0)


def _validation_error():
    with pytest.raises(ValidationError) as err:
        _Pipes(n_pipes=-3)
    return err.value


def test_pydantic_errors_keep_the_field_path():
    wrapped = from_pydantic(_validation_error(), prefix='scenario')
    assert isinstance(wrapped, ConfigValidationError)
    assert wrapped.details['field'] == 'scenario.n_pipes'
    assert wrapped.exit_code == EXIT_CONFIG
    assert len(wrapped.details['errors']) == 1


def test_error_record_for_a_known_error():
    record = error_record(InputDataError('bad row', path='climate.csv', row=12))
    assert record == {
        'success': False,
        'error': 'bad row',
        'exit_code': EXIT_INPUT,
        'details': {'path': 'climate.csv', 'row': 12},
    }


def test_error_record_hides_unexpected_errors():
    record = error_record(KeyError('oops'))
    assert record['error'] == 'Internal error'
    assert record['details']['type'] == 'KeyError'
    assert exit_code_for(KeyError('oops')) == EXIT_UNEXPECTED


def test_exit_codes_follow_the_exception():
    assert exit_code_for(CalibrationMismatchError()) == EXIT_CALIBRATION
    assert exit_code_for(ConfigValidationError(field='x')) == EXIT_CONFIG


@pytest.mark.parametrize(
    'verbosity, level',
    [(0, logging.WARNING), (1, logging.INFO), (2, logging.DEBUG), (3, TRACE)],
)
def test_verbosity_levels(verbosity, level):
    assert verbosity_to_level(verbosity) == level


def test_performance_logger(caplog):
    perf = PerformanceLogger(logging.getLogger('vfarm.test'), prefix='t:')
    assert perf.end('never') is None
    perf.start('step')
    with caplog.at_level(logging.INFO, logger='vfarm.test'):
        elapsed = perf.end('step')
    assert elapsed >= 0
    assert 'step completed' in caplog.text
