"""Surface en ligne de commande : codes de sortie, enregistrements d'erreur et commandes."""

import json

import numpy as np
import pytest
import yaml

from vfarm.cli import main
from vfarm.config import CONFIGS_DIR, OPTICS_CONFIG, PATHS
from vfarm.database import get_engine
from vfarm.models.climate import SiteConfig
from vfarm.models.scenario import CalibrationArtifact
from vfarm.services.calibration_service import calibration_service
from vfarm.services.climate_service import climate_service
from vfarm.utils.errors import (
    EXIT_CALIBRATION,
    EXIT_CONFIG,
    EXIT_INPUT,
    EXIT_OK,
    EXIT_SIMULATION,
    EXIT_USAGE,
)

slow = pytest.mark.slow


def _record(captured):
    return json.loads(captured.err.strip().splitlines()[-1])


def _report(captured):
    return json.loads(captured.out)


@pytest.fixture
def write_config(tmp_path, table_stem):
    """Fichiers de scénario au-dessus des réglages communs livrés, lisant la table de test"""

    def writer(name, scenario='Bench', **document):
        body = {
            'include': [str(CONFIGS_DIR / 'common.yaml')],
            'scenario': scenario,
            'optics': {'table_source': 'imported', 'table_path': str(table_stem)},
            **document,
        }
        path = tmp_path / name
        path.write_text(yaml.safe_dump(body), encoding='utf-8')
        return path

    return writer


@pytest.fixture
def write_set(tmp_path):
    def writer(name, **document):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(document), encoding='utf-8')
        return path

    return writer


@pytest.fixture
def cache_db(tmp_path, monkeypatch):
    """Cache optique dans un fichier jetable"""
    monkeypatch.setitem(PATHS, 'cache_db', tmp_path / 'cache.db')
    get_engine.cache_clear()
    yield tmp_path / 'cache.db'
    get_engine.cache_clear()


def test_no_arguments_prints_usage(capsys):
    assert main([]) == EXIT_USAGE
    assert 'usage' in capsys.readouterr().err


def test_unknown_command_is_a_usage_error(capsys):
    assert main(['grow-faster']) == EXIT_USAGE
    record = _record(capsys.readouterr())
    assert record['success'] is False
    assert record['exit_code'] == EXIT_USAGE


def test_unknown_strategy_is_a_usage_error(capsys, tmp_path):
    assert main(['simulate', '--scenario', 'LP_Max', '--out', str(tmp_path)]) == EXIT_USAGE
    assert 'usage' in _record(capsys.readouterr())['details']


def test_missing_config_is_an_input_error(capsys, tmp_path):
    code = main(['simulate', '--config', str(tmp_path / 'absent.yaml'), '--out', str(tmp_path)])
    assert code == EXIT_INPUT
    record = _record(capsys.readouterr())
    assert record['details']['path'].endswith('absent.yaml')


def test_sunpath_writes_the_table(capsys, tmp_path):
    assert main(['sunpath', '--out', str(tmp_path)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['success']
    assert (tmp_path / 'sunpath.csv').exists()
    assert report['declination_max'] > 23.0


def test_synth_climate_writes_a_full_year(capsys, tmp_path):
    assert main(['synth-climate', '--out', str(tmp_path)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['roof_solar_kwh'] > 0
    lines = (tmp_path / 'climate.csv').read_text(encoding='utf-8').splitlines()
    data = [line for line in lines if not line.startswith('#')]
    assert len(data) == 8760 + 1


def test_too_few_rays_is_a_config_error(capsys, tmp_path):
    code = main(['trace-optics', '--rays', '500', '--out', str(tmp_path)])
    assert code == EXIT_CONFIG
    record = _record(capsys.readouterr())
    assert record['exit_code'] == EXIT_CONFIG
    assert 'ray_count' in record['details']['field']
    assert not (tmp_path / 'optics_direct.csv').exists()


def test_missing_lue_table_is_an_input_error(capsys, tmp_path, write_config):
    config = write_config('bench.yaml', lue_table=str(tmp_path / 'absent_lue.csv'))
    assert main(['simulate', '--config', str(config), '--out', str(tmp_path)]) == EXIT_INPUT
    assert _record(capsys.readouterr())['details']['path'].endswith('absent_lue.csv')


def test_non_finite_climate_file_is_a_simulation_error(capsys, tmp_path, write_config):
    series = climate_service.synthetic_climate(SiteConfig()).with_values(t_ext=np.inf)
    climate_path = climate_service.write_climate(series, tmp_path / 'climate.csv')
    config = write_config('bench.yaml', climate={'source': 'file', 'path': str(climate_path)})
    out = tmp_path / 'out'
    assert main(['simulate', '--config', str(config), '--out', str(out)]) == EXIT_SIMULATION
    record = _record(capsys.readouterr())
    assert record['details']['hour'] == 0
    assert not out.exists()


def test_mixed_calibrations_in_a_set_are_refused(capsys, tmp_path, write_config, write_set):
    artifact = CalibrationArtifact(
        factor=1.1,
        target_kg=9221.0,
        achieved_kg=9221.0,
        benchmark_hash='0' * 64,
        lue_table='lue_lettuce.csv',
        version='test',
    )
    path = calibration_service.save(artifact, tmp_path / 'calibration.json')
    write_config('bench.yaml')
    write_config('lp_dim.yaml', scenario='LP_Dim', calibration=str(path))
    set_file = write_set('set.yaml', scenarios=['bench.yaml', 'lp_dim.yaml'])
    out = tmp_path / 'out'
    assert main(['compare', '--config', str(set_file), '--out', str(out)]) == EXIT_CALIBRATION
    record = _record(capsys.readouterr())
    assert record['details']['calibration']['LP_Dim'] == artifact.fingerprint()
    assert record['details']['calibration']['Bench'] is None
    assert not (out / 'comparison.csv').exists()


def test_sweep_without_benchmark_is_a_usage_error(capsys, tmp_path, write_config, write_set):
    write_config('lp_dim.yaml', scenario='LP_Dim')
    set_file = write_set('sweep.yaml', scenarios=['lp_dim.yaml'])
    assert main(['sweep', '--config', str(set_file), '--out', str(tmp_path)]) == EXIT_USAGE
    assert 'benchmark' in _record(capsys.readouterr())['error']


@slow
def test_simulate_writes_the_run(capsys, tmp_path, write_config):
    config = write_config('lp_dim.yaml', scenario='LP_Dim')
    out = tmp_path / 'out'
    assert main(['simulate', '--config', str(config), '--out', str(out)]) == EXIT_OK
    report = _report(capsys.readouterr())
    assert report['success']
    assert len(report['files']) == 5
    assert all((out / name).exists() for name in ('LP_Dim_hourly.csv', 'LP_Dim_summary.json'))
    assert report['kpis']['scenario'] == 'LP_Dim'
    assert report['kpis']['yield_kg'] > 0
    assert report['kpis']['harvested_daylight_mwh'] > 0


@slow
def test_simulate_picks_the_strategy_from_the_command_line(capsys, tmp_path, write_config):
    config = write_config('bench.yaml')
    out = tmp_path / 'out'
    code = main(
        ['simulate', '--config', str(config), '--scenario', 'LP_NL', '--out', str(out)]
    )
    assert code == EXIT_OK
    assert _report(capsys.readouterr())['kpis']['tier3_lighting_mwh'] == 0.0
    assert (out / 'LP_NL_hourly.csv').exists()


@slow
def test_calibrate_then_compare(capsys, tmp_path, write_config, write_set):
    bench = write_config('bench.yaml')
    write_config('lp_dim.yaml', scenario='LP_Dim')
    cal_dir = tmp_path / 'cal'
    assert main(['calibrate', '--config', str(bench), '--out', str(cal_dir)]) == EXIT_OK
    calibration = _report(capsys.readouterr())
    assert (cal_dir / 'calibration.json').exists()
    assert calibration['achieved_kg'] == pytest.approx(9221.0, rel=0.02)

    set_file = write_set(
        'set.yaml', scenarios=['bench.yaml', 'lp_dim.yaml'], ppe_variants=[2.0, 3.0]
    )
    out = tmp_path / 'out'
    code = main(
        [
            'compare',
            '--config',
            str(set_file),
            '--calibration',
            str(cal_dir / 'calibration.json'),
            '--out',
            str(out),
        ]
    )
    assert code == EXIT_OK
    assert _report(capsys.readouterr())['rows'] == 2
    for name in ('comparison.csv', 'comparison.json', 'light_cost.csv', 'ppe_table.csv'):
        assert (out / name).exists()
    assert (out / 'scenarios' / 'LP_Dim_summary.json').exists()
    rows = json.loads((out / 'comparison.json').read_text(encoding='utf-8'))['data']
    assert {row['scenario'] for row in rows} == {'Bench', 'LP_Dim'}


@slow
def test_sweep_writes_surfaces_and_summary(capsys, tmp_path, write_config, write_set):
    write_config('bench.yaml')
    write_config('lp_dim.yaml', scenario='LP_Dim')
    set_file = write_set(
        'sweep.yaml',
        benchmark='bench.yaml',
        scenarios=['lp_dim.yaml'],
        overrides={
            'sweep': {
                'electricity_prices': [250, 450],
                'carbon_prices': [0, 100],
                'lp_unit_costs': [100, 210],
            }
        },
    )
    out = tmp_path / 'out'
    assert main(['sweep', '--config', str(set_file), '--out', str(out)]) == EXIT_OK
    assert _report(capsys.readouterr())['scenarios'] == ['LP_Dim']
    assert (out / 'sweep_LP_Dim_surface.csv').exists()
    assert (out / 'sweep_LP_Dim_break_even.csv').exists()
    assert (out / 'sweep_summary.json').exists()


@slow
def test_trace_optics_writes_tables_and_flux_maps(capsys, tmp_path, monkeypatch, cache_db):
    monkeypatch.setitem(OPTICS_CONFIG, 'altitude_grid', [30.0, 60.0])
    out = tmp_path / 'out'
    code = main(
        ['trace-optics', '--rays', '10000', '--flux-altitudes', '50', '--out', str(out)]
    )
    assert code == EXIT_OK
    report = _report(capsys.readouterr())
    assert 0.0 < report['max_eta_dir'] <= 1.0
    assert (out / 'optics_direct.csv').exists()
    assert (out / 'optics_diffuse.csv').exists()
    assert (out / 'flux_map_alt50.csv').exists()
    assert cache_db.exists()
