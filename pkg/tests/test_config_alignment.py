"""Vérifie que la configuration du processus expose les clés lues par les services."""

from vfarm import config
from vfarm.models.optics import BAND_EDGES


def test_optics_config_has_keys_read_by_the_tracer():
    for key in ('ray_count', 'chunk_size', 'bounce_cap', 'altitude_grid', 'flux_map_pitch'):
        assert key in config.OPTICS_CONFIG, f'Missing key in OPTICS_CONFIG: {key}'


def test_band_edges_live_with_the_table_model_only():
    assert 'band_edges' not in config.OPTICS_CONFIG
    assert BAND_EDGES == tuple(range(10, 100, 10))


def test_run_config_defaults():
    assert set(config.RUN_CONFIG) == {'workers'}
    assert config.RUN_CONFIG['workers'] >= 1


def test_altitude_grid_spans_the_sky():
    grid = config.OPTICS_CONFIG['altitude_grid']
    assert grid[0] == 5 and grid[-1] == 90


def test_shipped_data_and_configs_exist():
    assert config.PATHS['default_lue_table'].exists()
    assert (config.CONFIGS_DIR / 'common.yaml').exists()
    assert (config.CONFIGS_DIR / 'bench.yaml').exists()
