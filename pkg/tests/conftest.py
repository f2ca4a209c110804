"""Fixtures partagées : une année synthétique, une table optique faite main et des scénarios."""

import numpy as np
import pytest

from vfarm.config import PATHS
from vfarm.models.climate import SiteConfig
from vfarm.models.optics import BAND_EDGES, LpGeometry, OpticalEfficiencyTable
from vfarm.models.scenario import ScenarioConfig
from vfarm.services.climate_service import climate_service
from vfarm.services.crop_service import crop_service
from vfarm.services.engine import engine
from vfarm.services.optics_service import optics_service

ALTITUDES = [float(a) for a in range(5, 95, 5)]


def build_table() -> OpticalEfficiencyTable:
    """Table lisse de même allure qu'une table tracée : le direct culmine vers 50 deg"""
    alt = np.asarray(ALTITUDES)
    eta_dir = 0.25 + 0.40 * np.exp(-(((alt - 50.0) / 30.0) ** 2))
    n_bands = len(BAND_EDGES)
    th = np.tile(np.linspace(0.60, 0.50, n_bands), (len(alt), 1))
    crop = th * 0.6
    zeros = np.zeros_like(th).tolist()
    return OpticalEfficiencyTable(
        altitudes=ALTITUDES,
        eta_dir=eta_dir.tolist(),
        eta_dir_stderr=[0.0] * len(alt),
        eta_diff_th=th.tolist(),
        eta_diff_crop=crop.tolist(),
        eta_diff_th_stderr=zeros,
        eta_diff_crop_stderr=zeros,
        provenance='imported',
    )


@pytest.fixture(scope='session')
def site():
    return SiteConfig()


@pytest.fixture(scope='session')
def climate(site):
    return climate_service.synthetic_climate(site)


@pytest.fixture(scope='session')
def geometry():
    return LpGeometry()


@pytest.fixture(scope='session')
def efficiency_table():
    return build_table()


@pytest.fixture(scope='session')
def lue_table():
    return crop_service.load_lue_table(PATHS['default_lue_table'])


@pytest.fixture(scope='session')
def table_stem(tmp_path_factory, efficiency_table):
    stem = tmp_path_factory.mktemp('optics') / 'fixture'
    optics_service.export_table(efficiency_table, stem)
    return stem


@pytest.fixture(scope='session')
def make_config(table_stem):
    """Fabrique de ScenarioConfig ; les scénarios à conduits lisent la table de test"""

    def factory(scenario, **updates):
        document = {
            'scenario': scenario,
            'lue_table': str(PATHS['default_lue_table']),
            'optics': {'table_source': 'imported', 'table_path': str(table_stem)},
        }
        if scenario in ('LP_Dim_IR_98', 'LP_Dim_IR_90'):
            tau = 0.98 if scenario.endswith('98') else 0.90
            document['lighting'] = {'control': {'ir_transmittance': tau}}
        document.update(updates)
        return ScenarioConfig.model_validate(document)

    return factory


@pytest.fixture(scope='session')
def run(make_config, climate, efficiency_table):
    """Simulations annuelles mémorisées par nom de stratégie"""
    cache = {}

    def runner(scenario, **updates):
        key = (scenario, repr(sorted(updates.items())))
        if key not in cache:
            config = make_config(scenario, **updates)
            table = efficiency_table if config.scenario.has_light_pipes else None
            cache[key] = (config, engine.run_scenario(config, climate, table))
        return cache[key]

    return runner
