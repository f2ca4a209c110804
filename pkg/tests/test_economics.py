"""Coût de la lumière, temps de retour, sensibilité et indicateurs sur des résultats faits main."""

import math

import numpy as np
import pandas as pd
import pytest

from vfarm.models.economics import CostTable, SweepGrid
from vfarm.models.optics import LpGeometry
from vfarm.models.scenario import RunMetadata, ScenarioConfig, SimulationResult
from vfarm.services.economics_service import FIBER_LABEL, economics_service


def make_result(
    scenario,
    electricity_mwh,
    hvac_w,
    yield_kg=1000.0,
    tier3_w=2500.0,
    harvested_mwh=0.0,
):
    """Un jour de lignes horaires portant les totaux annuels"""
    hours = 24

    def per_hour(mwh):
        return np.full(hours, mwh * 1e6 / hours)

    ppfd = np.where(np.arange(hours) < 16, 250.0, 0.0)
    hourly = pd.DataFrame(
        {
            'p_electric': per_hour(electricity_mwh),
            'p_led': per_hour(electricity_mwh / 2),
            'p_led_tier3': per_hour(electricity_mwh / 6),
            'p_led_tier12': per_hour(electricity_mwh / 3),
            'p_cooling': per_hour(electricity_mwh / 2),
            'p_heating': np.zeros(hours),
            'q_lp_sol': per_hour(harvested_mwh),
            'ppfd_tier1': ppfd,
            'ppfd_tier2': ppfd,
            'ppfd_tier3': ppfd,
        }
    )
    return SimulationResult(
        metadata=RunMetadata(scenario=scenario, config_hash='0' * 64, seed=1, version='test'),
        hourly=hourly,
        yield_raw_kg=yield_kg,
        yield_kg=yield_kg,
        hvac_nominal_w=hvac_w,
        lighting_nominal_w=3 * tier3_w,
        tier3_nominal_w=tier3_w,
        net_water_l=2000.0,
    )


@pytest.fixture
def bench():
    return ScenarioConfig(scenario='Bench'), make_result('Bench', 100.0, 10_000.0)


@pytest.fixture
def lp_dim():
    return ScenarioConfig(scenario='LP_Dim'), make_result('LP_Dim', 80.0, 12_000.0)


def test_light_cost_table():
    rows = {
        r.system: r for r in economics_service.light_cost_table(CostTable(), LpGeometry())
    }
    for name in ('LP_NL', 'LP_Min', 'LP_Dim'):
        assert rows[name].light_cost == pytest.approx(12.045, rel=2e-3)
    assert rows['LP_Dim_IR'].light_cost == pytest.approx(16.552, rel=2e-3)
    assert rows['LP_Dim_EC'].light_cost == pytest.approx(25.0, rel=1e-6)
    assert rows[FIBER_LABEL].flux == pytest.approx(167.14, rel=0.01)
    assert rows[FIBER_LABEL].light_cost == pytest.approx(19.529, rel=2e-3)


def test_light_cost_row_follows_the_scenario():
    rows = economics_service.light_cost_table(CostTable(), LpGeometry())
    ir = ScenarioConfig(
        scenario='LP_Dim_IR_90', lighting={'control': {'ir_transmittance': 0.90}}
    )
    assert economics_service.light_cost_row(ir, rows).system == 'LP_Dim_IR'
    lp_min = ScenarioConfig(scenario='LP_Min_250')
    assert economics_service.light_cost_row(lp_min, rows).system == 'LP_Min'
    assert economics_service.scenario_light_cost(ScenarioConfig(scenario='GH'), rows) is None


def test_break_even_against_fiber():
    rows = {
        r.system: r for r in economics_service.light_cost_table(CostTable(), LpGeometry())
    }
    unit = economics_service.break_even_for_light_cost(
        rows[FIBER_LABEL].light_cost, rows['LP_Dim'].flux
    )
    assert unit >= 480.0
    with pytest.raises(ValueError):
        economics_service.light_cost(100.0, 0.0)


def test_scenario_capex(lp_dim, bench):
    config, result = lp_dim
    capex = economics_service.scenario_capex(config, result)
    assert capex.light_pipes == pytest.approx(750 * 300.0)
    assert capex.tier3_led == pytest.approx(2500.0 * 4.5208, rel=1e-4)
    assert capex.hvac == pytest.approx(12_000.0 * 0.65)
    bench_capex = economics_service.scenario_capex(*bench)
    assert bench_capex.light_pipes == 0.0


def test_payback_time(lp_dim, bench):
    pbt = economics_service.payback_time(*lp_dim, *bench)
    assert pbt.delta_capex == pytest.approx(226_300.0, rel=1e-4)
    assert pbt.annual_savings == pytest.approx(7_800.0)
    assert pbt.years == pytest.approx(29.01, abs=0.01)
    assert pbt.viable
    assert pbt.scenario == 'LP_Dim'


def test_required_capex_reduction(lp_dim, bench):
    share = economics_service.required_capex_reduction(*lp_dim, *bench, target_years=10.0)
    assert share == pytest.approx(0.659, abs=1e-3)
    assert economics_service.required_capex_reduction(*lp_dim, *bench, target_years=40.0) == 0.0


def test_payback_edge_cases():
    costs = CostTable()
    cheaper = economics_service.payback_from_deltas(-5.0, 1.0, 0.0, costs)
    assert cheaper.years == 0.0 and cheaper.viable
    worse = economics_service.payback_from_deltas(1000.0, -2.0, 0.0, costs)
    assert math.isinf(worse.years)
    assert not worse.viable


def test_losing_scenario_has_no_capex_target(bench):
    config = ScenarioConfig(scenario='LP_NL')
    result = make_result('LP_NL', 120.0, 12_000.0)
    pbt = economics_service.payback_time(config, result, *bench)
    assert not pbt.viable
    assert economics_service.required_capex_reduction(
        config, result, *bench, target_years=10.0
    ) is None


def test_yield_gain_counts_as_revenue(bench):
    config = ScenarioConfig(scenario='LP_Dim')
    result = make_result('LP_Dim', 100.0, 10_000.0, yield_kg=1100.0)
    pbt = economics_service.payback_time(config, result, *bench)
    assert pbt.annual_savings == pytest.approx(100.0 * 7.82)


def test_break_even_unit_cost_hits_the_target(lp_dim, bench):
    costs = CostTable()
    unit = economics_service.break_even_unit_cost(*lp_dim, *bench, costs, 10.0)
    # 10 ans x 7800 $ couvrent 750 conduits à (unitaire + 90) $ plus l'écart CVC
    assert unit == pytest.approx((78_000.0 - 1_300.0) / 750 - 90.0, rel=1e-4)
    cheap_power = costs.model_copy(update={'electricity_price': 150.0, 'carbon_price': 0.0})
    unit = economics_service.break_even_unit_cost(*lp_dim, *bench, cheap_power, 10.0)
    assert math.isnan(unit)


def test_sensitivity_sweep_reprices_every_combination(lp_dim, bench):
    grid = SweepGrid(
        electricity_prices=[250.0, 350.0],
        carbon_prices=[0.0, 100.0],
        lp_unit_costs=[100.0, 210.0, 300.0],
    )
    surface, break_even = economics_service.sensitivity_sweep(*lp_dim, *bench, grid)
    assert len(surface) == 12
    assert len(break_even) == 4
    default = surface[
        (surface.electricity_price == 350.0)
        & (surface.carbon_price == 100.0)
        & (surface.lp_unit_cost == 210.0)
    ]
    assert default['payback_years'].iloc[0] == pytest.approx(29.01, abs=0.01)
    # Des conduits plus chers ne se remboursent jamais plus vite
    for _, group in surface.groupby(['electricity_price', 'carbon_price']):
        assert group.sort_values('lp_unit_cost')['payback_years'].is_monotonic_increasing


def test_kpis(bench):
    _, result = bench
    kpi = economics_service.kpis(result, sec_extra_mwh=10.0)
    assert kpi.electricity_mwh == pytest.approx(100.0)
    assert kpi.seec == pytest.approx(100.0)
    assert kpi.sec == pytest.approx(110.0)
    assert kpi.mean_dli_tier3 == pytest.approx(14.4)
    assert kpi.wue == pytest.approx(1000.0 * 1000.0 / 2000.0)
    assert kpi.lighting_nominal_kw == pytest.approx(7.5)


def test_kpis_count_harvested_daylight():
    result = make_result('LP_Dim', 80.0, 12_000.0, harvested_mwh=20.0)
    kpi = economics_service.kpis(result)
    assert kpi.sec == pytest.approx(100.0)
    assert kpi.seec == pytest.approx(80.0)
    assert kpi.total_lighting_energy == pytest.approx(60.0)


def test_zero_yield_leaves_per_kg_kpis_undefined():
    kpi = economics_service.kpis(make_result('LP_NL', 50.0, 5_000.0, yield_kg=0.0))
    assert not kpi.yield_defined
    assert kpi.sec is None and kpi.seec is None and kpi.wue is None


def test_ppe_table_has_one_column_per_efficacy():
    runs = [
        (
            ScenarioConfig(scenario='Bench', lighting={'ppe': ppe}),
            make_result('Bench', mwh, 10_000.0),
        )
        for ppe, mwh in ((2.0, 150.0), (3.0, 100.0))
    ]
    table = economics_service.ppe_table(runs)
    assert list(table.columns) == ['metric', 'PPE 2', 'PPE 3']
    seec = table.set_index('metric').loc['seec']
    assert seec['PPE 2'] > seec['PPE 3']
