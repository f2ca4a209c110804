"""
Indicateurs, coût de la lumière, temps de retour et sensibilité aux prix
"""

import logging
import math
from itertools import product
from typing import Optional

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from vfarm.models.economics import (
    CapexBreakdown,
    CostTable,
    KpiReport,
    LightCostRow,
    PaybackResult,
    SweepGrid,
)
from vfarm.models.lighting import Strategy
from vfarm.models.optics import LpGeometry
from vfarm.models.scenario import ScenarioConfig, SimulationResult
from vfarm.services.lighting_service import lighting_service
from vfarm.services.optics_service import PAR_PPF_PER_WATT, optics_service

logger = logging.getLogger(__name__)

FIBER_LABEL = 'Optical fiber'


class EconomicsService:
    """Service pour le post-traitement technico-économique des simulations annuelles"""

    def kpis(self, result: SimulationResult, sec_extra_mwh: float = 0.0) -> KpiReport:
        electricity = result.annual('p_electric')
        lighting = result.annual('p_led')
        harvested = result.annual('q_lp_sol')
        yield_kg = result.yield_kg
        defined = yield_kg > 0
        if not defined:
            logger.warning(f'{result.metadata.scenario}: zero yield, per-kg KPIs undefined')

        def per_kg(mwh: float) -> Optional[float]:
            return mwh * 1000.0 / yield_kg if defined else None

        wue = None
        if defined and result.net_water_l > 0:
            wue = yield_kg * 1000.0 / result.net_water_l

        return KpiReport(
            scenario=result.metadata.scenario,
            yield_kg=yield_kg,
            yield_defined=defined,
            electricity_mwh=electricity,
            lighting_mwh=lighting,
            tier3_lighting_mwh=result.annual('p_led_tier3'),
            tier12_lighting_mwh=result.annual('p_led_tier12'),
            cooling_mwh=result.annual('p_cooling'),
            heating_mwh=result.annual('p_heating'),
            harvested_daylight_mwh=harvested,
            sec=per_kg(electricity + harvested + sec_extra_mwh),
            seec=per_kg(electricity),
            total_lighting_energy=per_kg(lighting + harvested),
            wue=wue,
            net_water_l=result.net_water_l,
            mean_dli_tier3=float(np.mean(result.daily_dli())),
            lighting_nominal_kw=result.lighting_nominal_w / 1000.0,
            hvac_nominal_kw=result.hvac_nominal_w / 1000.0,
        )

    # Coût de la lumière

    def light_cost(self, capex: float, flux: float) -> float:
        """Coût d'investissement par unité de flux de photons délivré [$ (umol s-1)-1]"""
        if flux <= 0:
            raise ValueError('delivered flux must be positive')
        return capex / flux

    def fiber_flux(self, costs: CostTable) -> float:
        """lm -> W -> umol s-1 pour la référence à fibre optique"""
        return costs.fiber_lumens / costs.luminous_efficacy * PAR_PPF_PER_WATT

    def light_cost_table(
        self, costs: CostTable, geom: LpGeometry, ir_transmittance: float = 0.98
    ) -> list[LightCostRow]:
        base = optics_service.reference_flux_per_pipe(
            geom, dni_ref=costs.reference_dni, eta_ref=costs.reference_efficiency
        )
        filtered = optics_service.reference_flux_per_pipe(
            geom,
            dni_ref=costs.reference_dni,
            eta_ref=costs.reference_efficiency,
            transmission=ir_transmittance,
        )
        capped = optics_service.reference_flux_per_pipe(
            geom,
            dni_ref=costs.reference_dni,
            eta_ref=costs.reference_efficiency,
            cap_ppfd=400.0,
        )
        lp = costs.light_pipe_total
        systems = [
            ('LP_NL', lp, base),
            ('LP_Min', lp, base),
            ('LP_Dim', lp, base),
            ('LP_Dim_IR', lp + costs.ir_filter_unit, filtered),
            ('LP_Dim_EC', lp + costs.ec_film_unit, capped),
            (FIBER_LABEL, costs.fiber_system_cost, self.fiber_flux(costs)),
        ]
        return [
            LightCostRow(
                system=name, capex=capex, flux=flux, light_cost=self.light_cost(capex, flux)
            )
            for name, capex, flux in systems
        ]

    def light_cost_row(
        self, config: ScenarioConfig, rows: list[LightCostRow]
    ) -> Optional[LightCostRow]:
        """Ligne de la table de coût de la lumière pour le système de conduits du scénario"""
        strategy = config.scenario
        if not strategy.has_light_pipes:
            return None
        if strategy.min_nominal is not None:
            key = 'LP_Min'
        elif strategy in (Strategy.LP_DIM_IR_98, Strategy.LP_DIM_IR_90):
            key = 'LP_Dim_IR'
        else:
            key = strategy.value
        return next(r for r in rows if r.system == key)

    def scenario_light_cost(
        self, config: ScenarioConfig, rows: list[LightCostRow]
    ) -> Optional[float]:
        """None sans conduits de lumière"""
        row = self.light_cost_row(config, rows)
        return row.light_cost if row else None

    def break_even_for_light_cost(
        self, reference_lc: float, flux: float, extras: float = 0.0
    ) -> float:
        """Coût unitaire pour lequel un conduit égale le coût de lumière de référence"""
        if flux <= 0:
            raise ValueError('delivered flux must be positive')
        return reference_lc * flux - extras

    # Temps de retour

    def scenario_capex(
        self,
        config: ScenarioConfig,
        result: SimulationResult,
        costs: Optional[CostTable] = None,
        lp_unit_cost: Optional[float] = None,
    ) -> CapexBreakdown:
        costs = costs or config.costs
        strategy = config.scenario
        n = config.n_pipes if strategy.has_light_pipes else 0
        unit = costs.light_pipe_unit if lp_unit_cost is None else lp_unit_cost
        led_per_watt = lighting_service.led_capex_per_watt(
            config.lighting.ppe, costs.led_cost_per_ft2, costs.led_reference_ppfd
        )
        return CapexBreakdown(
            light_pipes=n * (unit + costs.light_pipe_auxiliaries),
            filters=n * costs.ir_filter_unit
            if strategy in (Strategy.LP_DIM_IR_98, Strategy.LP_DIM_IR_90)
            else 0.0,
            ec_films=n * costs.ec_film_unit if strategy is Strategy.LP_DIM_EC else 0.0,
            tier3_led=result.tier3_nominal_w * led_per_watt,
            hvac=result.hvac_nominal_w * costs.hvac_per_watt,
        )

    def annual_savings(
        self,
        delta_energy_mwh: float,
        delta_yield_kg: float,
        costs: CostTable,
    ) -> float:
        """Électricité et carbone économisés plus le surplus de récolte [$ yr-1]"""
        carbon = costs.carbon_price * costs.grid_intensity * delta_energy_mwh
        return (
            costs.electricity_price * delta_energy_mwh
            + costs.lettuce_price * delta_yield_kg
            + carbon
        )

    def payback_from_deltas(
        self,
        delta_capex: float,
        delta_energy_mwh: float,
        delta_yield_kg: float,
        costs: CostTable,
        scenario: str = '',
    ) -> PaybackResult:
        savings = self.annual_savings(delta_energy_mwh, delta_yield_kg, costs)
        if delta_capex <= 0:
            years, viable = 0.0, True
        elif savings <= 0:
            years, viable = math.inf, False
        else:
            years, viable = delta_capex / savings, True
        return PaybackResult(
            scenario=scenario,
            delta_capex=delta_capex,
            annual_savings=savings,
            years=years,
            viable=viable,
        )

    def _deltas(
        self,
        config: ScenarioConfig,
        result: SimulationResult,
        bench_config: ScenarioConfig,
        bench: SimulationResult,
        costs: CostTable,
        lp_unit_cost: Optional[float] = None,
    ) -> tuple[float, float, float]:
        capex = self.scenario_capex(config, result, costs, lp_unit_cost).total
        bench_capex = self.scenario_capex(bench_config, bench, costs).total
        delta_energy = bench.annual('p_electric') - result.annual('p_electric')
        return capex - bench_capex, delta_energy, result.yield_kg - bench.yield_kg

    def payback_time(
        self,
        config: ScenarioConfig,
        result: SimulationResult,
        bench_config: ScenarioConfig,
        bench: SimulationResult,
        costs: Optional[CostTable] = None,
    ) -> PaybackResult:
        costs = costs or config.costs
        delta_capex, delta_energy, delta_yield = self._deltas(
            config, result, bench_config, bench, costs
        )
        return self.payback_from_deltas(
            delta_capex, delta_energy, delta_yield, costs, scenario=config.label
        )

    def required_capex_reduction(
        self,
        config: ScenarioConfig,
        result: SimulationResult,
        bench_config: ScenarioConfig,
        bench: SimulationResult,
        target_years: float,
        costs: Optional[CostTable] = None,
    ) -> Optional[float]:
        """Part de la dépense en conduits à retrancher pour tenir le temps de retour visé.

        None si aucune réduction n'y parvient (pas d'économies positives).
        """
        costs = costs or config.costs
        delta_capex, delta_energy, delta_yield = self._deltas(
            config, result, bench_config, bench, costs
        )
        savings = self.annual_savings(delta_energy, delta_yield, costs)
        if savings <= 0:
            return None
        capex = self.scenario_capex(config, result, costs)
        lp_system = capex.light_pipes + capex.filters + capex.ec_films
        excess = delta_capex - target_years * savings
        if excess <= 0:
            return 0.0
        if lp_system <= 0 or excess > lp_system:
            return None
        return excess / lp_system

    def sensitivity_sweep(
        self,
        config: ScenarioConfig,
        result: SimulationResult,
        bench_config: ScenarioConfig,
        bench: SimulationResult,
        grid: Optional[SweepGrid] = None,
    ) -> tuple[pd.DataFrame, pd.DataFrame]:
        """Surface de temps de retour selon les prix et coûts unitaires, et coûts d'équilibre.

        Revalorise les simulations terminées ; rien n'est simulé à nouveau.
        """
        grid = grid or config.sweep
        base = config.costs
        rows = []
        for price, carbon, unit in product(
            grid.electricity_prices, grid.carbon_prices, grid.lp_unit_costs
        ):
            costs = base.model_copy(update={'electricity_price': price, 'carbon_price': carbon})
            deltas = self._deltas(config, result, bench_config, bench, costs, unit)
            pbt = self.payback_from_deltas(*deltas, costs, scenario=config.label)
            rows.append(
                {
                    'electricity_price': price,
                    'carbon_price': carbon,
                    'lp_unit_cost': unit,
                    'delta_capex': pbt.delta_capex,
                    'annual_savings': pbt.annual_savings,
                    'payback_years': pbt.years,
                    'viable': pbt.viable,
                }
            )

        break_even = []
        for price, carbon in product(grid.electricity_prices, grid.carbon_prices):
            costs = base.model_copy(update={'electricity_price': price, 'carbon_price': carbon})
            unit = self.break_even_unit_cost(
                config, result, bench_config, bench, costs, grid.target_payback
            )
            break_even.append(
                {
                    'electricity_price': price,
                    'carbon_price': carbon,
                    'target_payback': grid.target_payback,
                    'break_even_unit_cost': unit,
                }
            )
        return pd.DataFrame(rows), pd.DataFrame(break_even)

    def break_even_unit_cost(
        self,
        config: ScenarioConfig,
        result: SimulationResult,
        bench_config: ScenarioConfig,
        bench: SimulationResult,
        costs: CostTable,
        target_years: float,
    ) -> float:
        """Coût unitaire de conduit donnant exactement le temps de retour visé ; nan sinon"""

        def excess(unit: float) -> float:
            deltas = self._deltas(config, result, bench_config, bench, costs, unit)
            pbt = self.payback_from_deltas(*deltas, costs)
            return pbt.years - target_years

        if not config.scenario.has_light_pipes or config.n_pipes == 0:
            return math.nan
        if excess(0.0) > 0:
            return math.nan
        upper = max(costs.light_pipe_unit, 1.0)
        while excess(upper) <= 0:
            upper *= 2.0
            if upper > 1e9:
                return math.nan
        return float(brentq(excess, 0.0, upper, xtol=1e-6))

    def ppe_table(self, runs: list[tuple[ScenarioConfig, SimulationResult]]) -> pd.DataFrame:
        """Indicateurs de la référence par efficacité LED, une colonne par PPE"""
        columns = {}
        for config, result in runs:
            kpi = self.kpis(result, config.sec_extra_mwh)
            columns[f'PPE {config.lighting.ppe:g}'] = {
                'lighting_nominal_kw': kpi.lighting_nominal_kw,
                'hvac_nominal_kw': kpi.hvac_nominal_kw,
                'cooling_mwh': kpi.cooling_mwh,
                'lighting_mwh': kpi.lighting_mwh,
                'electricity_mwh': kpi.electricity_mwh,
                'yield_kg': kpi.yield_kg,
                'sec': kpi.sec,
                'seec': kpi.seec,
            }
        frame = pd.DataFrame(columns)
        frame.index.name = 'metric'
        return frame.reset_index()


economics_service = EconomicsService()
