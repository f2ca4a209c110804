"""
Modèles de données pour les coûts, les indicateurs et le temps de retour
"""

from typing import Optional

from pydantic import BaseModel, Field

SQFT_PER_M2 = 10.7639


class CostTable(BaseModel):
    led_cost_per_ft2: float = Field(
        default=35.0, ge=0, description='Fixture cost at the reference PPFD [$ ft-2]'
    )
    led_reference_ppfd: float = Field(default=250.0, gt=0)
    light_pipe_unit: float = Field(default=210.0, ge=0, description='[$ per LP]')
    light_pipe_auxiliaries: float = Field(default=90.0, ge=0, description='[$ per LP]')
    ir_filter_unit: float = Field(default=104.0, ge=0, description='[$ per LP]')
    ec_film_unit: float = Field(default=100.0, ge=0, description='[$ per LP]')
    hvac_per_watt: float = Field(default=0.65, ge=0, description='[$ W-1] of cooling')
    lettuce_price: float = Field(default=7.82, ge=0, description='[$ kg-1]')
    electricity_price: float = Field(default=350.0, ge=0, description='[$ MWh-1]')
    carbon_price: float = Field(default=100.0, ge=0, description='[$ t-1 CO2]')
    grid_intensity: float = Field(default=0.4, ge=0, description='[t CO2 MWh-1]')
    fiber_system_cost: float = Field(default=3264.0, ge=0, description='[$]')
    fiber_lumens: float = Field(default=9200.0, gt=0, description='[lm]')
    luminous_efficacy: float = Field(default=251.0, gt=0, description='[lm W-1]')
    reference_dni: float = Field(
        default=833.0, gt=0, description='Irradiance at 100,000 lx for the light-cost table [W m-2]'
    )
    reference_efficiency: float = Field(
        default=0.753, gt=0, le=1, description='Direct efficiency at the light-cost reference'
    )

    @property
    def light_pipe_total(self) -> float:
        return self.light_pipe_unit + self.light_pipe_auxiliaries


class SweepGrid(BaseModel):
    electricity_prices: list[float] = Field(
        default_factory=lambda: [150.0, 250.0, 350.0, 450.0]
    )
    carbon_prices: list[float] = Field(default_factory=lambda: [0.0, 50.0, 100.0, 200.0])
    lp_unit_costs: list[float] = Field(default_factory=lambda: [100.0, 200.0, 300.0])
    target_payback: float = Field(default=10.0, gt=0, description='[years]')


class KpiReport(BaseModel):
    scenario: str
    yield_kg: float = Field(ge=0)
    yield_defined: bool = True
    electricity_mwh: float = Field(ge=0)
    lighting_mwh: float = Field(ge=0)
    tier3_lighting_mwh: float = Field(ge=0)
    tier12_lighting_mwh: float = Field(ge=0)
    cooling_mwh: float = Field(ge=0)
    heating_mwh: float = Field(ge=0)
    harvested_daylight_mwh: float = Field(ge=0)
    sec: Optional[float] = Field(default=None, description='[kWh kg-1]')
    seec: Optional[float] = Field(default=None, description='[kWh kg-1]')
    total_lighting_energy: Optional[float] = Field(default=None, description='[kWh kg-1]')
    wue: Optional[float] = Field(default=None, description='[g FM L-1]')
    net_water_l: float = Field(ge=0)
    mean_dli_tier3: float = Field(ge=0, description='[mol m-2 day-1]')
    lighting_nominal_kw: float = Field(ge=0)
    hvac_nominal_kw: float = Field(ge=0)


class CapexBreakdown(BaseModel):
    light_pipes: float = 0.0
    filters: float = 0.0
    ec_films: float = 0.0
    tier3_led: float = 0.0
    hvac: float = 0.0

    @property
    def total(self) -> float:
        return self.light_pipes + self.filters + self.ec_films + self.tier3_led + self.hvac


class PaybackResult(BaseModel):
    scenario: str
    delta_capex: float
    annual_savings: float = Field(description='[$ yr-1]')
    years: float = Field(description='inf when non-viable')
    viable: bool


class LightCostRow(BaseModel):
    system: str
    capex: float = Field(ge=0)
    flux: float = Field(gt=0, description='[umol s-1]')
    light_cost: float = Field(ge=0, description='[$ (umol s-1)-1]')
