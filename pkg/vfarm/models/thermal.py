"""
Modèles de données pour le bilan énergétique de la chambre de culture
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ChamberGeometry(BaseModel):
    """Chambre en conteneur isolé ; la variante GH remplace le toit par un vitrage"""

    floor_area: float = Field(default=49.0, gt=0, description='[m2]')
    height: float = Field(default=3.0, gt=0, description='[m]')
    wall_area: float = Field(default=84.0, ge=0, description='[m2]')
    roof_area: float = Field(default=49.0, ge=0, description='[m2]')
    u_walls: float = Field(default=0.175, gt=0, description='[W m-2 K-1]')
    u_roof: float = Field(default=0.175, gt=0, description='[W m-2 K-1]')
    u_floor: float = Field(default=0.175, gt=0, description='[W m-2 K-1]')
    u_glazing: float = Field(default=3.75, gt=0, description='GH roof [W m-2 K-1]')
    glazing_transmittance: float = Field(default=0.82, gt=0, le=1)
    air_density: float = Field(default=1.2, gt=0, description='[kg m-3]')
    air_heat_capacity: float = Field(default=1005.0, gt=0, description='[J kg-1 K-1]')

    @property
    def volume(self) -> float:
        return self.floor_area * self.height

    @property
    def air_capacity(self) -> float:
        """d_air c_p V [J K-1]"""
        return self.air_density * self.air_heat_capacity * self.volume


class ChamberState(BaseModel):
    """Consignes tenues par la régulation climatique"""

    temperature: float = Field(default=24.0, description='[degC]')
    rh_light: float = Field(default=75.0, gt=0, le=100, description='[%]')
    rh_dark: float = Field(default=85.0, gt=0, le=100, description='[%]')
    co2: float = Field(default=1400.0, gt=0, description='[ppm]')
    ppfd: float = Field(default=250.0, ge=0, description='[umol m-2 s-1]')


class AirProperties(BaseModel):
    """Propriétés de l'air pour la corrélation de convection dans le conduit (film à 300 K)"""

    model_config = ConfigDict(frozen=True)

    g: float = Field(default=9.81, gt=0)
    beta: float = Field(default=1.0 / 300.0, gt=0, description='[K-1]')
    nu: float = Field(default=1.589e-5, gt=0, description='Kinematic viscosity [m2 s-1]')
    prandtl: float = Field(default=0.707, gt=0)
    k_air: float = Field(default=0.0263, gt=0, description='[W m-1 K-1]')
    length: Optional[float] = Field(
        default=None, gt=0, description='Characteristic length [m]; pipe length if unset'
    )
    area_basis: Literal['aperture', 'lateral'] = Field(
        default='aperture', description='Heat-transfer area per pipe'
    )


class CopModel(BaseModel):
    """Groupe froid / pompe à chaleur en fraction du rendement de Carnot"""

    eta_ii: float = Field(default=0.45, gt=0, le=1)
    t_evap: float = Field(default=7.0, description='Evaporator temperature [degC]')
    approach: float = Field(default=10.0, gt=0, description='Condenser approach [K]')
    cop_min: float = Field(default=1.5, gt=0)
    cop_max: float = Field(default=8.0, gt=0)

    @model_validator(mode='after')
    def check_bounds(self):
        if self.cop_min > self.cop_max:
            raise ValueError('cop_min must not exceed cop_max')
        return self


class LatentModel(BaseModel):
    """Modèle simplifié de transpiration, déshumidification sur batterie et humidification"""

    latent_heat: float = Field(default=2.45e6, gt=0, description='[J kg-1]')
    et_fraction: float = Field(
        default=0.6,
        ge=0,
        le=1,
        description='Share of the absorbed canopy radiation spent on transpiration',
    )
    condensate_recovery: float = Field(default=0.95, ge=0, le=1)
    dark_ahu_ratio: float = Field(
        default=0.3,
        ge=0,
        description='Sensible heat removed by the AHU per unit latent load when lights are off',
    )
    humidification_rate: float = Field(
        default=0.0, ge=0, description='Humidifier moisture supply [kg h-1]'
    )
    biomass_water_fraction: float = Field(default=0.95, ge=0, lt=1)


class TransientParams(BaseModel):
    substep_seconds: float = Field(default=60.0, gt=0, le=3600)
    deadband: float = Field(default=1.0, ge=0, description='Thermostat band width [K]')
    cooling_capacity: Optional[float] = Field(
        default=None, gt=0, description='[W]; unlimited when unset'
    )
    heating_capacity: Optional[float] = Field(default=None, gt=0, description='[W]')


class ThermalConfig(BaseModel):
    mode: Literal['quasi_steady', 'transient'] = 'quasi_steady'
    chamber: ChamberGeometry = Field(default_factory=ChamberGeometry)
    setpoints: ChamberState = Field(default_factory=ChamberState)
    air: AirProperties = Field(default_factory=AirProperties)
    cop: CopModel = Field(default_factory=CopModel)
    latent: LatentModel = Field(default_factory=LatentModel)
    transient: TransientParams = Field(default_factory=TransientParams)

    @model_validator(mode='after')
    def check_evaporator(self):
        if self.cop.t_evap >= self.setpoints.temperature:
            raise ValueError('cop.t_evap must lie below the indoor setpoint')
        return self


class PowerBreakdown(BaseModel):
    """Tous les termes du bilan de la chambre pour une heure [W].

    Les signes suivent le bilan
    C dT/dt = q_env + q_led + q_lp_sol - q_lp_conv - q_plant - q_eva + q_hc - q_ahu - q_hum
    donc ``q_hc`` < 0 refroidit et ``q_hc`` > 0 chauffe.
    """

    model_config = ConfigDict(frozen=True)

    q_env: float = 0.0
    q_led: float = 0.0
    q_lp_sol: float = 0.0
    q_lp_conv: float = 0.0
    q_plant: float = 0.0
    q_eva: float = 0.0
    q_hc: float = 0.0
    q_ahu: float = 0.0
    q_hum: float = 0.0
    q_storage: float = Field(default=0.0, description='C dT/dt averaged over the hour')
    temperature: float = Field(default=24.0, description='Indoor air at hour end [degC]')

    def signed_sum(self) -> float:
        return (
            self.q_env
            + self.q_led
            + self.q_lp_sol
            - self.q_lp_conv
            - self.q_plant
            - self.q_eva
            + self.q_hc
            - self.q_ahu
            - self.q_hum
        )

    def residual(self) -> float:
        """Erreur relative de fermeture du bilan"""
        scale = max(
            abs(self.q_env),
            abs(self.q_led),
            abs(self.q_lp_sol),
            abs(self.q_lp_conv),
            abs(self.q_plant),
            abs(self.q_eva),
            abs(self.q_hc),
            abs(self.q_ahu),
            abs(self.q_hum),
            1.0,
        )
        return abs(self.signed_sum() - self.q_storage) / scale

    @property
    def q_cool(self) -> float:
        return max(0.0, -self.q_hc)

    @property
    def q_heat(self) -> float:
        return max(0.0, self.q_hc)


class LatentLoads(BaseModel):
    model_config = ConfigDict(frozen=True)

    q_eva: float = Field(ge=0, description='Latent heat of transpiration [W]')
    q_ahu: float = Field(ge=0, description='Sensible heat removed by the AHU [W]')
    q_hum: float = Field(ge=0, description='Latent heat of humidification [W]')
    coil_latent: float = Field(ge=0, description='Latent load met at the cooling coil [W]')
    transpired_kg: float = Field(ge=0, description='Water transpired this hour [kg]')
    condensate_l: float = Field(ge=0, description='Condensate recovered this hour [L]')
    humidifier_kg: float = Field(ge=0, description='Water sprayed this hour [kg]')


class HvacPower(BaseModel):
    model_config = ConfigDict(frozen=True)

    cooling: float = Field(ge=0, description='Chiller electricity [W]')
    heating: float = Field(ge=0, description='Heat-pump electricity [W]')
    cop_cooling: float
    cop_heating: float

    @property
    def total(self) -> float:
        return self.cooling + self.heating
