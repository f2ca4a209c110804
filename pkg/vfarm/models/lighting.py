"""
Modèles de données pour les LED, les drivers et le pilotage de l'étage 3
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Strategy(str, Enum):
    """Stratégies d'éclairage de l'étage 3"""

    BENCH = 'Bench'
    LP_NL = 'LP_NL'
    LP_MIN_200 = 'LP_Min_200'
    LP_MIN_250 = 'LP_Min_250'
    LP_DIM = 'LP_Dim'
    LP_DIM_IR_98 = 'LP_Dim_IR_98'
    LP_DIM_IR_90 = 'LP_Dim_IR_90'
    LP_DIM_EC = 'LP_Dim_EC'
    GH = 'GH'

    @property
    def has_light_pipes(self) -> bool:
        return self not in (Strategy.BENCH, Strategy.GH)

    @property
    def is_dimming(self) -> bool:
        return self.value.startswith('LP_Dim')

    @property
    def min_nominal(self) -> Optional[float]:
        """PPFD LED nominal des stratégies LP_Min"""
        if self is Strategy.LP_MIN_200:
            return 200.0
        if self is Strategy.LP_MIN_250:
            return 250.0
        return None


class DriverCurve(BaseModel):
    """Rendement du driver à charge partielle selon la fraction de gradation PWM"""

    model_config = ConfigDict(frozen=True)

    dim_points: list[float] = Field(default_factory=lambda: [0.3, 1.0])
    efficiency_points: list[float] = Field(default_factory=lambda: [0.95, 0.95])
    min_dim: float = Field(default=0.30, gt=0, le=1)

    @model_validator(mode='after')
    def check_curve(self):
        if len(self.dim_points) != len(self.efficiency_points) or len(self.dim_points) < 2:
            raise ValueError('driver curve needs matching dim/efficiency points (>= 2)')
        if any(b <= a for a, b in zip(self.dim_points, self.dim_points[1:])):
            raise ValueError('dim points must be strictly increasing')
        if self.dim_points[0] > self.min_dim or self.dim_points[-1] < 1.0:
            raise ValueError('driver curve must cover [min_dim, 1.0]')
        if any(not 0 < e <= 1 for e in self.efficiency_points):
            raise ValueError('driver efficiencies must lie in (0, 1]')
        return self


class LedArray(BaseModel):
    model_config = ConfigDict(frozen=True)

    ppe: float = Field(default=3.0, gt=0, description='[umol J-1]')
    area: float = Field(default=30.0, gt=0, description='Served canopy area [m2]')
    nominal_ppfd: float = Field(default=250.0, ge=0)
    photoperiod_start: float = Field(default=4.0, ge=0, le=24)
    photoperiod_end: float = Field(default=20.0, ge=0, le=24)

    @property
    def nominal_power(self) -> float:
        """PPFD x area / PPE [W]"""
        return self.nominal_ppfd * self.area / self.ppe

    def is_on_period(self, clock_hour: float) -> bool:
        return self.photoperiod_start <= clock_hour < self.photoperiod_end


class EcFilm(BaseModel):
    """Film électrochrome ; transmittance en rapport de deux quadratiques de la tension"""

    model_config = ConfigDict(frozen=True)

    numerator: tuple[float, float, float] = (0.1331, -0.5184, 8.4437)
    denominator: tuple[float, float, float] = (0.1811, -0.8825, 15.5613)
    v_min: float = Field(default=0.0)
    v_max: float = Field(default=60.0)
    grid_points: int = Field(default=601, ge=11)
    cap: float = Field(default=400.0, gt=0, description='Daylight PPFD cap')

    @model_validator(mode='after')
    def check_domain(self):
        if self.v_max <= self.v_min:
            raise ValueError('v_max must exceed v_min')
        return self


class ControlConfig(BaseModel):
    """Seuils des stratégies de l'étage 3"""

    min_threshold: float = Field(
        default=100.0, ge=0, description='LP_Min switches LEDs on below this daylight PPFD'
    )
    dim_target: float = Field(default=250.0, gt=0, description='LP_Dim total PPFD target')
    ir_transmittance: Optional[float] = Field(
        default=None, gt=0, le=1, description='Visible transmittance of the UV-IR filter'
    )
    par_fraction: float = Field(
        default=2.247 / 4.56, gt=0, le=1, description='PAR share of solar power'
    )
    ec: EcFilm = Field(default_factory=EcFilm)


class LightingCommand(BaseModel):
    model_config = ConfigDict(frozen=True)

    led_ppfd: float = Field(ge=0)
    dim: float = Field(ge=0, le=1)
    daylight_ppfd: float = Field(default=0.0, ge=0, description='Daylight reaching the canopy')
    ec_voltage: Optional[float] = None
    ec_transmittance: Optional[float] = None
    ec_cap_unreachable: bool = False

    @property
    def total_ppfd(self) -> float:
        return self.led_ppfd + self.daylight_ppfd


class EcSetting(BaseModel):
    model_config = ConfigDict(frozen=True)

    voltage: float
    transmittance: float = Field(gt=0, le=1)
    ppfd_out: float = Field(ge=0)
    cap_unreachable: bool = False
