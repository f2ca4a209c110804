"""
Configuration des scénarios et résultats annuels
"""

import hashlib
import json
from typing import Any, Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from vfarm.models.climate import SiteConfig, SyntheticClimateParams
from vfarm.models.crop import CropParams
from vfarm.models.economics import CostTable, SweepGrid
from vfarm.models.lighting import ControlConfig, DriverCurve, Strategy
from vfarm.models.optics import LpGeometry
from vfarm.models.thermal import ThermalConfig


class ClimateSource(BaseModel):
    source: Literal['synthetic', 'file'] = 'synthetic'
    path: Optional[str] = Field(default=None, description='Delimited file, relative to the data dir')
    delimiter: Optional[str] = Field(default=None, description="',' or ';'; sniffed if unset")
    columns: dict[str, str] = Field(
        default_factory=lambda: {
            'timestamp': 'timestamp',
            't_ext': 'T_ext',
            'dni': 'DNI',
            'dhi': 'DHI',
        },
        description='Internal name -> column header in the file',
    )
    synthetic: SyntheticClimateParams = Field(default_factory=SyntheticClimateParams)

    @model_validator(mode='after')
    def check_path(self):
        if self.source == 'file' and not self.path:
            raise ValueError("climate.path is required when climate.source is 'file'")
        missing = {'timestamp', 't_ext', 'dni', 'dhi'} - set(self.columns)
        if missing:
            raise ValueError(f'climate.columns lacks {sorted(missing)}')
        return self


class OpticsSettings(BaseModel):
    table_source: Literal['traced', 'imported'] = 'traced'
    table_path: Optional[str] = Field(
        default=None, description='Stem of <stem>_direct.csv / <stem>_diffuse.csv'
    )
    ray_count: int = Field(default=100_000, ge=10_000)
    seed: int = Field(default=20240601)

    @model_validator(mode='after')
    def check_path(self):
        if self.table_source == 'imported' and not self.table_path:
            raise ValueError("optics.table_path is required for imported tables")
        return self


class LightingSettings(BaseModel):
    ppe: float = Field(default=3.0, gt=0, description='[umol J-1]')
    nominal_ppfd: float = Field(default=250.0, gt=0)
    photoperiod_start: float = Field(default=4.0, ge=0, le=24)
    photoperiod_end: float = Field(default=20.0, ge=0, le=24)
    driver: DriverCurve = Field(default_factory=DriverCurve)
    control: ControlConfig = Field(default_factory=ControlConfig)

    @model_validator(mode='after')
    def check_photoperiod(self):
        if self.photoperiod_end <= self.photoperiod_start:
            raise ValueError('photoperiod_end must be after photoperiod_start')
        return self


class ScenarioConfig(BaseModel):
    """Un fichier de scénario, validé"""

    scenario: Strategy
    name: Optional[str] = None
    site: SiteConfig = Field(default_factory=SiteConfig)
    climate: ClimateSource = Field(default_factory=ClimateSource)
    geometry: LpGeometry = Field(default_factory=LpGeometry)
    n_pipes: int = Field(default=750, ge=0)
    optics: OpticsSettings = Field(default_factory=OpticsSettings)
    lighting: LightingSettings = Field(default_factory=LightingSettings)
    thermal: ThermalConfig = Field(default_factory=ThermalConfig)
    crop: CropParams = Field(default_factory=CropParams)
    lue_table: str = Field(default='lue_lettuce.csv', description='Relative to the data dir')
    calibration: Optional[str] = Field(
        default=None, description='Calibration artifact (JSON); uncalibrated when unset'
    )
    costs: CostTable = Field(default_factory=CostTable)
    sweep: SweepGrid = Field(default_factory=SweepGrid)
    sec_extra_mwh: float = Field(
        default=0.0, ge=0, description='Non-electric site energy counted in SEC [MWh yr-1]'
    )
    tiers: int = Field(default=3, ge=1)
    seed: int = Field(default=20240601)

    @model_validator(mode='after')
    def check_scenario(self):
        filtered = self.scenario in (Strategy.LP_DIM_IR_98, Strategy.LP_DIM_IR_90)
        tau = self.lighting.control.ir_transmittance
        if filtered and tau is None:
            raise ValueError(
                f'lighting.control.ir_transmittance is required for {self.scenario.value}'
            )
        if not filtered and tau is not None:
            raise ValueError(
                f'lighting.control.ir_transmittance is set but {self.scenario.value} has no filter'
            )
        if self.scenario.has_light_pipes and self.n_pipes == 0:
            raise ValueError(f'{self.scenario.value} needs n_pipes > 0')
        if len(self.crop.tier_offsets_days) != self.tiers:
            raise ValueError('crop.tier_offsets_days needs one entry per tier')
        return self

    @property
    def label(self) -> str:
        return self.name or self.scenario.value

    @property
    def lp_aperture_area(self) -> float:
        if not self.scenario.has_light_pipes:
            return 0.0
        return self.n_pipes * self.geometry.aperture_area

    def config_hash(self) -> str:
        canonical = json.dumps(
            self.model_dump(mode='json'), sort_keys=True, separators=(',', ':')
        )
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


class CalibrationArtifact(BaseModel):
    factor: float = Field(gt=0)
    target_kg: float = Field(gt=0)
    achieved_kg: float = Field(ge=0)
    benchmark_hash: str = Field(description='config_hash of the benchmark that was fitted')
    lue_table: str
    version: str

    def fingerprint(self) -> str:
        canonical = json.dumps(
            {'factor': self.factor, 'benchmark_hash': self.benchmark_hash},
            sort_keys=True,
        )
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]


class RunMetadata(BaseModel):
    scenario: str
    config_hash: str
    seed: int
    version: str
    calibration: Optional[str] = Field(
        default=None, description='Calibration fingerprint; None when uncalibrated'
    )
    calibration_factor: float = 1.0
    table_provenance: Optional[str] = None
    geometry_hash: Optional[str] = None
    thermal_mode: str = 'quasi_steady'


class HarvestEvent(BaseModel):
    hour: int
    tier: int
    fresh_mass_kg: float


class SimulationResult(BaseModel):
    """Séries horaires et agrégats annuels d'un scénario"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    metadata: RunMetadata
    hourly: pd.DataFrame = Field(description='8760 rows; one column per traced quantity')
    harvests: list[HarvestEvent] = Field(default_factory=list)
    yield_raw_kg: float = Field(ge=0)
    yield_kg: float = Field(ge=0, description='Cycle-normalised annual yield')
    hvac_nominal_w: float = Field(ge=0)
    lighting_nominal_w: float = Field(ge=0)
    tier3_nominal_w: float = Field(ge=0)
    net_water_l: float = Field(ge=0)
    flags: dict[str, int] = Field(default_factory=dict)

    def annual(self, column: str) -> float:
        """Somme d'une colonne horaire en watts, en MWh"""
        return float(self.hourly[column].sum()) / 1e6

    def aggregates(self) -> dict[str, float]:
        columns = [
            'q_env',
            'q_led',
            'q_lp_sol',
            'q_lp_conv',
            'q_plant',
            'q_eva',
            'q_hc',
            'q_ahu',
            'q_hum',
            'p_led',
            'p_led_tier3',
            'p_led_tier12',
            'p_cooling',
            'p_heating',
            'p_electric',
        ]
        return {f'{c}_mwh': self.annual(c) for c in columns}

    def daily_dli(self, tier: Optional[int] = None) -> np.ndarray:
        """mol m-2 day-1 pour chaque jour de l'année ; l'étage 3 par défaut"""
        if tier is None:
            tier = sum(c.startswith('ppfd_tier') for c in self.hourly.columns)
        ppfd = self.hourly[f'ppfd_tier{tier}'].to_numpy()
        return ppfd.reshape(-1, 24).sum(axis=1) * 3600 / 1e6

    def summary(self) -> dict[str, Any]:
        return {
            'metadata': self.metadata.model_dump(),
            'yield_kg': self.yield_kg,
            'yield_raw_kg': self.yield_raw_kg,
            'hvac_nominal_w': self.hvac_nominal_w,
            'lighting_nominal_w': self.lighting_nominal_w,
            'tier3_nominal_w': self.tier3_nominal_w,
            'net_water_l': self.net_water_l,
            'flags': dict(self.flags),
            'aggregates': self.aggregates(),
        }
