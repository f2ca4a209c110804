"""
Modèles de données pour le site, les relevés climatiques et la géométrie solaire
"""

from datetime import datetime
from typing import Any, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

CLIMATE_COLUMNS = ('timestamp', 't_ext', 'dni', 'dhi')


class SiteConfig(BaseModel):
    """Site géographique ; longitudes positives à l'est"""

    model_config = ConfigDict(frozen=True)

    name: str = Field(default='Dubai', description='Site label')
    latitude: float = Field(default=25.0, ge=-90, le=90, description='Latitude [deg]')
    longitude: float = Field(
        default=55.0, ge=-180, le=180, description='Longitude [deg], east-positive'
    )
    reference_longitude: float = Field(
        default=60.0,
        ge=-180,
        le=180,
        description='Time-zone meridian [deg], 15 x UTC offset',
    )
    utc_offset: float = Field(default=4.0, ge=-12, le=14, description='UTC offset [h]')


class ClimateRecord(BaseModel):
    """Un relevé extérieur horaire, tenu pour constant sur son heure"""

    model_config = ConfigDict(frozen=True)

    timestamp: datetime = Field(description='Local clock time at the start of the hour')
    t_ext: float = Field(description='Outdoor air temperature [degC]')
    dni: float = Field(ge=0, description='Direct normal irradiance [W m-2]')
    dhi: float = Field(ge=0, description='Diffuse horizontal irradiance [W m-2]')


class ClimateSeries(BaseModel):
    """Année climatique validée de 8760 heures pour un site.

    Le frame porte les CLIMATE_COLUMNS et les colonnes dérivées ``day`` (1..365) et
    ``clock_hour`` ; passer par ``climate_service`` pour qu'il soit toujours validé.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    site: SiteConfig = Field(default_factory=SiteConfig)
    frame: pd.DataFrame = Field(description='Hourly records, one row per hour')
    source: str = Field(default='file', description="'file' or 'synthetic'")

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def t_ext(self) -> np.ndarray:
        return self.frame['t_ext'].to_numpy(dtype=float)

    @property
    def dni(self) -> np.ndarray:
        return self.frame['dni'].to_numpy(dtype=float)

    @property
    def dhi(self) -> np.ndarray:
        return self.frame['dhi'].to_numpy(dtype=float)

    @property
    def day_of_year(self) -> np.ndarray:
        return self.frame['day'].to_numpy(dtype=int)

    @property
    def clock_hour(self) -> np.ndarray:
        return self.frame['clock_hour'].to_numpy(dtype=float)

    def record(self, hour: int) -> ClimateRecord:
        row = self.frame.iloc[hour]
        return ClimateRecord(
            timestamp=row['timestamp'].to_pydatetime(),
            t_ext=float(row['t_ext']),
            dni=float(row['dni']),
            dhi=float(row['dhi']),
        )

    def with_values(self, **columns: Any) -> 'ClimateSeries':
        """Copie avec des colonnes entières remplacées (les scalaires sont diffusés)"""
        frame = self.frame.copy()
        for name, value in columns.items():
            frame[name] = value
        return ClimateSeries(site=self.site, frame=frame, source=self.source)


class SolarPosition(BaseModel):
    """Position du soleil pour un jour et une heure"""

    model_config = ConfigDict(frozen=True)

    day: int = Field(ge=1, le=366, description='Day of year n')
    declination: float = Field(description='Declination [deg]')
    equation_of_time: float = Field(description='Equation of time [min]')
    auxiliary_angle: float = Field(description='Auxiliary angle B [deg]')
    solar_time: float = Field(description='Apparent solar time [h]')
    hour_angle: float = Field(description='Hour angle [deg], afternoon positive')
    altitude: float = Field(ge=-90, le=90, description='Solar altitude [deg]')
    azimuth: float = Field(ge=0, lt=360, description='Azimuth [deg], North = 0')

    @property
    def is_up(self) -> bool:
        return self.altitude > 0


class SyntheticClimateParams(BaseModel):
    """Réglages du générateur d'année en ciel clair (valeurs par défaut proches de Dubaï)"""

    year: int = Field(default=2023, description='Non-leap calendar year for timestamps')
    solar_constant: float = Field(default=1361.0, gt=0, description='I0 [W m-2]')
    atmospheric_transmittance: float = Field(
        default=0.7, gt=0, le=1, description='Beer-Lambert clear-sky transmittance'
    )
    diffuse_ratio: float = Field(
        default=0.2, ge=0, le=1, description='DHI as a share of clear-sky beam-horizontal'
    )
    mean_temperature: float = Field(default=28.0, description='Annual mean [degC]')
    annual_amplitude: float = Field(default=7.0, ge=0, description='[K]')
    annual_peak_day: int = Field(default=200, ge=1, le=365)
    diurnal_amplitude: float = Field(default=5.0, ge=0, description='[K]')
    diurnal_peak_hour: float = Field(default=15.0, ge=0, lt=24)
    cloudiness: float = Field(
        default=0.0,
        ge=0,
        le=1,
        description='Maximum daily beam attenuation drawn uniformly per day',
    )
    seed: Optional[int] = Field(default=None, description='Seed for cloudiness draws')
