"""
Lecture du climat et géométrie solaire
"""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from vfarm.models.climate import (
    CLIMATE_COLUMNS,
    ClimateSeries,
    SiteConfig,
    SolarPosition,
    SyntheticClimateParams,
)
from vfarm.utils.errors import InputDataError

logger = logging.getLogger(__name__)

HOURS_PER_YEAR = 8760
# Le 21 de chaque mois
SUN_PATH_DAYS = (21, 52, 80, 111, 141, 172, 202, 233, 264, 294, 325, 355)


def _solar_geometry(
    latitude: float,
    longitude: float,
    reference_longitude: float,
    day: np.ndarray,
    clock_hour: np.ndarray,
) -> dict[str, np.ndarray]:
    """Position du soleil vectorisée ; longitudes positives à l'est, angles en degrés"""
    n = np.minimum(np.asarray(day, dtype=float), 365.0)
    h_real = np.asarray(clock_hour, dtype=float)

    declination = 23.45 * np.sin(np.radians(360.0 * (284.0 + n) / 365.0))
    b = (n - 81.0) * 360.0 / 364.0
    b_rad = np.radians(b)
    eot = 9.87 * np.sin(2 * b_rad) - 7.53 * np.cos(b_rad) - 1.5 * np.sin(b_rad)
    solar_time = h_real + (eot + 4.0 * (longitude - reference_longitude)) / 60.0
    hour_angle = 15.0 * (solar_time - 12.0)

    phi = np.radians(latitude)
    delta = np.radians(declination)
    omega = np.radians(hour_angle)
    sin_alt = np.sin(delta) * np.sin(phi) + np.cos(delta) * np.cos(phi) * np.cos(omega)
    altitude = np.degrees(np.arcsin(np.clip(sin_alt, -1.0, 1.0)))

    cos_alt = np.cos(np.radians(altitude))
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(cos_alt > 1e-12, np.cos(delta) * np.sin(omega) / cos_alt, 0.0)
    # Depuis le sud, positif vers l'ouest
    gamma = np.degrees(np.arcsin(np.clip(ratio, -1.0, 1.0)))
    # Soleil au nord de l'axe est-ouest : on bascule dans les quadrants nord
    north = np.cos(omega) * np.tan(phi) < np.tan(delta)
    side = np.where(omega >= 0, 1.0, -1.0)
    gamma = np.where(north, side * 180.0 - gamma, gamma)
    azimuth = np.mod(180.0 + gamma, 360.0)

    return {
        'day': n.astype(int),
        'declination': declination,
        'equation_of_time': eot,
        'auxiliary_angle': b,
        'solar_time': solar_time,
        'hour_angle': hour_angle,
        'altitude': altitude,
        'azimuth': azimuth,
    }


class ClimateService:
    """Service pour le climat du site et la position du soleil"""

    def solar_position(self, site: SiteConfig, day: int, clock_hour: float) -> SolarPosition:
        """Position du soleil pour le jour n (1..365, 366 reprend 365) et l'heure locale"""
        if not 1 <= day <= 366:
            raise ValueError(f'day of year out of range: {day}')
        if not 0 <= clock_hour < 24:
            raise ValueError(f'clock time out of range: {clock_hour}')
        geo = _solar_geometry(
            site.latitude,
            site.longitude,
            site.reference_longitude,
            np.array([day]),
            np.array([clock_hour]),
        )
        return SolarPosition(**{k: v[0].item() for k, v in geo.items()})

    def solar_positions(self, site: SiteConfig, day, clock_hour) -> pd.DataFrame:
        """Positions pour des tableaux appariés de jours et d'heures"""
        geo = _solar_geometry(
            site.latitude,
            site.longitude,
            site.reference_longitude,
            np.asarray(day),
            np.asarray(clock_hour),
        )
        return pd.DataFrame(geo)

    def incidence_cosine(self, altitude):
        """cos(theta) sur une ouverture horizontale, nul quand le soleil est sous l'horizon"""
        value = np.maximum(0.0, np.sin(np.radians(altitude)))
        if np.ndim(value) == 0:
            return float(value)
        return value

    def hourly_positions(self, series: ClimateSeries) -> pd.DataFrame:
        """Position du soleil au milieu de chaque heure de la série"""
        return self.solar_positions(
            series.site, series.day_of_year, series.clock_hour + 0.5
        )

    # Lecture

    def load_climate(
        self,
        source: Union[str, Path],
        site: Optional[SiteConfig] = None,
        columns: Optional[dict[str, str]] = None,
        delimiter: Optional[str] = None,
    ) -> ClimateSeries:
        """Lit un fichier climatique horaire délimité et le valide"""
        path = Path(source)
        if not path.exists():
            raise InputDataError(f'Climate file not found: {path}', path=str(path))

        columns = columns or {
            'timestamp': 'timestamp',
            't_ext': 'T_ext',
            'dni': 'DNI',
            'dhi': 'DHI',
        }
        try:
            if delimiter is None:
                raw = pd.read_csv(path, sep=None, engine='python', comment='#')
            else:
                raw = pd.read_csv(path, sep=delimiter, comment='#')
        except (pd.errors.ParserError, UnicodeDecodeError) as e:
            raise InputDataError(f'Cannot parse climate file: {e}', path=str(path))

        raw.columns = [str(c).strip() for c in raw.columns]
        for name in CLIMATE_COLUMNS:
            header = columns.get(name, name)
            if header not in raw.columns:
                raise InputDataError(
                    f"Missing column '{header}' in climate file",
                    path=str(path),
                    details={'column': header, 'available': list(raw.columns)},
                )

        frame = pd.DataFrame({name: raw[columns.get(name, name)] for name in CLIMATE_COLUMNS})
        logger.info(f'Loaded {len(frame)} climate rows from {path}')
        return self.validate_frame(frame, site or SiteConfig(), source='file', path=str(path))

    def validate_frame(
        self,
        frame: pd.DataFrame,
        site: SiteConfig,
        source: str = 'file',
        path: Optional[str] = None,
    ) -> ClimateSeries:
        """Vérifie complétude, ordre et signe ; lignes de données numérotées depuis zéro"""
        frame = frame.reset_index(drop=True).copy()
        if len(frame) < HOURS_PER_YEAR:
            raise InputDataError(
                f'incomplete year: {len(frame)} of {HOURS_PER_YEAR} hourly records',
                path=path,
                row=len(frame),
            )
        if len(frame) > HOURS_PER_YEAR:
            raise InputDataError(
                f'expected {HOURS_PER_YEAR} hourly records, got {len(frame)}',
                path=path,
                row=HOURS_PER_YEAR,
            )

        try:
            timestamps = pd.to_datetime(frame['timestamp'])
        except (ValueError, TypeError) as e:
            raise InputDataError(f'Unreadable timestamps: {e}', path=path)
        steps = timestamps.diff().iloc[1:]
        bad_steps = np.flatnonzero(steps.to_numpy() != np.timedelta64(1, 'h'))
        if bad_steps.size:
            row = int(bad_steps[0]) + 1
            raise InputDataError(
                f'timestamps must be strictly increasing hourly steps (row {row})',
                path=path,
                row=row,
            )

        for name in ('t_ext', 'dni', 'dhi'):
            values = pd.to_numeric(frame[name], errors='coerce')
            missing = np.flatnonzero(values.isna().to_numpy())
            if missing.size:
                row = int(missing[0])
                raise InputDataError(
                    f'missing or non-numeric {name} at row {row}', path=path, row=row
                )
            frame[name] = values.astype(float)

        for name in ('dni', 'dhi'):
            negative = np.flatnonzero(frame[name].to_numpy() < 0)
            if negative.size:
                row = int(negative[0])
                raise InputDataError(
                    f'negative {name.upper()} ({frame[name].iloc[row]}) at row {row}',
                    path=path,
                    row=row,
                )

        frame['timestamp'] = timestamps
        frame['day'] = np.minimum(timestamps.dt.dayofyear.to_numpy(), 365)
        frame['clock_hour'] = (
            timestamps.dt.hour + timestamps.dt.minute / 60.0
        ).to_numpy(dtype=float)
        return ClimateSeries(site=site, frame=frame, source=source)

    # Données générées

    def clear_sky(self, altitude, params: SyntheticClimateParams):
        """Direct de Beer-Lambert avec masse d'air de Kasten-Young ; diffus en part du direct"""
        altitude = np.asarray(altitude, dtype=float)
        up = altitude > 0
        zenith = np.clip(90.0 - altitude, 0.0, 90.0)
        air_mass = 1.0 / (
            np.cos(np.radians(zenith)) + 0.50572 * (96.07995 - zenith) ** (-1.6364)
        )
        dni = np.where(up, params.solar_constant * params.atmospheric_transmittance**air_mass, 0.0)
        dhi = np.where(up, params.diffuse_ratio * dni * np.sin(np.radians(altitude)), 0.0)
        return dni, dhi

    def synthetic_climate(
        self, site: SiteConfig, params: Optional[SyntheticClimateParams] = None
    ) -> ClimateSeries:
        """Année de ciel clair déterministe pour le site"""
        params = params or SyntheticClimateParams()
        timestamps = pd.date_range(
            f'{params.year}-01-01 00:00', periods=HOURS_PER_YEAR, freq='h'
        )
        day = np.minimum(timestamps.dayofyear.to_numpy(), 365)
        hour = timestamps.hour.to_numpy(dtype=float)

        geo = _solar_geometry(
            site.latitude, site.longitude, site.reference_longitude, day, hour + 0.5
        )
        dni, dhi = self.clear_sky(geo['altitude'], params)

        if params.cloudiness > 0:
            rng = np.random.default_rng(params.seed)
            daily = rng.uniform(0.0, params.cloudiness, size=366)
            cover = daily[day - 1]
            sin_alt = np.maximum(0.0, np.sin(np.radians(geo['altitude'])))
            # Le direct perdu dans les nuages revient en partie en diffus
            dhi = dhi + 0.5 * cover * dni * sin_alt
            dni = dni * (1.0 - cover)

        t_ext = (
            params.mean_temperature
            + params.annual_amplitude
            * np.cos(2 * np.pi * (day - params.annual_peak_day) / 365.0)
            + params.diurnal_amplitude
            * np.cos(2 * np.pi * (hour + 0.5 - params.diurnal_peak_hour) / 24.0)
        )

        frame = pd.DataFrame(
            {'timestamp': timestamps, 't_ext': t_ext, 'dni': dni, 'dhi': dhi}
        )
        logger.debug(f'Generated synthetic climate for {site.name}')
        return self.validate_frame(frame, site, source='synthetic')

    def write_climate(self, series: ClimateSeries, path: Union[str, Path]) -> Path:
        """Écrit une série avec les colonnes par défaut lues par load_climate"""
        path = Path(path)
        out = pd.DataFrame(
            {
                'timestamp': series.frame['timestamp'].dt.strftime('%Y-%m-%d %H:%M'),
                'T_ext': series.t_ext.round(3),
                'DNI': series.dni.round(3),
                'DHI': series.dhi.round(3),
            }
        )
        out.to_csv(path, index=False)
        return path

    def sun_path_table(self, site: SiteConfig, days=SUN_PATH_DAYS) -> pd.DataFrame:
        """Positions horaires du soleil pour les jours demandés"""
        days = np.repeat(np.asarray(days, dtype=int), 24)
        hours = np.tile(np.arange(24, dtype=float), len(days) // 24)
        table = self.solar_positions(site, days, hours)
        table.insert(1, 'clock_hour', hours)
        table['cos_theta'] = self.incidence_cosine(table['altitude'].to_numpy())
        return table

    def incident_roof_energy(self, series: ClimateSeries, area: float) -> float:
        """Énergie solaire annuelle sur une surface horizontale [kWh]"""
        positions = self.hourly_positions(series)
        cos_theta = self.incidence_cosine(positions['altitude'].to_numpy())
        # Le diffus ne compte que soleil levé
        ghi = series.dni * cos_theta + np.where(cos_theta > 0, series.dhi, 0.0)
        return float(ghi.sum() * area / 1000.0)


climate_service = ClimateService()
