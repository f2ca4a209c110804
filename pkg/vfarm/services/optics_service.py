"""
Optique des conduits de lumière : lancer de rayons, tables d'efficacité et conversion
de l'éclairement en apports pour la chambre et en PPFD sur la canopée
"""

import logging
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from sqlalchemy.exc import SQLAlchemyError

from vfarm import __version__
from vfarm.config import OPTICS_CONFIG
from vfarm.database import get_session
from vfarm.models.cache import OpticsTableModel
from vfarm.models.optics import (
    BAND_EDGES,
    DiffuseBand,
    DirectTrace,
    FluxMap,
    GreenhouseGains,
    LpGains,
    LpGeometry,
    OpticalEfficiencyTable,
)
from vfarm.services.ray_tracer import MonteCarloTracer, tracer
from vfarm.utils.errors import ConfigValidationError, InputDataError
from vfarm.utils.io import read_table, stamp, write_json, write_table
from vfarm.utils.logging_config import PerformanceLogger

logger = logging.getLogger(__name__)
perf_logger = PerformanceLogger(logger, prefix='optics:')

MIN_RAYS = 10_000
SOLAR_PPF_PER_WATT = 2.247  # umol J-1, spectre solaire complet
PAR_PPF_PER_WATT = 4.56  # umol J-1, PAR seul


class OpticsService:
    """Service pour la chaîne optique des conduits de lumière"""

    def __init__(self, ray_tracer: Optional[MonteCarloTracer] = None):
        self.tracer = ray_tracer or tracer

    def mirror_tilt(self, altitude: float) -> float:
        """Inclinaison du miroir dont la normale coupe en deux le faisceau et l'axe du conduit"""
        if not 0 <= altitude <= 90:
            raise ValueError(f'solar altitude must lie in [0, 90], got {altitude}')
        return (90.0 + altitude) / 2.0

    def dome_band_fraction(self, band: int) -> float:
        """Poids, pour un ciel isotrope, de la bande de dix degrés qui se termine à ``band``"""
        if band not in BAND_EDGES:
            raise ValueError(f'band must be one of {BAND_EDGES}, got {band}')
        return math.sin(math.radians(band)) ** 2 - math.sin(math.radians(band - 10)) ** 2

    def band_fractions(self, bands=BAND_EDGES) -> np.ndarray:
        return np.array([self.dome_band_fraction(b) for b in bands])

    def mirror_interception_ratio(self, altitude: float) -> float:
        """Surface du miroir vue du soleil sur surface d'ouverture vue du soleil"""
        if not 0 < altitude <= 90:
            raise ValueError(f'solar altitude must lie in (0, 90], got {altitude}')
        sin_a = math.sin(math.radians(altitude))
        return math.sqrt((1.0 - sin_a) / 2.0) / sin_a

    # Lancer de rayons

    def _check_rays(self, ray_count: int):
        if ray_count < MIN_RAYS:
            raise ConfigValidationError(
                f'ray count must be at least {MIN_RAYS}', field='ray_count', error=ray_count
            )

    def trace_direct(
        self,
        geom: LpGeometry,
        altitude: float,
        ray_count: Optional[int] = None,
        seed: int = 0,
        workers: int = 1,
    ) -> DirectTrace:
        ray_count = ray_count or OPTICS_CONFIG['ray_count']
        self._check_rays(ray_count)
        return self.tracer.trace_direct(
            geom, altitude, self.mirror_tilt(altitude), ray_count, seed, workers=workers
        )

    def trace_diffuse_bands(
        self,
        geom: LpGeometry,
        tilt: float,
        ray_count: Optional[int] = None,
        seed: int = 0,
        workers: int = 1,
    ) -> list[DiffuseBand]:
        """Efficacités par bande sur le demi-dôme avant (pas encore divisées par deux)"""
        ray_count = ray_count or OPTICS_CONFIG['ray_count']
        self._check_rays(ray_count)
        return [
            self.tracer.trace_band(geom, band, tilt, ray_count, seed, workers=workers)
            for band in BAND_EDGES
        ]

    def sweep_altitudes(
        self,
        geom: LpGeometry,
        altitudes=None,
        ray_count: Optional[int] = None,
        seed: int = 0,
        workers: int = 1,
    ) -> OpticalEfficiencyTable:
        """Efficacités directe et diffuse à chaque hauteur de la grille"""
        altitudes = list(altitudes or OPTICS_CONFIG['altitude_grid'])
        ray_count = ray_count or OPTICS_CONFIG['ray_count']
        perf_logger.start('sweep')

        directs, th, crop, th_se, crop_se = [], [], [], [], []
        for altitude in altitudes:
            direct = self.trace_direct(geom, altitude, ray_count, seed, workers)
            bands = self.trace_diffuse_bands(
                geom, self.mirror_tilt(altitude), ray_count, seed, workers
            )
            directs.append(direct)
            th.append([b.eta_th for b in bands])
            crop.append([b.eta_crop for b in bands])
            th_se.append([b.stderr_th for b in bands])
            crop_se.append([b.stderr_crop for b in bands])
            logger.info(
                f'alt {altitude:5.1f}: eta_dir={direct.efficiency:.4f} '
                f'eta_th(90)={bands[-1].eta_th:.4f}'
            )

        perf_logger.end('sweep')
        return OpticalEfficiencyTable(
            altitudes=[float(a) for a in altitudes],
            eta_dir=[d.efficiency for d in directs],
            eta_dir_stderr=[d.stderr for d in directs],
            interception_ratio=[self.mirror_interception_ratio(a) for a in altitudes],
            eta_diff_th=th,
            eta_diff_crop=crop,
            eta_diff_th_stderr=th_se,
            eta_diff_crop_stderr=crop_se,
            provenance='traced',
            geometry_hash=geom.geometry_hash(ray_count, seed),
        )

    # Cache

    def cached_table(
        self,
        geom: LpGeometry,
        ray_count: int,
        seed: int,
        workers: int = 1,
        db_url: Optional[str] = None,
    ) -> OpticalEfficiencyTable:
        """Table tracée pour cette géométrie, lue dans le cache si elle y est"""
        key = geom.geometry_hash(ray_count, seed)
        try:
            db = get_session(db_url)
        except SQLAlchemyError as e:
            logger.warning(f'Optics cache unavailable ({e}); tracing without cache')
            return self.sweep_altitudes(geom, ray_count=ray_count, seed=seed, workers=workers)

        try:
            row = db.query(OpticsTableModel).filter_by(geometry_hash=key).first()
            if row is not None:
                logger.info(f'Optics table cache hit {key[:12]}')
                return OpticalEfficiencyTable.model_validate_json(row.payload)

            logger.info(f'Optics table cache miss {key[:12]}; tracing')
            table = self.sweep_altitudes(geom, ray_count=ray_count, seed=seed, workers=workers)
            db.add(
                OpticsTableModel(
                    geometry_hash=key,
                    ray_count=ray_count,
                    seed=seed,
                    version=__version__,
                    payload=table.model_dump_json(),
                )
            )
            db.commit()
            return table
        finally:
            db.close()

    # Import / export délimité

    def export_table(self, table: OpticalEfficiencyTable, stem: Union[str, Path], config_hash=None):
        stem = Path(stem)
        meta = stamp(config_hash, provenance=table.provenance, geometry_hash=table.geometry_hash)
        direct = pd.DataFrame(
            {
                'altitude': table.altitudes,
                'eta_dir': table.eta_dir,
                'stderr': table.eta_dir_stderr,
            }
        )
        if table.interception_ratio is not None:
            direct['interception_ratio'] = table.interception_ratio

        rows = []
        for i, altitude in enumerate(table.altitudes):
            for j, band in enumerate(table.bands):
                rows.append(
                    {
                        'altitude': altitude,
                        'tilt': self.mirror_tilt(altitude),
                        'band': band,
                        'eta_diff_th': table.eta_diff_th[i][j],
                        'eta_diff_crop': table.eta_diff_crop[i][j],
                        'stderr_th': table.eta_diff_th_stderr[i][j],
                        'stderr_crop': table.eta_diff_crop_stderr[i][j],
                    }
                )
        direct_path = write_table(direct, f'{stem}_direct.csv', meta)
        diffuse_path = write_table(pd.DataFrame(rows), f'{stem}_diffuse.csv', meta)
        return direct_path, diffuse_path

    def import_table(self, stem: Union[str, Path]) -> OpticalEfficiencyTable:
        stem = Path(stem)
        direct = read_table(f'{stem}_direct.csv')
        diffuse = read_table(f'{stem}_diffuse.csv')

        for name in ('altitude', 'eta_dir'):
            if name not in direct.columns:
                raise InputDataError(
                    f"Missing column '{name}' in {stem}_direct.csv", path=f'{stem}_direct.csv'
                )
        for name in ('altitude', 'band', 'eta_diff_th', 'eta_diff_crop'):
            if name not in diffuse.columns:
                raise InputDataError(
                    f"Missing column '{name}' in {stem}_diffuse.csv", path=f'{stem}_diffuse.csv'
                )

        direct = direct.sort_values('altitude')
        altitudes = direct['altitude'].astype(float).tolist()
        bands = sorted(int(b) for b in diffuse['band'].unique())
        for name in ('stderr_th', 'stderr_crop'):
            if name not in diffuse.columns:
                diffuse[name] = 0.0
        grid = diffuse.pivot_table(
            index='altitude',
            columns='band',
            values=['eta_diff_th', 'eta_diff_crop', 'stderr_th', 'stderr_crop'],
        )
        try:
            grid = grid.loc[altitudes]
        except KeyError:
            raise InputDataError(
                'direct and diffuse tables must share the same altitudes', path=str(stem)
            )
        if grid.isna().to_numpy().any():
            raise InputDataError('diffuse table has missing altitude/band cells', path=str(stem))

        def block(name):
            return grid[name][bands].to_numpy(dtype=float).tolist()

        stderr = direct['stderr'] if 'stderr' in direct.columns else 0.0 * direct['eta_dir']
        try:
            return OpticalEfficiencyTable(
                altitudes=altitudes,
                eta_dir=direct['eta_dir'].astype(float).tolist(),
                eta_dir_stderr=pd.Series(stderr).astype(float).tolist(),
                interception_ratio=(
                    direct['interception_ratio'].astype(float).tolist()
                    if 'interception_ratio' in direct.columns
                    else None
                ),
                bands=bands,
                eta_diff_th=block('eta_diff_th'),
                eta_diff_crop=block('eta_diff_crop'),
                eta_diff_th_stderr=block('stderr_th'),
                eta_diff_crop_stderr=block('stderr_crop'),
                provenance='imported',
            )
        except ValueError as e:
            raise InputDataError(f'Invalid efficiency table {stem}: {e}', path=str(stem))

    def export_flux_map(self, flux: FluxMap, path: Union[str, Path], config_hash=None):
        """Grille en texte délimité, avec un JSON annexe pour l'étendue et le pas"""
        path = Path(path)
        x, y = flux.cell_centres()
        frame = pd.DataFrame(flux.cells, columns=[f'{v:.4f}' for v in x])
        frame.insert(0, 'y', y)
        meta = stamp(config_hash)
        write_table(frame, path, meta)
        sidecar = {
            'pitch': flux.pitch,
            'extent_x': flux.extent_x,
            'extent_y': flux.extent_y,
            'target_width': flux.target_width,
            'target_depth': flux.target_depth,
            'incident_power': flux.incident_power,
            'units': 'W m-2',
        }
        write_json(sidecar, path.with_suffix('.json'), meta)
        return path

    def flux_uniformity(self, flux: FluxMap) -> tuple[float, float]:
        """(min/moyenne, max/moyenne) de l'éclairement sur la zone cible"""
        cells = flux.cells[flux.target_mask()]
        mean = float(cells.mean()) if cells.size else 0.0
        if mean <= 0:
            return 0.0, 0.0
        return float(cells.min()) / mean, float(cells.max()) / mean

    # Apports

    def lp_solar_gains(
        self,
        table: OpticalEfficiencyTable,
        i_dir: float,
        i_diff: float,
        altitude: float,
        geom: LpGeometry,
        n_pipes: int,
    ) -> LpGains:
        """Apports de tous les conduits pour une heure ; le miroir masque l'arrière du ciel"""
        if i_dir < 0 or i_diff < 0:
            raise ValueError('irradiance must be non-negative')
        if altitude <= 0 or n_pipes == 0:
            return LpGains()

        area = geom.aperture_area * n_pipes
        cos_theta = math.sin(math.radians(altitude))
        eta_dir, out_dir = table.direct_efficiency(altitude)
        eta_th, eta_crop, out_diff = table.diffuse_efficiencies(altitude)
        weights = self.band_fractions(table.bands) * (i_diff / 2.0) * area

        return LpGains(
            q_dir=i_dir * cos_theta * eta_dir * area,
            q_diff_th=float(np.dot(weights, eta_th)),
            q_diff_crop=float(np.dot(weights, eta_crop)),
            extrapolated=out_dir or out_diff,
        )

    def lp_crop_ppfd(
        self, gains: LpGains, crop_area: float, conversion: float = SOLAR_PPF_PER_WATT
    ) -> float:
        if crop_area <= 0:
            raise ValueError('crop area must be positive')
        return (gains.q_dir + gains.q_diff_crop) * conversion / crop_area

    def filtered_efficiency(self, eta_base: float, tau_vis: float) -> float:
        if not 0 < eta_base <= 1 or not 0 < tau_vis <= 1:
            raise ValueError('efficiency and transmittance must lie in (0, 1]')
        return eta_base * tau_vis

    def gh_gains(
        self,
        i_dir: float,
        i_diff: float,
        altitude: float,
        glazing_area: float,
        tau_glass: float,
        occupancy: float,
        crop_area: float,
    ) -> GreenhouseGains:
        """Apports du toit vitré ; la canopée ne reçoit que sa part d'occupation"""
        if not 0 < tau_glass <= 1:
            raise ValueError('glazing transmittance must lie in (0, 1]')
        cos_theta = max(0.0, math.sin(math.radians(altitude)))
        q_sol = (i_dir * cos_theta + i_diff) * tau_glass * glazing_area
        q_crop = q_sol * occupancy
        return GreenhouseGains(
            q_sol=q_sol, q_crop=q_crop, ppfd=q_crop * SOLAR_PPF_PER_WATT / crop_area
        )

    def reference_flux_per_pipe(
        self,
        geom: LpGeometry,
        dni_ref: float = 833.0,
        eta_ref: float = 0.75,
        transmission: float = 1.0,
        cap_ppfd: Optional[float] = None,
    ) -> float:
        """Flux de photons d'un conduit sous un faisceau vertical de référence [umol s-1]"""
        flux = dni_ref * eta_ref * geom.aperture_area * SOLAR_PPF_PER_WATT * transmission
        if cap_ppfd is not None:
            flux = min(flux, cap_ppfd * geom.target_width_m * geom.target_depth_m)
        return flux

    def load_table_for(self, settings, geom: LpGeometry, data_dir: Path, workers: int = 1):
        """Table d'efficacité désignée par les réglages optiques du scénario"""
        if settings.table_source == 'imported':
            stem = Path(settings.table_path)
            if not stem.is_absolute():
                stem = data_dir / stem
            return self.import_table(stem)
        return self.cached_table(geom, settings.ray_count, settings.seed, workers=workers)


optics_service = OpticsService()
