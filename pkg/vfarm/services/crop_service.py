"""
Croissance de la laitue par étage : lecture de la LUE, intégration de la biomasse
et récoltes
"""

import logging
import math
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError
from scipy.interpolate import RegularGridInterpolator

from vfarm.models.crop import CropParams, CropState, LueTable, TierState
from vfarm.utils.errors import ConfigValidationError, from_pydantic
from vfarm.utils.io import read_table

logger = logging.getLogger(__name__)

LUE_COLUMNS = ('T', 'CO2', 'PPFD', 'lue_dm', 'lue_fm')


@lru_cache(maxsize=8)
def grid_interpolators(key: tuple):
    """Interpolateurs (dm, fm) d'un LueTable.grid_key() ; partagés entre copies à facteur"""
    temperatures, co2_levels, ppfd_levels, dm_values, fm_values = key
    axes = (temperatures, co2_levels, ppfd_levels)
    shape = tuple(len(axis) for axis in axes)
    dm = RegularGridInterpolator(axes, np.reshape(dm_values, shape), method='linear')
    fm = RegularGridInterpolator(axes, np.reshape(fm_values, shape), method='linear')
    return dm, fm


class CropService:
    """Service pour la croissance de la culture"""

    def load_lue_table(self, path) -> LueTable:
        """Lit une grille au format long (T, CO2, PPFD, lue_dm, lue_fm)"""
        frame = read_table(path)
        missing = [c for c in LUE_COLUMNS if c not in frame.columns]
        if missing:
            raise ConfigValidationError(
                f'LUE table {path} lacks columns {missing}', field='lue_table'
            )
        if frame.empty:
            raise ConfigValidationError(f'LUE table {path} is empty', field='lue_table')

        temperatures = sorted(frame['T'].unique().tolist())
        co2_levels = sorted(frame['CO2'].unique().tolist())
        ppfd_levels = sorted(frame['PPFD'].unique().tolist())
        expected = len(temperatures) * len(co2_levels) * len(ppfd_levels)
        if len(frame) != expected or frame.duplicated(['T', 'CO2', 'PPFD']).any():
            raise ConfigValidationError(
                f'LUE table {path} is not a complete (T, CO2, PPFD) grid',
                field='lue_table',
            )

        ordered = frame.sort_values(['T', 'CO2', 'PPFD'])
        shape = (len(temperatures), len(co2_levels), len(ppfd_levels))
        try:
            table = LueTable(
                temperatures=temperatures,
                co2_levels=co2_levels,
                ppfd_levels=ppfd_levels,
                lue_dm=ordered['lue_dm'].to_numpy(float).reshape(shape).tolist(),
                lue_fm=ordered['lue_fm'].to_numpy(float).reshape(shape).tolist(),
                source=Path(path).name,
            )
        except ValidationError as e:
            raise from_pydantic(e, prefix='lue_table')

        self._warn_if_increasing(table)
        logger.info(f'Loaded LUE table {path} with grid {shape}')
        return table

    def _warn_if_increasing(self, table: LueTable) -> None:
        for name in ('lue_dm', 'lue_fm'):
            grid = np.asarray(getattr(table, name))
            if np.any(np.diff(grid, axis=2) > 0):
                logger.warning(f'{name} increases with PPFD somewhere in {table.source}')

    def lue_lookup_many(
        self, table: LueTable, temperature, co2, ppfd
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Lecture vectorisée ; hors grille les requêtes sont bornées et le masque les signale"""
        temperature, co2, ppfd = np.broadcast_arrays(
            np.asarray(temperature, dtype=float),
            np.asarray(co2, dtype=float),
            np.asarray(ppfd, dtype=float),
        )
        raw = np.stack([temperature, co2, ppfd], axis=-1)
        lower = np.array([table.temperatures[0], table.co2_levels[0], table.ppfd_levels[0]])
        upper = np.array([table.temperatures[-1], table.co2_levels[-1], table.ppfd_levels[-1]])
        points = np.clip(raw, lower, upper)
        clamped = np.any(points != raw, axis=-1)

        dm, fm = grid_interpolators(table.grid_key())
        factor = table.calibration_factor
        return dm(points) * factor, fm(points) * factor, clamped

    def lue_lookup(
        self, table: LueTable, temperature: float, co2: float, ppfd: float
    ) -> tuple[float, float, bool]:
        """(LUE_dm, LUE_fm) en g umol-1, multipliées par le facteur de calibration"""
        dm, fm, clamped = self.lue_lookup_many(table, [temperature], [co2], [ppfd])
        return float(dm[0]), float(fm[0]), bool(clamped[0])

    def interception(self, lai: float, k: float) -> float:
        return 1.0 - math.exp(-k * lai)

    def advance(
        self,
        state: TierState,
        ppfd: float,
        dt: float,
        params: CropParams,
        lue_dm: float,
        lue_fm: float,
    ) -> TierState:
        """Sous-pas d'Euler des équations de biomasse à LUE fixe (par m2)"""
        if dt <= 0:
            raise ValueError('dt must be positive')
        steps = params.substeps
        h = dt / steps
        dry, fresh, lai = state.dry_mass, state.fresh_mass, state.lai
        if ppfd > 0:
            for _ in range(steps):
                absorbed = ppfd * self.interception(lai, params.extinction_coefficient) * h
                dry += absorbed * lue_dm
                fresh += absorbed * lue_fm
                lai = min(params.specific_leaf_area * dry, params.lai_cap)
        return state.model_copy(
            update={
                'dry_mass': dry,
                'fresh_mass': max(fresh, dry),
                'lai': lai,
                'days_since_transplant': state.days_since_transplant + dt / 86400.0,
            }
        )

    def growth_step(
        self,
        state: TierState,
        ppfd: float,
        dt: float,
        params: CropParams,
        table: LueTable,
        temperature: float,
        co2: float,
    ) -> TierState:
        """Fait avancer un étage de dt secondes sous le PPFD total de la canopée"""
        lue_dm, lue_fm, _ = self.lue_lookup(table, temperature, co2, ppfd)
        return self.advance(state, ppfd, dt, params, lue_dm, lue_fm)

    def plant_heat_sink(
        self, ppfd: float, lai: float, k: float, area: float, conversion: float
    ) -> float:
        """Rayonnement absorbé par la canopée [W] ; conversion en umol J-1"""
        if ppfd <= 0 or lai <= 0:
            return 0.0
        return ppfd * self.interception(lai, k) * area / conversion

    def transplant(self, params: CropParams, state: Optional[TierState] = None) -> TierState:
        """Nouvelles plantules, en gardant le registre de récolte de l'étage"""
        return TierState(
            dry_mass=params.initial_dry_mass,
            fresh_mass=params.initial_fresh_mass,
            lai=params.initial_lai,
            harvested_kg=state.harvested_kg if state else 0.0,
            cycles=state.cycles if state else 0,
        )

    def harvest_if_due(self, state: TierState, params: CropParams) -> tuple[TierState, float]:
        if state.fresh_mass_per_plant(params.plant_density) < params.target_fresh_mass:
            return state, 0.0
        kg = params.harvest_mass_kg
        reset = self.transplant(params, state)
        return (
            reset.model_copy(
                update={'harvested_kg': state.harvested_kg + kg, 'cycles': state.cycles + 1}
            ),
            kg,
        )

    def initial_state(
        self,
        params: CropParams,
        table: LueTable,
        temperature: float,
        co2: float,
        ppfd: float,
        photoperiod_hours: float = 16.0,
    ) -> CropState:
        """État au 1er janvier ; les étages décalés sont précultivés sous LED nominales.

        Les récoltes pendant la préculture relancent l'étage sans être comptées.
        """
        lue_dm, lue_fm, _ = self.lue_lookup(table, temperature, co2, ppfd)
        tiers = []
        for offset in params.tier_offsets_days:
            tier = self.transplant(params)
            for hour in range(int(round(offset * 24))):
                lit = (hour % 24) < photoperiod_hours
                tier = self.advance(tier, ppfd if lit else 0.0, 3600.0, params, lue_dm, lue_fm)
                if tier.fresh_mass_per_plant(params.plant_density) >= params.target_fresh_mass:
                    tier = self.transplant(params)
            tiers.append(tier)
        return CropState(tiers=tiers)

    def normalized_yield(
        self, start: CropState, end: CropState, params: CropParams
    ) -> float:
        """Masse récoltée plus la progression du cycle en cours gagnée sur l'année [kg]"""
        span = params.harvest_fresh_mass - params.initial_fresh_mass
        total = end.harvested_kg - start.harvested_kg
        for first, last in zip(start.tiers, end.tiers):
            progress = (last.fresh_mass - first.fresh_mass) / span
            total += progress * params.harvest_mass_kg
        return max(total, 0.0)


crop_service = CropService()
