"""
Calibration à un facteur de la LUE sur le rendement annuel de la référence
"""

import logging
from pathlib import Path
from typing import Optional, Union

from scipy.optimize import brentq

from vfarm import __version__
from vfarm.models.climate import ClimateSeries
from vfarm.models.lighting import Strategy
from vfarm.models.scenario import CalibrationArtifact, ScenarioConfig
from vfarm.services.crop_service import crop_service
from vfarm.services.engine import engine, load_calibration
from vfarm.utils.errors import ConfigValidationError, SimulationError
from vfarm.utils.io import stamp, write_json
from vfarm.utils.logging_config import PerformanceLogger

logger = logging.getLogger(__name__)
perf_logger = PerformanceLogger(logger, prefix='calibration:')

BENCHMARK_YIELD_KG = 9221.0
TOLERANCE = 0.02


class CalibrationService:
    """Service pour l'ajustement et la sauvegarde du facteur de calibration LUE"""

    def calibrate(
        self,
        config: ScenarioConfig,
        climate: Optional[ClimateSeries] = None,
        target_kg: float = BENCHMARK_YIELD_KG,
    ) -> CalibrationArtifact:
        """Facteur sur la table LUE qui amène le rendement de la référence à la cible"""
        if config.scenario is not Strategy.BENCH:
            raise ConfigValidationError(
                'Calibration runs on the benchmark scenario only',
                field='scenario',
                error=config.scenario.value,
            )
        perf_logger.start('fit')
        base = crop_service.load_lue_table(config.lue_table)
        config = config.model_copy(update={'calibration': None})
        climate = climate if climate is not None else engine.build_climate(config)

        def yield_at(factor: float) -> float:
            result = engine.run_scenario(config, climate, lue=base.with_factor(factor))
            logger.debug(f'factor {factor:.5f} -> {result.yield_kg:.1f} kg')
            return result.yield_kg

        unit_yield = yield_at(1.0)
        if unit_yield <= 0:
            raise SimulationError('Benchmark grows nothing with the uncalibrated table')

        # Le rendement est presque proportionnel au facteur ; on encadre autour de cette estimation
        guess = target_kg / unit_yield
        lo, hi = guess * 0.8, guess * 1.25
        while yield_at(lo) > target_kg:
            lo *= 0.5
        while yield_at(hi) < target_kg:
            hi *= 2.0
            if hi > 1e3:
                raise SimulationError('Cannot bracket the calibration factor')
        factor = brentq(lambda f: yield_at(f) - target_kg, lo, hi, rtol=1e-6, xtol=1e-9)

        achieved = yield_at(factor)
        if abs(achieved - target_kg) > TOLERANCE * target_kg:
            logger.warning(
                f'Calibrated yield {achieved:.1f} kg misses the target by more than '
                f'{TOLERANCE:.0%}'
            )
        perf_logger.end('fit')
        logger.info(f'LUE calibration factor {factor:.5f} -> {achieved:.1f} kg')
        return CalibrationArtifact(
            factor=factor,
            target_kg=target_kg,
            achieved_kg=achieved,
            benchmark_hash=config.config_hash(),
            lue_table=Path(config.lue_table).name,
            version=__version__,
        )

    def save(self, artifact: CalibrationArtifact, path: Union[str, Path]) -> Path:
        meta = stamp(artifact.benchmark_hash, fingerprint=artifact.fingerprint())
        return write_json(artifact, path, meta)

    def load(self, path: Union[str, Path]) -> CalibrationArtifact:
        return load_calibration(path)


calibration_service = CalibrationService()
