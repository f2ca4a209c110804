"""
Simulation horaire annuelle d'un scénario et comparaisons entre scénarios
"""

import logging
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from vfarm import __version__
from vfarm.config import PATHS, RUN_CONFIG
from vfarm.models.climate import ClimateSeries
from vfarm.models.crop import LueTable
from vfarm.models.lighting import LedArray, Strategy
from vfarm.models.optics import OpticalEfficiencyTable
from vfarm.models.scenario import (
    CalibrationArtifact,
    HarvestEvent,
    RunMetadata,
    ScenarioConfig,
    SimulationResult,
)
from vfarm.services.climate_service import climate_service
from vfarm.services.crop_service import crop_service
from vfarm.services.economics_service import economics_service
from vfarm.services.lighting_service import lighting_service
from vfarm.services.optics_service import (
    PAR_PPF_PER_WATT,
    SOLAR_PPF_PER_WATT,
    optics_service,
)
from vfarm.services.thermal_service import thermal_service
from vfarm.utils.errors import CalibrationMismatchError, InputDataError, SimulationError
from vfarm.utils.io import read_json, stamp, write_json, write_table
from vfarm.utils.logging_config import TRACE, PerformanceLogger

logger = logging.getLogger(__name__)
perf_logger = PerformanceLogger(logger, prefix='engine:')

# Jours représentatifs des profils saisonniers
WINTER_DAY = 15
SUMMER_DAY = 196

FLAG_MESSAGES = {
    'table_extrapolated': 'hours with the sun outside the efficiency table altitudes',
    'lue_clamped': 'hours with LUE queries clamped to the table domain',
    'ra_out_of_range': 'hours with Ra outside the convection correlation range',
    'ec_cap_unreachable': 'hours where the EC film could not hold the daylight cap',
    'ec_non_monotone': 'EC transmittance curve is non-monotone over its voltage range',
}


def load_calibration(path: Union[str, Path]) -> CalibrationArtifact:
    document = read_json(path)
    try:
        return CalibrationArtifact.model_validate(document.get('data', document))
    except ValueError as e:
        raise InputDataError(f'Invalid calibration artifact {path}: {e}', path=str(path))


class SimulationEngine:
    """Boucle horaire : soleil, apports, pilotage, LED, bilan, CVC, culture"""

    def build_climate(self, config: ScenarioConfig) -> ClimateSeries:
        source = config.climate
        if source.source == 'file':
            return climate_service.load_climate(
                source.path, config.site, source.columns, source.delimiter
            )
        return climate_service.synthetic_climate(config.site, source.synthetic)

    def load_lue(self, config: ScenarioConfig) -> tuple[LueTable, Optional[str]]:
        """Table LUE avec la calibration du scénario appliquée, et son empreinte"""
        table = crop_service.load_lue_table(config.lue_table)
        if not config.calibration:
            return table, None
        artifact = load_calibration(config.calibration)
        return table.with_factor(artifact.factor), artifact.fingerprint()

    def load_table(
        self, config: ScenarioConfig, workers: int = 1
    ) -> Optional[OpticalEfficiencyTable]:
        if not config.scenario.has_light_pipes:
            return None
        return optics_service.load_table_for(
            config.optics, config.geometry, Path(PATHS['data_dir']), workers=workers
        )

    def run_scenario(
        self,
        config: ScenarioConfig,
        climate: Optional[ClimateSeries] = None,
        table: Optional[OpticalEfficiencyTable] = None,
        lue: Optional[LueTable] = None,
        calibration: Optional[str] = None,
        workers: int = 1,
    ) -> SimulationResult:
        """Une simulation annuelle.

        ``lue`` et ``calibration`` remplacent la table LUE et l'empreinte de
        calibration du scénario ; l'ajustement de calibration y passe ses facteurs d'essai.
        """
        label = config.label
        perf_logger.start(label)
        climate = climate if climate is not None else self.build_climate(config)
        if lue is None:
            lue, calibration = self.load_lue(config)
        strategy = config.scenario
        if table is None and strategy.has_light_pipes:
            table = self.load_table(config, workers)

        hourly, harvests, ledger = self._hourly_loop(config, climate, table, lue)
        start, end = ledger['start'], ledger['end']
        yield_raw = end.harvested_kg - start.harvested_kg
        yield_kg = crop_service.normalized_yield(start, end, config.crop)

        latent = config.thermal.latent
        supplied = (
            hourly['transpired_kg'].sum()
            + hourly['humidifier_kg'].sum()
            - hourly['condensate_l'].sum()
        )
        net_water = max(0.0, supplied) + yield_kg * latent.biomass_water_fraction

        flags = {name: int(ledger['flags'][name]) for name in FLAG_MESSAGES}
        for name, count in flags.items():
            if count:
                logger.warning(f'{label}: {count} {FLAG_MESSAGES[name]}')

        result = SimulationResult(
            metadata=RunMetadata(
                scenario=label,
                config_hash=config.config_hash(),
                seed=config.seed,
                version=__version__,
                calibration=calibration,
                calibration_factor=lue.calibration_factor,
                table_provenance=table.provenance if table is not None else None,
                geometry_hash=table.geometry_hash if table is not None else None,
                thermal_mode=config.thermal.mode,
            ),
            hourly=hourly,
            harvests=harvests,
            yield_raw_kg=yield_raw,
            yield_kg=yield_kg,
            hvac_nominal_w=float(hourly['q_cool_load'].max()),
            lighting_nominal_w=ledger['lighting_nominal_w'],
            tier3_nominal_w=ledger['tier3_nominal_w'],
            net_water_l=float(net_water),
            flags=flags,
        )
        elapsed = perf_logger.end(label)
        logger.info(
            f'{label}: yield {yield_kg:.1f} kg, electricity '
            f'{result.annual("p_electric"):.2f} MWh in {elapsed:.2f}s'
        )
        return result

    def _hourly_loop(
        self,
        config: ScenarioConfig,
        climate: ClimateSeries,
        table: Optional[OpticalEfficiencyTable],
        lue: LueTable,
    ):
        strategy = config.scenario
        lighting = config.lighting
        control = lighting.control
        thermal = config.thermal
        crop = config.crop
        chamber = thermal.chamber
        setpoints = thermal.setpoints
        n_tiers = config.tiers
        n_pipes = config.n_pipes if strategy.has_light_pipes else 0
        area = crop.tier_area
        k = crop.extinction_coefficient

        led = LedArray(
            ppe=lighting.ppe,
            area=area,
            nominal_ppfd=lighting.nominal_ppfd,
            photoperiod_start=lighting.photoperiod_start,
            photoperiod_end=lighting.photoperiod_end,
        )
        glazed = strategy is Strategy.GH
        surfaces = thermal_service.envelope_surfaces(
            chamber, glazed_roof=glazed, roof_aperture=config.lp_aperture_area
        )
        envelope_ua = sum(u * a for _, u, a in surfaces)
        occupancy = min(1.0, area / chamber.floor_area)
        filtered = control.ir_transmittance is not None
        daylight_conversion = PAR_PPF_PER_WATT if filtered else SOLAR_PPF_PER_WATT

        ec_non_monotone = False
        if strategy is Strategy.LP_DIM_EC:
            ec_non_monotone = lighting_service.ec_diagnostics(control.ec)['non_monotone']

        positions = climate_service.hourly_positions(climate)
        altitude = positions['altitude'].to_numpy()
        t_ext = climate.t_ext
        dni = climate.dni
        dhi = climate.dhi
        clock = climate.clock_hour
        hours = len(climate)

        names = [
            'q_env', 'q_led', 'q_lp_sol', 'q_lp_conv', 'q_plant', 'q_eva', 'q_hc',
            'q_ahu', 'q_hum', 'q_storage', 'residual', 'temperature',
            'q_cool_load', 'q_heat_load', 'cop_cooling',
            'p_led', 'p_led_tier3', 'p_led_tier12', 'p_cooling', 'p_heating',
            'p_electric', 'lp_raw_ppfd', 'ppfd_led_tier3', 'ppfd_daylight_tier3',
            'dim_tier3', 'ec_voltage', 'ec_transmittance',
            'transpired_kg', 'condensate_l', 'humidifier_kg',
        ]  # fmt: skip
        names += [f'ppfd_tier{i + 1}' for i in range(n_tiers)]
        names += [f'fm_tier{i + 1}' for i in range(n_tiers)]
        out = {name: np.zeros(hours) for name in names}
        out['ec_voltage'][:] = np.nan
        out['ec_transmittance'][:] = np.nan
        flags = dict.fromkeys(FLAG_MESSAGES, 0)
        flags['ec_non_monotone'] = int(ec_non_monotone)

        start = crop_service.initial_state(
            crop,
            lue,
            setpoints.temperature,
            setpoints.co2,
            lighting.nominal_ppfd,
            lighting.photoperiod_end - lighting.photoperiod_start,
        )
        tiers = list(start.tiers)
        harvests: list[HarvestEvent] = []
        t_air = setpoints.temperature
        co2 = np.full(n_tiers, setpoints.co2)
        temperature = np.full(n_tiers, setpoints.temperature)
        tier12_nominal = lighting_service.led_electric_power(
            lighting.nominal_ppfd, area, lighting.ppe
        ) * (n_tiers - 1)
        tier3_nominal = 0.0

        for hour in range(hours):
            alt = float(altitude[hour])
            lit = led.is_on_period(clock[hour])

            # Lumière du jour
            q_sol = 0.0
            raw_ppfd = 0.0
            if strategy.has_light_pipes:
                gains = optics_service.lp_solar_gains(
                    table, dni[hour], dhi[hour], alt, config.geometry, n_pipes
                )
                flags['table_extrapolated'] += int(gains.extrapolated)
                raw_ppfd = optics_service.lp_crop_ppfd(gains, area)
                q_sol = gains.q_sol
            elif glazed:
                gh = optics_service.gh_gains(
                    dni[hour],
                    dhi[hour] if alt > 0 else 0.0,
                    alt,
                    chamber.roof_area,
                    chamber.glazing_transmittance,
                    occupancy,
                    area,
                )
                raw_ppfd = gh.ppfd
                q_sol = gh.q_sol

            command = lighting_service.control_tier3(
                strategy, raw_ppfd, clock[hour], led, control, lighting.driver
            )
            if filtered:
                q_sol *= control.par_fraction * control.ir_transmittance
            elif command.ec_transmittance is not None:
                q_sol *= command.ec_transmittance
                flags['ec_cap_unreachable'] += int(command.ec_cap_unreachable)
                out['ec_voltage'][hour] = command.ec_voltage
                out['ec_transmittance'][hour] = command.ec_transmittance

            # LEDs
            led_ppfd = np.full(n_tiers, lighting.nominal_ppfd if lit else 0.0)
            led_ppfd[-1] = command.led_ppfd
            day_ppfd = np.zeros(n_tiers)
            day_ppfd[-1] = command.daylight_ppfd
            efficiency = 1.0
            if strategy.is_dimming and command.dim > 0:
                efficiency = lighting_service.driver_efficiency(command.dim, lighting.driver)
            p_tier3 = lighting_service.led_electric_power(
                command.led_ppfd, area, lighting.ppe, efficiency
            )
            p_tier12 = tier12_nominal if lit else 0.0
            tier3_nominal = max(tier3_nominal, p_tier3)
            q_led = p_tier3 + p_tier12

            # Rayonnement de la canopée et transpiration
            q_plant = 0.0
            for i, tier in enumerate(tiers):
                q_plant += crop_service.plant_heat_sink(
                    led_ppfd[i], tier.lai, k, area, PAR_PPF_PER_WATT
                )
                q_plant += crop_service.plant_heat_sink(
                    day_ppfd[i], tier.lai, k, area, daylight_conversion
                )
            transpiration = (
                thermal.latent.et_fraction * q_plant * 3600.0 / thermal.latent.latent_heat
            )
            latent = thermal_service.latent_balance(transpiration, lit, thermal.latent)

            # Bilan énergétique
            def convection(t_in: float) -> float:
                return thermal_service.lp_convection(
                    t_in, t_ext[hour], config.geometry, thermal.air, n_pipes
                )[0]

            _, ra_flag = thermal_service.lp_convection(
                t_air, t_ext[hour], config.geometry, thermal.air, n_pipes
            )
            flags['ra_out_of_range'] += int(ra_flag)

            if thermal.mode == 'transient':
                internal = q_led + q_sol - q_plant - latent.q_eva - latent.q_ahu - latent.q_hum
                t_start = t_air
                t_air, q_hc, q_env, q_conv = thermal_service.integrate_hour(
                    t_start,
                    setpoints.temperature,
                    chamber,
                    thermal.transient,
                    internal,
                    envelope_ua,
                    t_ext[hour],
                    convection,
                )
                storage = chamber.air_capacity * (t_air - t_start) / 3600.0
            else:
                q_env = thermal_service.envelope_load(surfaces, t_air, t_ext[hour])
                q_conv = convection(t_air)
                storage = 0.0
            balance = thermal_service.solve_hvac_load(
                q_env=q_env,
                q_led=q_led,
                q_lp_sol=q_sol,
                q_lp_conv=q_conv,
                q_plant=q_plant,
                q_eva=latent.q_eva,
                q_ahu=latent.q_ahu,
                q_hum=latent.q_hum,
                temperature=t_air,
            )
            if thermal.mode == 'transient':
                balance = balance.model_copy(update={'q_hc': q_hc, 'q_storage': storage})

            cool_load = balance.q_cool + latent.coil_latent + latent.q_ahu
            hvac = thermal_service.hvac_electricity(
                cool_load, balance.q_heat, t_ext[hour], thermal.cop, setpoints.temperature
            )

            # Culture
            total_ppfd = led_ppfd + day_ppfd
            lue_dm, lue_fm, clamped = crop_service.lue_lookup_many(
                lue, temperature, co2, total_ppfd
            )
            # Rien ne pousse dans le noir, quoi que renvoie la table
            flags['lue_clamped'] += int(np.any(clamped & (total_ppfd > 0)))
            for i, tier in enumerate(tiers):
                ppfd = total_ppfd[i]
                tier = crop_service.advance(tier, ppfd, 3600.0, crop, lue_dm[i], lue_fm[i])
                tier, kg = crop_service.harvest_if_due(tier, crop)
                if kg:
                    harvests.append(HarvestEvent(hour=hour, tier=i + 1, fresh_mass_kg=kg))
                tiers[i] = tier
                out[f'ppfd_tier{i + 1}'][hour] = ppfd
                out[f'fm_tier{i + 1}'][hour] = tier.fresh_mass

            row = {
                'q_env': balance.q_env,
                'q_led': q_led,
                'q_lp_sol': q_sol,
                'q_lp_conv': balance.q_lp_conv,
                'q_plant': q_plant,
                'q_eva': latent.q_eva,
                'q_hc': balance.q_hc,
                'q_ahu': latent.q_ahu,
                'q_hum': latent.q_hum,
                'q_storage': balance.q_storage,
                'residual': balance.residual(),
                'temperature': t_air,
                'q_cool_load': cool_load,
                'q_heat_load': balance.q_heat,
                'cop_cooling': hvac.cop_cooling,
                'p_led': q_led,
                'p_led_tier3': p_tier3,
                'p_led_tier12': p_tier12,
                'p_cooling': hvac.cooling,
                'p_heating': hvac.heating,
                'p_electric': q_led + hvac.total,
                'lp_raw_ppfd': raw_ppfd,
                'ppfd_led_tier3': command.led_ppfd,
                'ppfd_daylight_tier3': command.daylight_ppfd,
                'dim_tier3': command.dim,
                'transpired_kg': latent.transpired_kg,
                'condensate_l': latent.condensate_l,
                'humidifier_kg': latent.humidifier_kg,
            }
            for name, value in row.items():
                if not math.isfinite(value):
                    raise SimulationError(
                        f'non-finite {name} at hour {hour}',
                        hour=hour,
                        details={'column': name, 'scenario': config.label},
                    )
                out[name][hour] = value
            logger.log(
                TRACE,
                f'h{hour} alt={alt:.1f} led3={command.led_ppfd:.0f} '
                f'day3={command.daylight_ppfd:.0f} q_hc={balance.q_hc:.0f}',
            )

        frame = pd.DataFrame(out)
        frame.insert(0, 'timestamp', climate.frame['timestamp'].to_numpy())
        frame.insert(1, 'day', climate.day_of_year)
        frame.insert(2, 'clock_hour', clock)
        frame.insert(3, 't_ext', t_ext)
        frame.insert(4, 'dni', dni)
        frame.insert(5, 'dhi', dhi)
        frame.insert(6, 'altitude', altitude)

        end = start.model_copy(update={'tiers': tiers})
        ledger = {
            'start': start,
            'end': end,
            'flags': flags,
            'lighting_nominal_w': tier12_nominal + tier3_nominal,
            'tier3_nominal_w': tier3_nominal,
        }
        return frame, harvests, ledger

    # Comparaisons

    def compare_scenarios(
        self,
        configs: list[ScenarioConfig],
        climate: Optional[ClimateSeries] = None,
        workers: Optional[int] = None,
    ) -> tuple[list[SimulationResult], pd.DataFrame]:
        """Lance chaque scénario sur un même climat et les compare à la référence"""
        if not configs:
            raise ValueError('no scenarios to compare')
        workers = workers or RUN_CONFIG['workers']

        fingerprints = {}
        luts = []
        for config in configs:
            lue, fingerprint = self.load_lue(config)
            fingerprints[config.label] = fingerprint
            luts.append((lue, fingerprint))
        if len(set(fingerprints.values())) > 1:
            raise CalibrationMismatchError(
                'Scenarios use different calibrations', details={'calibration': fingerprints}
            )

        climate = climate if climate is not None else self.build_climate(configs[0])
        tables = [self.load_table(config, workers) for config in configs]

        jobs = [
            delayed(self.run_scenario)(config, climate, table, lue, fingerprint)
            for config, table, (lue, fingerprint) in zip(configs, tables, luts)
        ]
        # Avec n_jobs=1, Parallel exécute les tâches dans l'ordre, dans ce processus
        results = Parallel(n_jobs=workers)(jobs)

        return results, self.comparison_table(configs, results)

    def comparison_table(
        self, configs: list[ScenarioConfig], results: list[SimulationResult]
    ) -> pd.DataFrame:
        if len({r.metadata.calibration for r in results}) > 1:
            raise CalibrationMismatchError('Results use different calibrations')
        bench = next(
            (
                (c, r)
                for c, r in zip(configs, results)
                if c.scenario is Strategy.BENCH
            ),
            None,
        )
        rows = []
        for config, result in zip(configs, results):
            kpi = economics_service.kpis(result, config.sec_extra_mwh)
            lc_rows = economics_service.light_cost_table(
                config.costs,
                config.geometry,
                config.lighting.control.ir_transmittance or 0.98,
            )
            payback = None
            if bench is not None and config.scenario is not Strategy.BENCH:
                payback = economics_service.payback_time(config, result, *bench)
            rows.append(
                {
                    'scenario': config.label,
                    'yield_kg': kpi.yield_kg,
                    'wue': kpi.wue,
                    'total_lighting_energy': kpi.total_lighting_energy,
                    'harvested_daylight_mwh': kpi.harvested_daylight_mwh,
                    'tier12_lighting_mwh': kpi.tier12_lighting_mwh,
                    'tier3_lighting_mwh': kpi.tier3_lighting_mwh,
                    'lighting_mwh': kpi.lighting_mwh,
                    'cooling_mwh': kpi.cooling_mwh,
                    'electricity_mwh': kpi.electricity_mwh,
                    'sec': kpi.sec,
                    'seec': kpi.seec,
                    'mean_dli_tier3': kpi.mean_dli_tier3,
                    'light_cost': economics_service.scenario_light_cost(config, lc_rows),
                    'payback_years': payback.years if payback else None,
                    'viable': payback.viable if payback else None,
                }
            )
        return pd.DataFrame(rows)

    # Résumés et export

    def monthly_summary(self, result: SimulationResult) -> pd.DataFrame:
        hourly = result.hourly
        month = pd.to_datetime(hourly['timestamp']).dt.month
        energy = hourly[['p_led', 'p_cooling', 'p_heating', 'p_electric', 'q_lp_sol']]
        frame = (energy.groupby(month).sum() / 1e6).add_suffix('_mwh')
        ppfd_columns = [c for c in hourly.columns if c.startswith('ppfd_tier')]
        daylit = hourly[ppfd_columns[-1]]
        days = hourly['day']
        daily = (daylit.groupby(days).sum() * 3600 / 1e6).rename('dli')
        day_month = month.groupby(days).first()
        frame['mean_dli_daylit_tier'] = daily.groupby(day_month).mean()
        harvested = pd.Series(0.0, index=frame.index)
        for event in result.harvests:
            harvested[month.iloc[event.hour]] += event.fresh_mass_kg
        frame['harvested_kg'] = harvested
        frame.index.name = 'month'
        return frame.reset_index()

    def seasonal_profiles(
        self, result: SimulationResult, days: tuple[int, int] = (WINTER_DAY, SUMMER_DAY)
    ) -> pd.DataFrame:
        """Lumière et puissance horaires de l'étage 3 un jour d'hiver et un jour d'été"""
        hourly = result.hourly
        columns = [
            'day',
            'clock_hour',
            'ppfd_led_tier3',
            'ppfd_daylight_tier3',
            'p_led',
            'p_cooling',
            'p_electric',
        ]
        picked = hourly.loc[hourly['day'].isin(days), columns].copy()
        picked.insert(0, 'season', np.where(picked['day'] == days[0], 'winter', 'summer'))
        return picked.reset_index(drop=True)

    def export_result(
        self,
        config: ScenarioConfig,
        result: SimulationResult,
        out_dir: Union[str, Path],
    ) -> list[Path]:
        out_dir = Path(out_dir)
        meta = stamp(result.metadata.config_hash, scenario=config.label, seed=config.seed)
        prefix = config.label
        hourly = result.hourly.copy()
        hourly['timestamp'] = pd.to_datetime(hourly['timestamp']).dt.strftime('%Y-%m-%d %H:%M')
        harvests = pd.DataFrame(
            [h.model_dump() for h in result.harvests],
            columns=['hour', 'tier', 'fresh_mass_kg'],
        )
        summary = result.summary()
        summary['kpis'] = economics_service.kpis(result, config.sec_extra_mwh)
        written = [
            write_table(hourly, out_dir / f'{prefix}_hourly.csv', meta),
            write_table(harvests, out_dir / f'{prefix}_harvests.csv', meta),
            write_table(self.monthly_summary(result), out_dir / f'{prefix}_monthly.csv', meta),
            write_table(self.seasonal_profiles(result), out_dir / f'{prefix}_seasonal.csv', meta),
            write_json(summary, out_dir / f'{prefix}_summary.json', meta),
        ]
        logger.info(f'Wrote {len(written)} files for {prefix} to {out_dir}')
        return written


engine = SimulationEngine()
