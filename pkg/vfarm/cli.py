"""
Point d'entrée en ligne de commande du simulateur de ferme en conteneur
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional

import pandas as pd

from vfarm import __version__
from vfarm.config import CONFIGS_DIR, LOG_CONFIG, PATHS, RUN_CONFIG
from vfarm.models.lighting import Strategy
from vfarm.services.calibration_service import BENCHMARK_YIELD_KG, calibration_service
from vfarm.services.climate_service import climate_service
from vfarm.services.economics_service import economics_service
from vfarm.services.engine import engine
from vfarm.services.optics_service import optics_service
from vfarm.services.scenario_loader import scenario_loader
from vfarm.utils.errors import (
    EXIT_OK,
    EXIT_USAGE,
    CalibrationMismatchError,
    UsageError,
    error_record,
    exit_code_for,
)
from vfarm.utils.io import stamp, write_json, write_table
from vfarm.utils.logging_config import setup_logging, verbosity_to_level

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = CONFIGS_DIR / 'bench.yaml'


class _Parser(argparse.ArgumentParser):
    """Transforme les échecs d'argparse en UsageError pour produire un enregistrement d'erreur"""

    def error(self, message):
        raise UsageError(message, details={'usage': self.format_usage().strip()})


def _overrides(args) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    if getattr(args, 'seed', None) is not None:
        overrides['seed'] = args.seed
        overrides['optics'] = {'seed': args.seed}
    if getattr(args, 'rays', None) is not None:
        overrides.setdefault('optics', {})['ray_count'] = args.rays
    if getattr(args, 'calibration', None):
        overrides['calibration'] = str(Path(args.calibration).resolve())
    return overrides


def _emit(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, default=str))


def cmd_trace_optics(args) -> int:
    config = scenario_loader.load(args.config, _overrides(args))
    geom = config.geometry
    out = Path(args.out)
    rays = config.optics.ray_count
    table = optics_service.cached_table(geom, rays, config.optics.seed, workers=args.workers)
    paths = optics_service.export_table(table, out / 'optics', config.config_hash())

    for altitude in args.flux_altitudes:
        trace = optics_service.trace_direct(
            geom, altitude, rays, config.optics.seed, workers=args.workers
        )
        path = out / f'flux_map_alt{altitude:g}.csv'
        optics_service.export_flux_map(trace.flux_map, path, config.config_hash())
        low, high = optics_service.flux_uniformity(trace.flux_map)
        logger.info(f'alt {altitude:g}: flux min/mean {low:.2f}, max/mean {high:.2f}')

    _emit(
        {
            'success': True,
            'geometry_hash': table.geometry_hash,
            'files': [str(p) for p in paths],
            'max_eta_dir': max(table.eta_dir),
        }
    )
    return EXIT_OK


def cmd_calibrate(args) -> int:
    config = scenario_loader.load(args.config, _overrides(args))
    artifact = calibration_service.calibrate(config, target_kg=args.target)
    path = calibration_service.save(artifact, Path(args.out) / 'calibration.json')
    _emit({'success': True, 'calibration': str(path), **artifact.model_dump()})
    return EXIT_OK


def cmd_simulate(args) -> int:
    overrides = _overrides(args)
    if args.scenario:
        overrides['scenario'] = args.scenario
    config = scenario_loader.load(args.config, overrides)
    result = engine.run_scenario(config, workers=args.workers)
    files = engine.export_result(config, result, args.out)
    kpi = economics_service.kpis(result, config.sec_extra_mwh)
    _emit({'success': True, 'files': [str(f) for f in files], 'kpis': kpi.model_dump()})
    return EXIT_OK


def _run_set(args):
    configs = scenario_loader.load_set(args.config, _overrides(args))
    if args.scenario:
        wanted = set(args.scenario)
        configs = [c for c in configs if c.label in wanted or c.scenario.value in wanted]
        if not configs:
            raise UsageError(f'No scenario in {args.config} matches {sorted(wanted)}')
    return configs, engine.compare_scenarios(configs, workers=args.workers)


def cmd_compare(args) -> int:
    configs, (results, table) = _run_set(args)
    out = Path(args.out)
    meta = stamp(configs[0].config_hash(), scenarios=','.join(c.label for c in configs))
    files = [
        write_table(table, out / 'comparison.csv', meta),
        write_json(table.to_dict(orient='records'), out / 'comparison.json', meta),
    ]
    light_costs = economics_service.light_cost_table(configs[0].costs, configs[0].geometry)
    files.append(
        write_table(
            pd.DataFrame([r.model_dump() for r in light_costs]), out / 'light_cost.csv', meta
        )
    )

    variants = scenario_loader.read_yaml(args.config).get('ppe_variants') or []
    bench = next((c for c in configs if c.scenario is Strategy.BENCH), None)
    if variants and bench is not None:
        runs = []
        for ppe in variants:
            variant = bench.model_copy(
                update={'lighting': bench.lighting.model_copy(update={'ppe': float(ppe)})}
            )
            runs.append((variant, engine.run_scenario(variant, workers=args.workers)))
        files.append(write_table(economics_service.ppe_table(runs), out / 'ppe_table.csv', meta))

    for config, result in zip(configs, results):
        files.extend(engine.export_result(config, result, out / 'scenarios'))
    _emit({'success': True, 'files': [str(f) for f in files], 'rows': len(table)})
    return EXIT_OK


def cmd_sweep(args) -> int:
    document = scenario_loader.read_yaml(args.config)
    if not document.get('benchmark'):
        raise UsageError(f'{args.config} names no benchmark scenario file')
    configs, (results, _) = _run_set(args)
    bench_path = Path(args.config).parent / document['benchmark']
    bench_config = scenario_loader.load(bench_path, _overrides(args))
    calibration = results[0].metadata.calibration
    lue, fingerprint = engine.load_lue(bench_config)
    if fingerprint != calibration:
        raise CalibrationMismatchError('Benchmark and scenarios use different calibrations')
    bench = engine.run_scenario(bench_config, lue=lue, calibration=fingerprint)

    out = Path(args.out)
    summary = {}
    fiber = economics_service.fiber_flux(bench_config.costs)
    fiber_lc = economics_service.light_cost(bench_config.costs.fiber_system_cost, fiber)
    for config, result in zip(configs, results):
        if not config.scenario.has_light_pipes:
            continue
        meta = stamp(config.config_hash(), scenario=config.label)
        surface, break_even = economics_service.sensitivity_sweep(
            config, result, bench_config, bench
        )
        write_table(surface, out / f'sweep_{config.label}_surface.csv', meta)
        write_table(break_even, out / f'sweep_{config.label}_break_even.csv', meta)
        rows = economics_service.light_cost_table(
            config.costs,
            config.geometry,
            config.lighting.control.ir_transmittance or 0.98,
        )
        row = economics_service.light_cost_row(config, rows)
        # Filtres et films restent au prix catalogue ; on résout pour conduit et accessoires
        extras = row.capex - config.costs.light_pipe_total
        summary[config.label] = {
            'payback': economics_service.payback_time(config, result, bench_config, bench),
            'required_capex_reduction': economics_service.required_capex_reduction(
                config, result, bench_config, bench, config.sweep.target_payback
            ),
            'break_even_pipe_cost_vs_fiber': economics_service.break_even_for_light_cost(
                fiber_lc, row.flux, extras
            ),
        }
    write_json(summary, out / 'sweep_summary.json', stamp(bench_config.config_hash()))
    _emit({'success': True, 'scenarios': sorted(summary)})
    return EXIT_OK


def cmd_sunpath(args) -> int:
    config = scenario_loader.load(args.config, _overrides(args))
    table = climate_service.sun_path_table(config.site)
    meta = stamp(config.config_hash(), site=config.site.name)
    path = write_table(table, Path(args.out) / 'sunpath.csv', meta)
    _emit(
        {
            'success': True,
            'file': str(path),
            'declination_min': float(table['declination'].min()),
            'declination_max': float(table['declination'].max()),
        }
    )
    return EXIT_OK


def cmd_synth_climate(args) -> int:
    config = scenario_loader.load(args.config, _overrides(args))
    series = climate_service.synthetic_climate(config.site, config.climate.synthetic)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = climate_service.write_climate(series, out / 'climate.csv')
    roof = climate_service.incident_roof_energy(series, config.thermal.chamber.roof_area)
    _emit({'success': True, 'file': str(path), 'roof_solar_kwh': roof})
    return EXIT_OK


COMMANDS = {
    'trace-optics': (cmd_trace_optics, 'Trace the light pipe and write efficiency tables'),
    'calibrate': (cmd_calibrate, 'Fit the LUE factor to the benchmark yield'),
    'simulate': (cmd_simulate, 'Run one scenario for a year'),
    'compare': (cmd_compare, 'Run a scenario set and tabulate it'),
    'sweep': (cmd_sweep, 'Payback over price, carbon and unit-cost grids'),
    'sunpath': (cmd_sunpath, 'Hourly sun positions on the 21st of each month'),
    'synth-climate': (cmd_synth_climate, 'Write the synthetic clear-sky year'),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='vfarm', description='Daylit container farm simulator')
    parser.add_argument('--version', action='version', version=f'vfarm {__version__}')
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)

    for name, (handler, help_text) in COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.set_defaults(handler=handler)
        cmd.add_argument('--config', default=str(DEFAULT_CONFIG), help='Scenario or set file')
        cmd.add_argument('--out', default='results', help='Output directory')
        cmd.add_argument('--seed', type=int, default=None)
        cmd.add_argument('--workers', type=int, default=RUN_CONFIG['workers'])
        cmd.add_argument('-v', '--verbose', action='count', default=0)
        if name in ('simulate', 'compare', 'sweep', 'calibrate'):
            cmd.add_argument('--calibration', default=None, help='Calibration artifact')
        if name == 'simulate':
            cmd.add_argument('--scenario', choices=[s.value for s in Strategy])
        if name in ('compare', 'sweep'):
            cmd.add_argument('--scenario', action='append', help='Keep only these scenarios')
        if name == 'trace-optics':
            cmd.add_argument('--rays', type=int, default=None)
            cmd.add_argument(
                '--flux-altitudes', type=float, nargs='*', default=[30.0, 50.0, 70.0]
            )
        if name == 'calibrate':
            cmd.add_argument(
                '--target', type=float, default=BENCHMARK_YIELD_KG, help='[kg yr-1]'
            )
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(
                'No subcommand given', details={'usage': parser.format_usage().strip()}
            )
        level = verbosity_to_level(args.verbose) if args.verbose else LOG_CONFIG['level']
        setup_logging(
            log_level=level,
            log_to_file=LOG_CONFIG['to_file'],
            log_dir=PATHS['log_dir'],
        )
        return args.handler(args)
    except Exception as e:
        print(json.dumps(error_record(e), default=str), file=sys.stderr)
        return exit_code_for(e)


if __name__ == '__main__':
    sys.exit(main())
