# src/cli/main.py
"""Command-line front end: generate graphs, build tables, run simulations and sweeps."""
import argparse
import logging
import os
import sys
from typing import Dict, List, Optional, Tuple

from ..core.analyzer import RunAnalyzer
from ..core.config import (ExecutionModel, OverheadModel, PolicyConfig, PolicyKind, EXECUTION_KINDS,
                           load_config, merge_overrides)
from ..core.errors import EXIT_OK, ConfigError, MCPPError
from ..core.experiment_manager import PRESETS, ExperimentManager, ExperimentSpec
from ..core.generator import POWER_DISTRIBUTIONS, GenParams, generate
from ..core.platform import PLATFORM_NAMES, CoreKind, Platform, resolve_platform
from ..core.schedule import save_tables
from ..core.static_scheduler import build_tables, check_table
from ..core.taskgraph import GRAPH_SCHEMA, load_graph, save_graph, validate
from ..core.thermal import ThermalParams
from ..utils.logger import AppLogger
from ..utils.validators import validate_json_file, validate_output_dir

EXPERIMENT_KEYS = ('scenario', 'repetitions', 'base_seed', 'workers', 'periods', 'output_dir')
PLATFORM_KEYS = ('name', 'n_cores')


def _range(text: str) -> Tuple[float, float]:
    """'a:b' or a single value 'a' (degenerate range)."""
    parts = text.split(':')
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW:HIGH, got {text!r}") from None
    if len(values) == 1:
        return values[0], values[0]
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected LOW:HIGH, got {text!r}")
    return values


def _add_generation_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group('graph generation')
    g.add_argument('--util', type=_range, dest='utilization_range', metavar='LOW:HIGH',
                   help='per-core utilization band U/c (default 0.5:0.75)')
    g.add_argument('--edges', type=float, dest='edge_percent', help='edge percentage d in [0, 1] (default 0.10)')
    g.add_argument('--tasks', type=int, dest='n_tasks', help='number of tasks n (default 50)')
    g.add_argument('--hc-fraction', type=float, help='fraction of HC tasks (default 0.5)')
    g.add_argument('--wcet-ratio', type=_range, dest='wcet_ratio_range', metavar='LOW:HIGH',
                   help='C^HI / C^LO ratio band of HC tasks (default 1.5:2.5)')
    g.add_argument('--period', type=float, help='graph period in ms (default 500)')
    g.add_argument('--deadline', type=float, help='graph deadline in ms (default: the period)')
    g.add_argument('--power-dist', choices=POWER_DISTRIBUTIONS, dest='power_distribution',
                   help='peak-power distribution inside the envelope (default normal)')


def _add_platform_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group('platform')
    g.add_argument('--platform', help=f"one of {', '.join(PLATFORM_NAMES)} or a platform .json "
                                      "(default big-little)")
    g.add_argument('--cores', type=int, help='number of cores c (default 8)')


def _add_policy_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group('policy')
    g.add_argument('--policy', choices=[k.value for k in PolicyKind], dest='kind',
                   help='run-time policy (default proposed)')
    g.add_argument('--k', type=int, help='look-ahead depth (default 4)')
    g.add_argument('--alpha', type=float, help='energy weight of the cost function (default 0.5)')
    g.add_argument('--beta', type=float, help='power weight of the cost function (default 0.5)')
    g.add_argument('--gamma', type=float, help='re-mapping threshold (default 0.9)')
    g.add_argument('--remap', action=argparse.BooleanOptionalAction, dest='remap_enabled', default=None,
                   help='intra-cluster re-mapping (default on)')
    g.add_argument('--deduct-overheads', action=argparse.BooleanOptionalAction, default=None,
                   help='deduct scheduler and V-f overheads from slack (default on; off = ablation)')


def _add_overhead_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group('overheads')
    g.add_argument('--to-lookahead-us', type=float, help='look-ahead decision time (default 56.417 us)')
    g.add_argument('--to-remap-per-core-us', type=float, help='re-mapping check per core (default 64.54 us)')
    g.add_argument('--to-vf', type=float, dest='to_vf_ms', help='V-f switch latency (default 12.025 ms)')
    g.add_argument('--to-migration', type=float, dest='to_remap_migration_ms',
                   help='task migration time, at most --to-vf (default 3.75 ms)')
    g.add_argument('--asymmetric-vf', action=argparse.BooleanOptionalAction, default=None,
                   help='scaling down is faster than scaling up (default off)')
    g.add_argument('--scale-down-saving', type=float, dest='scale_down_saving_ms',
                   help='scale-down latency saving with --asymmetric-vf (default 0.342 ms)')


def _add_execution_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group('execution')
    g.add_argument('--exec-kind', choices=EXECUTION_KINDS, dest='exec_kind',
                   help='actual execution times: uniform in [2C/3, C] or equal to C (default uniform)')
    g.add_argument('--overrun-prob', type=float, dest='overrun_probability',
                   help='probability that an HC task overruns C^LO (default 0)')
    g.add_argument('--periods', type=int, help='consecutive periods to simulate (default 1)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='mcpp', description='Peak-power and temperature aware mixed-criticality scheduling simulator')
    parser.add_argument('--config', help='JSON config file; flags override its values')
    parser.add_argument('--log-dir', help='directory of the session log file (default logs/)')
    parser.add_argument('--no-log-file', action='store_true', help='log to the console only')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug output on the console')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('generate', help='generate a random task graph')
    p.add_argument('--cores', type=int, dest='n_cores', help='number of cores c (default 8)')
    _add_generation_flags(p)
    p.add_argument('--seed', type=int, help='generator seed (default 0)')
    p.add_argument('--out', default='graph.json', help='output graph file (default graph.json)')
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser('tables', help='build the LO and HI static schedule tables of a graph')
    p.add_argument('--graph', required=True, help='task graph file')
    _add_platform_flags(p)
    p.add_argument('--out', default='tables.json', help='output tables file (default tables.json)')
    p.set_defaults(handler=cmd_tables)

    p = sub.add_parser('run', help='simulate one graph under one policy')
    p.add_argument('--graph', required=True, help='task graph file')
    p.add_argument('--tables', help='prebuilt tables file (default: build them)')
    _add_platform_flags(p)
    _add_policy_flags(p)
    _add_overhead_flags(p)
    _add_execution_flags(p)
    p.add_argument('--seed', type=int, default=0, help='seed of the actual execution times (default 0)')
    p.add_argument('--sample-ms', type=float, default=1.0, help='trace sampling interval (default 1 ms)')
    p.add_argument('--out', default='output', help='output directory (default output/)')
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser('sweep', help='run an experiment scenario over many paired graphs')
    p.add_argument('--scenario', choices=PRESETS, help='experiment preset (default single)')
    _add_platform_flags(p)
    _add_generation_flags(p)
    _add_policy_flags(p)
    _add_overhead_flags(p)
    _add_execution_flags(p)
    p.add_argument('--repetitions', type=int, help='graphs per cell (default 10)')
    p.add_argument('--base-seed', type=int, help='root of the paired seed tree (default 0)')
    p.add_argument('--workers', type=int, help='parallel worker processes (default 1)')
    p.add_argument('--out', dest='output_dir', help='results directory (default results/)')
    p.set_defaults(handler=cmd_sweep)
    return parser


def _pick(args: argparse.Namespace, names) -> Dict:
    return {name: getattr(args, name, None) for name in names}


def _generation(args, config) -> GenParams:
    names = ('n_cores', 'utilization_range', 'edge_percent', 'n_tasks', 'hc_fraction', 'wcet_ratio_range',
             'period', 'deadline', 'power_distribution', 'seed')
    overrides = _pick(args, names)
    if getattr(args, 'cores', None) is not None:
        overrides['n_cores'] = args.cores
    return GenParams.from_dict(merge_overrides(config.get('generation', {}), overrides)).validate()


def _platform(args, config) -> Platform:
    section = merge_overrides(config.get('platform', {}), {'name': args.platform, 'n_cores': args.cores})
    unknown = set(section) - set(PLATFORM_KEYS)
    if unknown:
        raise ConfigError(f"Unknown platform keys: {sorted(unknown)}")
    return resolve_platform(section.get('name', 'big-little'), section.get('n_cores'))


def _policy(args, config) -> PolicyConfig:
    names = ('kind', 'k', 'alpha', 'beta', 'gamma', 'remap_enabled', 'deduct_overheads')
    return PolicyConfig.from_dict(merge_overrides(config.get('policy', {}), _pick(args, names)))


def _overheads(args, config) -> OverheadModel:
    names = ('to_lookahead_us', 'to_remap_per_core_us', 'to_vf_ms', 'to_remap_migration_ms',
             'asymmetric_vf', 'scale_down_saving_ms')
    values = merge_overrides(config.get('overheads', {}), _pick(args, names))
    # a smaller V-f latency alone also bounds the default migration time
    if 'to_vf_ms' in values and 'to_remap_migration_ms' not in values:
        values['to_remap_migration_ms'] = min(values['to_vf_ms'], OverheadModel.to_remap_migration_ms)
    return OverheadModel.from_dict(values)


def _execution(args, config) -> ExecutionModel:
    overrides = {'kind': args.exec_kind, 'overrun_probability': args.overrun_probability}
    return ExecutionModel.from_dict(merge_overrides(config.get('execution', {}), overrides))


def _thermal(config) -> Optional[Dict]:
    section = config.get('thermal')
    if not section:
        return None
    try:
        return {CoreKind(kind): ThermalParams.from_dict(values) for kind, values in section.items()}
    except ValueError as e:
        raise ConfigError(f"Invalid thermal section: {e}") from e


def _experiment(args, config) -> Dict:
    overrides = _pick(args, ('repetitions', 'base_seed', 'workers', 'periods', 'output_dir', 'scenario'))
    section = merge_overrides(config.get('experiment', {}), overrides)
    unknown = set(section) - set(EXPERIMENT_KEYS)
    if unknown:
        raise ConfigError(f"Unknown experiment keys: {sorted(unknown)}")
    return section


def _load_valid_graph(path: str):
    if not validate_json_file(path, GRAPH_SCHEMA):
        raise ConfigError(f"Cannot use graph file {path}")
    graph = load_graph(path)
    violations = validate(graph)
    if violations:
        raise ConfigError(f"{path}: {violations[0].message} ({len(violations)} violations)")
    return graph


def cmd_generate(args, config) -> int:
    logger = AppLogger.get_logger()
    params = _generation(args, config)
    graph = generate(params)
    violations = validate(graph, params.power_envelope)
    if violations:
        raise ConfigError(f"Generated graph violates {violations[0].rule}: {violations[0].message}")
    out_dir = os.path.dirname(os.path.abspath(args.out))
    if not validate_output_dir(out_dir):
        raise ConfigError(f"Cannot write to {out_dir}")
    save_graph(graph, args.out)
    logger.info(f"Graph with {len(graph)} tasks (U={graph.utilization():.3f}) written to {args.out}")
    return EXIT_OK


def cmd_tables(args, config) -> int:
    logger = AppLogger.get_logger()
    graph = _load_valid_graph(args.graph)
    platform = _platform(args, config)
    sch_lo, sch_hi = build_tables(graph, platform)
    for table in (sch_lo, sch_hi):
        for v in check_table(graph, table, platform):
            logger.warning(f"{table.mode.value} table: {v.message}")
    save_tables(sch_lo, sch_hi, args.out)
    logger.info(f"Tables written to {args.out} ({len(sch_hi.dropped_lc)} LC tasks dropped in HI mode)")
    return EXIT_OK


def cmd_run(args, config) -> int:
    _load_valid_graph(args.graph)
    if args.tables and not validate_json_file(args.tables):
        raise ConfigError(f"Cannot use tables file {args.tables}")
    if not validate_output_dir(args.out):
        raise ConfigError(f"Cannot write to {args.out}")
    periods = args.periods if args.periods is not None else config.get('experiment', {}).get('periods', 1)
    analyzer = RunAnalyzer(args.graph, _platform(args, config), args.tables, _policy(args, config),
                           _overheads(args, config), _execution(args, config), _thermal(config),
                           sample_ms=args.sample_ms)
    result = analyzer.analyze_and_export(args.out, seed=args.seed, periods=periods)
    print(result['metrics'].summary_line())
    return EXIT_OK


def cmd_sweep(args, config) -> int:
    experiment = _experiment(args, config)
    platform_section = merge_overrides(config.get('platform', {}), {'name': args.platform})
    base = _generation(args, config)
    spec = ExperimentSpec.preset(
        experiment.pop('scenario', 'single'), base=base, policy=_policy(args, config),
        overheads=_overheads(args, config), execution=_execution(args, config),
        platform=platform_section.get('name', 'big-little'), **experiment)
    output_file = ExperimentManager(spec).analyze_and_export()
    print(output_file)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    log_dir = None if args.no_log_file else (args.log_dir or os.environ.get('MCPP_LOG_DIR', 'logs'))
    logger = AppLogger.configure(log_dir, logging.DEBUG if args.verbose else logging.INFO)
    try:
        config = load_config(args.config)
        return args.handler(args, config)
    except MCPPError as e:
        logger.error(f"{type(e).__name__}: {e}")
        logger.debug("Full error details:", exc_info=True)
        return e.exit_code


if __name__ == '__main__':
    sys.exit(main())
