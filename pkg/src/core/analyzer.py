# src/core/analyzer.py
import os
from typing import Dict, Optional

from openpyxl import Workbook

from ..utils.logger import AppLogger
from .config import ExecutionModel, OverheadModel, PolicyConfig
from .engine.simulator import Simulator
from .errors import ConfigError, UnschedulableError
from .formatters.metrics_formatter import MetricsFormatter
from .platform import Platform
from .schedule import load_tables, save_tables
from .static_scheduler import build_tables, check_table
from .taskgraph import load_graph, validate


class RunAnalyzer:
    """Loads a graph, obtains its tables, simulates one policy and exports the results."""

    def __init__(self, graph_file: str, platform: Platform, tables_file: Optional[str] = None,
                 policy: Optional[PolicyConfig] = None, overheads: Optional[OverheadModel] = None,
                 execution: Optional[ExecutionModel] = None, thermal_params=None, sample_ms: float = 1.0):
        self.logger = AppLogger.get_logger()
        self.logger.info(f"Initializing RunAnalyzer with {graph_file}")
        self.platform = platform
        self.policy = policy or PolicyConfig()
        self.overheads = overheads or OverheadModel()
        self.execution = execution or ExecutionModel()
        self.thermal_params = thermal_params
        self.sample_ms = sample_ms

        self.logger.info("\n" + "=" * 80)
        self.logger.info("INPUT PARAMETERS")
        self.logger.info(f"Platform: {platform.name} ({platform.n_cores} cores, {len(platform.clusters)} clusters)")
        self.logger.info(f"Policy: {self.policy.label()}")
        self.logger.info(f"Overheads: {self.overheads.to_dict()}")
        self.logger.info("=" * 80)

        try:
            self.graph = load_graph(graph_file)
            violations = validate(self.graph)
            if violations:
                for v in violations:
                    self.logger.error(f"Graph violation [{v.rule}] {v.message}")
                raise ConfigError(f"{graph_file} holds an invalid task graph ({len(violations)} violations)")
            self.logger.info(f"Loaded graph: {len(self.graph)} tasks, {len(self.graph.edges())} edges, "
                             f"U={self.graph.utilization():.3f}")

            if tables_file:
                self.tables = load_tables(tables_file)
                for table in self.tables:
                    violations = check_table(self.graph, table, platform, self.overheads)
                    if violations:
                        first = violations[0]
                        raise UnschedulableError(f"{tables_file}: {first.message}", first.task_id)
                self.logger.info(f"Loaded tables from {tables_file}")
            else:
                self.tables = build_tables(self.graph, platform)
                self.logger.info(f"Built tables: {len(self.tables[0])} LO entries, {len(self.tables[1])} HI entries, "
                                 f"{len(self.tables[1].dropped_lc)} LC tasks dropped in HI mode")

        except Exception as e:
            self.logger.error(f"Error initializing analyzer: {str(e)}")
            self.logger.error("Full error details:", exc_info=True)
            raise

    def analyze_and_export(self, output_dir: str = 'output', seed: int = 0, periods: int = 1) -> Dict:
        try:
            self.logger.info("Starting simulation")
            os.makedirs(output_dir, exist_ok=True)

            simulator = Simulator(self.graph, self.tables, self.platform, self.policy, self.overheads,
                                  self.execution, self.thermal_params, sample_ms=self.sample_ms)
            trace, metrics = simulator.run(seed, periods)

            csv_path, events_path = trace.save(output_dir)
            metrics_path = metrics.save(os.path.join(output_dir, 'metrics.json'))
            tables_path = save_tables(*self.tables, os.path.join(output_dir, 'tables.json'))

            wb = Workbook()
            MetricsFormatter.format_results(wb, metrics)
            workbook_path = os.path.join(output_dir, 'metrics.xlsx')
            wb.save(workbook_path)

            self.logger.info(f"Simulation completed: {metrics.summary_line()}")
            return {
                'metrics': metrics,
                'trace': csv_path,
                'events': events_path,
                'metrics_file': metrics_path,
                'tables': tables_path,
                'workbook': workbook_path,
            }

        except Exception as e:
            self.logger.error(f"Error during simulation: {str(e)}")
            self.logger.error("Full error details:", exc_info=True)
            raise
