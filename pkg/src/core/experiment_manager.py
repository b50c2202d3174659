# src/core/experiment_manager.py
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import json
import logging
import os
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
from openpyxl import Workbook

from .config import ExecutionModel, OverheadModel, PolicyConfig, PolicyKind
from .errors import ConfigError, DeadlineMissError, GenerationError, MCPPError, UnschedulableError
from .formatters.comparison_formatter import ComparisonFormatter
from .generator import GenParams, generate
from .platform import resolve_platform
from .schedule import save_tables
from .static_scheduler import build_tables
from .statistics.comparison import ComparisonCalculator, compare, paired_reduction
from .statistics.metrics import Metrics, metrics_frame
from .statistics.optimal_k import optimal_k, sweep_means
from .engine.simulator import Simulator
from .taskgraph import save_graph

REFERENCE_POLICY = PolicyConfig(kind=PolicyKind.STATIC_MAX)
PRESETS = ('varying-c', 'varying-u', 'varying-n', 'varying-d', 'alpha-beta', 'k-sweep', 'ablation', 'single')
RESULT_FILE = 'result.json'


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str
    generation: Tuple[GenParams, ...]
    policies: Tuple[PolicyConfig, ...]
    overheads: OverheadModel = field(default_factory=OverheadModel)
    platform: str = 'big-little'
    repetitions: int = 10
    base_seed: int = 0
    output_dir: str = 'results'
    periods: int = 1
    execution: ExecutionModel = field(default_factory=ExecutionModel)
    workers: int = 1

    def validate(self) -> 'ExperimentSpec':
        if not self.generation:
            raise ConfigError("Experiment needs at least one generation setting")
        if not self.policies:
            raise ConfigError("Experiment needs at least one policy")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.periods < 1:
            raise ConfigError(f"periods must be >= 1, got {self.periods}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        labels = [p.label() for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"Duplicate policies in experiment: {labels}")
        for params in self.generation:
            params.validate()
        for policy in self.policies:
            policy.validate()
        self.overheads.validate()
        self.execution.validate()
        return self

    def seeds(self, cell_index: int, repetition: int) -> Tuple[int, int]:
        """(graph seed, run seed) of one repetition; independent of worker scheduling."""
        state = np.random.SeedSequence([self.base_seed, cell_index, repetition]).generate_state(2)
        return int(state[0]), int(state[1])

    def to_dict(self) -> Dict:
        return {
            'scenario': self.scenario,
            'generation': [g.to_dict() for g in self.generation],
            'policies': [p.to_dict() for p in self.policies],
            'overheads': self.overheads.to_dict(),
            'platform': self.platform,
            'repetitions': self.repetitions,
            'base_seed': self.base_seed,
            'output_dir': self.output_dir,
            'periods': self.periods,
            'execution': self.execution.to_dict(),
            'workers': self.workers,
        }

    @classmethod
    def preset(cls, scenario: str, base: Optional[GenParams] = None,
               policy: Optional[PolicyConfig] = None, **kwargs) -> 'ExperimentSpec':
        """Experiment configurations of the evaluation scenarios."""
        base = base or GenParams()
        policy = policy or PolicyConfig()
        baselines = (policy, replace(policy, kind=PolicyKind.IMMEDIATE_NEXT))

        if scenario == 'varying-c':
            grid = [replace(base, n_cores=c) for c in (2, 4, 8, 16)]
            policies = baselines
        elif scenario == 'varying-u':
            grid = [replace(base, utilization_range=r)
                    for r in ((0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0))]
            policies = baselines
        elif scenario == 'varying-n':
            grid = [replace(base, n_tasks=n) for n in (30, 40, 50, 80)]
            policies = baselines
        elif scenario == 'varying-d':
            grid = [replace(base, edge_percent=d) for d in (0.01, 0.10, 0.20)]
            policies = baselines
        elif scenario == 'alpha-beta':
            grid = [base]
            policies = tuple(replace(policy, alpha=a, beta=1.0 - a) for a in (0.0, 0.25, 0.5, 0.75, 1.0))
        elif scenario == 'k-sweep':
            grid = [replace(base, edge_percent=d) for d in (0.01, 0.10, 0.20)]
            policies = tuple(replace(policy, k=k) for k in range(1, 11))
        elif scenario == 'ablation':
            grid = [replace(base, n_cores=c, n_tasks=n) for c in (2, 4, 8, 16) for n in (30, 40, 50, 80)]
            policies = (policy, replace(policy, deduct_overheads=False))
        elif scenario == 'single':
            grid = [base]
            policies = (policy,)
        else:
            raise ConfigError(f"Unknown scenario {scenario!r}; choose one of {PRESETS}")
        return cls(scenario=scenario, generation=tuple(grid), policies=tuple(policies), **kwargs).validate()


def cell_label(params: GenParams) -> str:
    low, high = params.utilization_range
    return f"c{params.n_cores}-u{low:g}-{high:g}-d{params.edge_percent:g}-n{params.n_tasks}"


def _simulate(graph, tables, platform, policy: PolicyConfig, job: Mapping, run_seed: int) -> Dict:
    simulator = Simulator(graph, tables, platform, policy, OverheadModel.from_dict(job['overheads']),
                          ExecutionModel.from_dict(job['execution']))
    try:
        _, metrics = simulator.run(run_seed, job['periods'])
    except DeadlineMissError as e:
        return {'status': 'miss', 'message': str(e), 'task': e.task_id}
    return {'status': 'success', 'metrics': metrics.to_dict()}


def run_repetition(job: Mapping) -> Dict:
    """One graph of one cell under the reference policy and every compared policy.

    Module level so it can be shipped to worker processes.
    """
    logger = logging.getLogger('MCPeakPower')
    out_dir = job['out_dir']
    result_path = os.path.join(out_dir, RESULT_FILE)
    if os.path.exists(result_path):
        with open(result_path, 'r', encoding='utf-8') as fh:
            cached = json.load(fh)
        cached['cached'] = True
        return cached

    os.makedirs(out_dir, exist_ok=True)
    result = {'cell': job['cell'], 'repetition': job['repetition'], 'graph_seed': job['graph_seed'],
              'run_seed': job['run_seed'], 'runs': {}}
    try:
        params = replace(GenParams.from_dict(job['generation']), seed=job['graph_seed'])
        graph = generate(params)
        platform = resolve_platform(job['platform'], params.n_cores)
        tables = build_tables(graph, platform)
        save_graph(graph, os.path.join(out_dir, 'graph.json'))
        save_tables(*tables, os.path.join(out_dir, 'tables.json'))

        for policy_dict in [REFERENCE_POLICY.to_dict()] + list(job['policies']):
            policy = PolicyConfig.from_dict(policy_dict)
            result['runs'][policy.label()] = _simulate(graph, tables, platform, policy, job, job['run_seed'])
        result['status'] = 'success'
    except (GenerationError, UnschedulableError) as e:
        logger.warning(f"Skipping {job['cell']} repetition {job['repetition']}: {e}")
        result.update({'status': 'skipped', 'message': str(e)})
    except MCPPError as e:
        logger.error(f"Error in {job['cell']} repetition {job['repetition']}: {e}", exc_info=True)
        result.update({'status': 'error', 'message': str(e)})

    with open(result_path, 'w', encoding='utf-8') as fh:
        json.dump(result, fh, sort_keys=True, indent=2)
        fh.write('\n')
    return result


class ExperimentManager:
    def __init__(self, spec: ExperimentSpec):
        self.logger = logging.getLogger('MCPeakPower')
        self.spec = spec.validate()
        self.results: List[Dict] = []

        self.logger.info("\n" + "=" * 80)
        self.logger.info(f"EXPERIMENT SETUP: {spec.scenario}")
        self.logger.info(f"Cells: {len(spec.generation)}, repetitions: {spec.repetitions}, "
                         f"policies: {len(spec.policies)}, workers: {spec.workers}")
        self.logger.info("-" * 80)
        for params in spec.generation:
            self.logger.info(f"Cell {cell_label(params)}")
        for policy in spec.policies:
            self.logger.info(f"Policy {policy.label()}")
        self.logger.info("=" * 80)

    def jobs(self) -> List[Dict]:
        spec = self.spec
        jobs = []
        for index, params in enumerate(spec.generation):
            cell = cell_label(params)
            for rep in range(spec.repetitions):
                graph_seed, run_seed = spec.seeds(index, rep)
                jobs.append({
                    'cell': cell,
                    'repetition': rep,
                    'graph_seed': graph_seed,
                    'run_seed': run_seed,
                    'generation': params.to_dict(),
                    'policies': [p.to_dict() for p in spec.policies],
                    'overheads': spec.overheads.to_dict(),
                    'execution': spec.execution.to_dict(),
                    'platform': spec.platform,
                    'periods': spec.periods,
                    'out_dir': os.path.join(spec.output_dir, spec.scenario, cell, f"rep_{rep:03d}"),
                })
        return jobs

    def run(self) -> List[Dict]:
        jobs = self.jobs()
        self.logger.info(f"Running {len(jobs)} repetitions")
        if self.spec.workers > 1:
            with ProcessPoolExecutor(max_workers=self.spec.workers) as pool:
                self.results = list(pool.map(run_repetition, jobs))
        else:
            self.results = [run_repetition(job) for job in jobs]
        cached = sum(1 for r in self.results if r.get('cached'))
        if cached:
            self.logger.info(f"Reused {cached} completed repetitions")
        return self.results

    def paired_policies(self) -> List[Tuple[PolicyConfig, PolicyConfig]]:
        """Each proposed policy with the first immediate-next policy of the experiment."""
        immediate = [p for p in self.spec.policies if p.kind == PolicyKind.IMMEDIATE_NEXT]
        if not immediate:
            return []
        return [(p, immediate[0]) for p in self.spec.policies if p.kind == PolicyKind.PROPOSED]

    def _reduction_rows(self, cell: str, completed: List[Dict]) -> List[Dict]:
        rows = []
        for policy, counterpart in self.paired_policies():
            proposed, immediate = [], []
            for r in completed:
                run, base = r['runs'].get(policy.label(), {}), r['runs'].get(counterpart.label(), {})
                if run.get('status') == 'success' and base.get('status') == 'success':
                    proposed.append(Metrics.from_dict(run['metrics']))
                    immediate.append(Metrics.from_dict(base['metrics']))
            if not proposed:
                continue
            for row in paired_reduction(proposed, immediate).to_dict('records'):
                rows.append({'cell': cell, 'policy': policy.label(), 'baseline': counterpart.label(), **row})
        return rows

    def summarize(self) -> Dict[str, pd.DataFrame]:
        """Normalized ratios per cell and policy, paired reductions against immediate-next and miss rates."""
        calculator = ComparisonCalculator()
        reference = REFERENCE_POLICY.label()
        rows, miss_rows, reduction_rows = [], [], []
        for cell in dict.fromkeys(r['cell'] for r in self.results):
            cell_results = [r for r in self.results if r['cell'] == cell]
            completed = [r for r in cell_results if r.get('status') == 'success']
            reduction_rows.extend(self._reduction_rows(cell, completed))
            for policy in self.spec.policies:
                label = policy.label()
                reports, missed = [], 0
                for r in completed:
                    run, base = r['runs'].get(label, {}), r['runs'].get(reference, {})
                    if run.get('status') == 'miss':
                        missed += 1
                        continue
                    if run.get('status') != 'success' or base.get('status') != 'success':
                        continue
                    candidate = Metrics.from_dict(run['metrics'])
                    missed += int(candidate.deadline_miss_count > 0)
                    reports.append(compare(Metrics.from_dict(base['metrics']), candidate))
                miss_rows.append({
                    'cell': cell, 'policy': label, 'runs': len(completed),
                    'skipped': len(cell_results) - len(completed), 'missed': missed,
                    'miss_rate': missed / len(completed) if completed else float('nan'),
                })
                result = calculator.calculate(reports)
                if result['status'] != 'success':
                    self.logger.error(f"Aggregation failed for {cell} / {label}: {result['message']}")
                    continue
                self.logger.info(f"{cell} / {label}: {result['interpretation']}")
                for row in result['table'].to_dict('records'):
                    rows.append({'cell': cell, 'policy': label, 'baseline': reference, **row})
        summary = pd.DataFrame(rows, columns=['cell', 'policy', 'baseline', 'metric', 'mean', 'std',
                                              'ci_low', 'ci_high', 'n', 'impact'])
        misses = pd.DataFrame(miss_rows, columns=['cell', 'policy', 'runs', 'skipped', 'missed', 'miss_rate'])
        reductions = pd.DataFrame(reduction_rows, columns=['cell', 'policy', 'baseline', 'metric', 'mean', 'std',
                                                           'ci_low', 'ci_high', 'n', 'impact'])
        return {'summary': summary, 'misses': misses, 'reductions': reductions}

    def runs_frame(self) -> pd.DataFrame:
        """One row per completed run: pairing keys, cell, repetition and raw metrics."""
        runs, where = [], []
        for r in self.results:
            if r.get('status') != 'success':
                continue
            for _, run in sorted(r['runs'].items()):
                if run.get('status') == 'success':
                    runs.append(Metrics.from_dict(run['metrics']))
                    where.append({'cell': r['cell'], 'repetition': r['repetition']})
        rows = [{**loc, **row} for loc, row in zip(where, metrics_frame(runs))]
        return pd.DataFrame(rows)

    def k_sweep(self, summary: pd.DataFrame) -> Tuple[pd.DataFrame, Optional[int]]:
        """Mean normalized peak power per k over all cells and the selected k."""
        by_k: Dict[int, List[float]] = {}
        peaks = summary[summary['metric'] == 'peak_system_power']
        for policy in self.spec.policies:
            values = peaks.loc[peaks['policy'] == policy.label(), 'mean'].dropna().tolist()
            if values:
                by_k.setdefault(policy.effective().k, []).extend(values)
        if not by_k:
            return pd.DataFrame(columns=['k', 'mean_peak_ratio']), None
        means = sweep_means(by_k)
        frame = pd.DataFrame(sorted(means.items()), columns=['k', 'mean_peak_ratio'])
        return frame, optimal_k(by_k)

    def analyze_and_export(self) -> str:
        """Run every repetition and write summary.csv, reductions.csv and summary.xlsx"""
        try:
            out_dir = os.path.join(self.spec.output_dir, self.spec.scenario)
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, 'experiment.json'), 'w', encoding='utf-8') as fh:
                json.dump(self.spec.to_dict(), fh, sort_keys=True, indent=2)
                fh.write('\n')

            self.run()
            tables = self.summarize()
            summary, misses = tables['summary'], tables['misses']
            summary.to_csv(os.path.join(out_dir, 'summary.csv'), index=False)
            misses.to_csv(os.path.join(out_dir, 'misses.csv'), index=False)
            tables['reductions'].to_csv(os.path.join(out_dir, 'reductions.csv'), index=False)
            self.runs_frame().to_csv(os.path.join(out_dir, 'runs.csv'), index=False)

            wb = Workbook()
            ComparisonFormatter.format_results(wb, summary)
            ComparisonFormatter.format_misses(wb, misses)
            if not tables['reductions'].empty:
                ComparisonFormatter.format_reductions(wb, tables['reductions'])
            if self.spec.scenario == 'k-sweep':
                means, k_star = self.k_sweep(summary)
                means.to_csv(os.path.join(out_dir, 'k_sweep.csv'), index=False)
                ComparisonFormatter.format_k_sweep(wb, means, k_star)
                self.logger.info(f"Selected look-ahead depth k* = {k_star}")

            output_file = os.path.join(out_dir, 'summary.xlsx')
            wb.save(output_file)
            self.logger.info(f"Experiment results exported to {output_file}")
            return output_file

        except Exception as e:
            self.logger.error(f"Error in analyze_and_export: {str(e)}")
            raise
