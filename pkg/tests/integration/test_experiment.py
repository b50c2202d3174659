import os

import pandas as pd
import pytest
from openpyxl import load_workbook

from src.core.config import PolicyConfig, PolicyKind
from src.core.errors import ConfigError
from src.core.experiment_manager import ExperimentManager, ExperimentSpec, cell_label, run_repetition
from src.core.generator import GenParams
from src.core.statistics.metrics import RATIO_METRICS

SMALL = GenParams(n_cores=4, n_tasks=12, utilization_range=(0.25, 0.5), edge_percent=0.1)


def test_presets():
    assert len(ExperimentSpec.preset('varying-c').generation) == 4
    assert [g.n_tasks for g in ExperimentSpec.preset('varying-n').generation] == [30, 40, 50, 80]
    alpha_beta = ExperimentSpec.preset('alpha-beta')
    assert all(p.alpha + p.beta == pytest.approx(1.0) for p in alpha_beta.policies)
    assert [p.k for p in ExperimentSpec.preset('k-sweep').policies] == list(range(1, 11))
    ablation = ExperimentSpec.preset('ablation')
    labels = [p.label() for p in ablation.policies]
    assert labels[1] == labels[0] + '-nodeduct'
    assert {g.n_cores for g in ablation.generation} == {2, 4, 8, 16}
    assert {g.n_tasks for g in ablation.generation} == {30, 40, 50, 80}
    assert len(ablation.generation) == 16
    with pytest.raises(ConfigError):
        ExperimentSpec.preset('varying-x')
    with pytest.raises(ConfigError):
        ExperimentSpec.preset('single', repetitions=0)


def test_seeds_are_stable_and_distinct():
    spec = ExperimentSpec.preset('single', base_seed=3)
    assert spec.seeds(0, 1) == ExperimentSpec.preset('single', base_seed=3).seeds(0, 1)
    assert spec.seeds(0, 1) != spec.seeds(0, 2)
    assert spec.seeds(0, 1) != spec.seeds(1, 1)


def test_single_sweep_exports_and_resumes(tmp_path):
    spec = ExperimentSpec.preset('single', base=SMALL, policy=PolicyConfig(k=2), repetitions=2,
                                 output_dir=str(tmp_path), platform='big-little')
    manager = ExperimentManager(spec)
    output = manager.analyze_and_export()
    assert output.endswith('summary.xlsx')

    scenario_dir = tmp_path / 'single'
    summary = pd.read_csv(scenario_dir / 'summary.csv')
    misses = pd.read_csv(scenario_dir / 'misses.csv')
    assert set(summary['baseline']) <= {'static-max'}
    assert (misses['missed'] == 0).all()
    assert os.path.exists(scenario_dir / 'runs.csv')
    assert os.path.exists(scenario_dir / 'experiment.json')
    assert 'Normalized Results' in load_workbook(output).sheetnames

    rerun = ExperimentManager(spec)
    results = rerun.run()
    assert all(r.get('cached') for r in results)
    assert [r['graph_seed'] for r in results] == [r['graph_seed'] for r in manager.results]


def test_repetition_is_written_once(tmp_path):
    spec = ExperimentSpec.preset('single', base=SMALL, repetitions=1, output_dir=str(tmp_path))
    job = ExperimentManager(spec).jobs()[0]
    assert job['cell'] == cell_label(SMALL)
    first = run_repetition(job)
    assert first['status'] in ('success', 'skipped')
    assert os.path.exists(os.path.join(job['out_dir'], 'result.json'))
    assert run_repetition(job)['cached']


def test_small_k_sweep(tmp_path):
    base = GenParams(n_cores=4, n_tasks=12, utilization_range=(0.25, 0.5))
    spec = ExperimentSpec.preset('k-sweep', base=base, repetitions=1, output_dir=str(tmp_path))
    spec = ExperimentSpec(spec.scenario, spec.generation[:1], spec.policies[:3], repetitions=1,
                          output_dir=str(tmp_path))
    manager = ExperimentManager(spec)
    manager.analyze_and_export()
    means = pd.read_csv(tmp_path / 'k-sweep' / 'k_sweep.csv')
    if not means.empty:
        assert set(means['k']) <= {1, 2, 3}
    assert 'K Sweep' in load_workbook(tmp_path / 'k-sweep' / 'summary.xlsx').sheetnames


def test_sweep_reports_paired_reduction_against_immediate_next(tmp_path):
    policies = (PolicyConfig(k=3), PolicyConfig(kind=PolicyKind.IMMEDIATE_NEXT))
    spec = ExperimentSpec('paired', (SMALL,), policies, repetitions=3, output_dir=str(tmp_path))
    manager = ExperimentManager(spec)
    assert [(p.label(), b.label()) for p, b in manager.paired_policies()] == [(policies[0].label(),
                                                                               policies[1].label())]
    output = manager.analyze_and_export()

    reductions = pd.read_csv(tmp_path / 'paired' / 'reductions.csv')
    if reductions.empty:
        pytest.skip('no repetition was schedulable')
    assert set(reductions['policy']) == {policies[0].label()}
    assert set(reductions['baseline']) == {policies[1].label()}
    assert set(reductions['metric']) == set(RATIO_METRICS)
    assert (reductions['ci_low'] <= reductions['mean'] + 1e-12).all()
    assert (reductions['mean'] <= reductions['ci_high'] + 1e-12).all()
    assert 'Paired Reduction' in load_workbook(output).sheetnames
