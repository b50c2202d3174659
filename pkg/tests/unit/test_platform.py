import pytest

from src.core.errors import ConfigError, DomainError
from src.core.platform import (
    CoreKind, Platform, VfLevel, power, power_ratio, quantize_up, resolve_platform, scaling_factors,
    task_power_at_level,
)
from src.core.taskgraph import build_graph


def _level(cluster, mhz):
    return next(lvl for lvl in cluster.vf_table if lvl.frequency == mhz * 1_000_000)


def test_odroid_layout(odroid):
    assert odroid.n_cores == 8
    assert [c.core_kind for c in odroid.clusters] == [CoreKind.LITTLE, CoreKind.BIG]
    assert odroid.siblings(5) == [4, 6, 7]
    assert len(odroid.cluster(0).vf_table) == 13
    assert len(odroid.cluster(1).vf_table) == 19
    assert odroid.cluster(1).max_level.voltage == pytest.approx(1.3625)


def test_little_table_shares_top_voltage(little_cluster):
    top_four = [lvl.voltage for lvl in little_cluster.vf_table[-4:]]
    assert top_four == [1.3] * 4
    assert _level(little_cluster, 700).voltage == pytest.approx(1.122222)


def test_scaling_factors(little_cluster):
    rho1, rho2 = scaling_factors(little_cluster, _level(little_cluster, 700))
    assert rho1 == pytest.approx(0.5)
    assert rho2 == pytest.approx(1.122222 / 1.3)
    with pytest.raises(DomainError):
        scaling_factors(little_cluster, VfLevel(750_000_000, 1.1))


def test_power_at_top_level_matches_calibration(odroid):
    assert odroid.cluster(0).power_params.max_power() == pytest.approx(0.940)
    assert odroid.cluster(1).power_params.max_power() == pytest.approx(7.622)


def test_power_hand_value(little_cluster):
    rho2 = 1.122222 / 1.3
    expected = 0.141 * rho2 + 0.705 * rho2 ** 2 * 0.5 + 0.094
    assert power(little_cluster.power_params, 0.5, rho2) == pytest.approx(expected, rel=1e-6)


def test_power_rejects_scaling_out_of_range(little_cluster):
    with pytest.raises(DomainError):
        power(little_cluster.power_params, 1.2, 1.0)
    with pytest.raises(DomainError):
        power(little_cluster.power_params, 0.0, 0.5)


def test_power_is_monotone_in_level(odroid):
    for cluster in odroid.clusters:
        values = [power_ratio(cluster.power_params, lvl) for lvl in cluster.vf_table]
        assert values == sorted(values)
        assert values[-1] == pytest.approx(1.0)


def test_task_power_scales_from_peak(little_cluster):
    task = build_graph([{'id': 0, 'wcet_lo': 10, 'peak_power': {'LITTLE': 0.8}}], period=50).task(0)
    level = _level(little_cluster, 700)
    ratio = power_ratio(little_cluster.power_params, level)
    assert task_power_at_level(task, CoreKind.LITTLE, level) == pytest.approx(0.8 * ratio)
    assert task_power_at_level(task, 'LITTLE', little_cluster.max_level) == pytest.approx(0.8)


@pytest.mark.parametrize('f_req, expected_mhz', [
    (1.05e9, 1100),
    (0.4e9, 400),
    (0.01e9, 200),
    (1.4e9, 1400),
])
def test_quantize_up(little_cluster, f_req, expected_mhz):
    assert quantize_up(little_cluster, f_req).frequency == expected_mhz * 1_000_000


def test_quantize_up_above_f_max(little_cluster):
    with pytest.raises(DomainError):
        quantize_up(little_cluster, 1.5e9)


def test_by_name_and_resolution(tmp_path):
    big_little = Platform.by_name('big-little', 5)
    assert [len(c.core_ids) for c in big_little.clusters] == [3, 2]
    homogeneous = Platform.by_name('homogeneous', 3)
    assert all(len(c.core_ids) == 1 for c in homogeneous.clusters)
    with pytest.raises(ConfigError):
        Platform.by_name('odroid-xu3', 4)
    with pytest.raises(ConfigError):
        resolve_platform('mainframe')

    path = tmp_path / 'platform.json'
    big_little.save(str(path))
    assert resolve_platform(str(path)) == big_little


def test_duplicate_core_ids_rejected(little_cluster):
    with pytest.raises(ConfigError):
        Platform('twice', (little_cluster, little_cluster))
