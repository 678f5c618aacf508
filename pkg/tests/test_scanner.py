import json

import numpy as np
import pytest

from kovtop.scanner import (
    EmptyLevelSet, SampleCloud, ScanConfig, ScanReport, component_count, critical_values_K,
    parse_grid, sample_isoenergy, scan_h, smallest_singular_value,
)
from kovtop.system import OrbitParams, integrals
from oracles import H_num, K_num, f1_num, f2_num

P = OrbitParams(1.0, 2.0, 0.5, 1.0)


@pytest.fixture(scope="module")
def cloud():
    return sample_isoenergy(P, 3000, seed=1)


def test_residuals_rechecked_independently(cloud):
    J, x = cloud.points[:, :3], cloud.points[:, 3:]
    assert np.abs(f1_num(J, x, 1.0) - P.a).max() <= 1e-10
    assert np.abs(f2_num(J, x, 1.0) - P.b).max() <= 1e-10
    assert np.abs(H_num(J, x) - P.h).max() <= 1e-10


def test_determinism_and_worker_independence(cloud):
    again = sample_isoenergy(P, 3000, seed=1)
    assert np.array_equal(cloud.points, again.points)
    threaded = sample_isoenergy(P, 3000, seed=1, batch_size=1000, workers=3)
    serial = sample_isoenergy(P, 3000, seed=1, batch_size=1000, workers=1)
    assert np.array_equal(threaded.points, serial.points)
    assert not np.array_equal(cloud.points, sample_isoenergy(P, 3000, seed=2).points)


def test_empty_level_set():
    # on M^4(1, 0) with kappa = 1 the Hamiltonian is bounded below by -2
    with pytest.raises(EmptyLevelSet):
        sample_isoenergy(OrbitParams(1.0, 1.0, 0.0, -10.0), 500, seed=0)


def test_preconditions():
    with pytest.raises(ValueError):
        sample_isoenergy(OrbitParams(1.0, 2.0, 1.0, 0.0), 10)
    with pytest.raises(ValueError):
        sample_isoenergy(P, 0)


def test_component_count_synthetic():
    rng = np.random.default_rng(0)
    blob = rng.normal(scale=0.1, size=(500, 6))
    two = np.vstack([blob, blob + 10.0])
    assert component_count(two, radius=0.5) == 2
    v = rng.normal(size=(4000, 3))
    sphere = v / np.linalg.norm(v, axis=1, keepdims=True)
    # mean spacing is about sqrt(4 pi / 4000) = 0.056; 0.2 is above the largest gap
    assert component_count(sphere, radius=0.2) == 1
    counts = [component_count(sphere, radius=r) for r in (0.005, 0.01, 0.02, 0.05, 0.1)]
    assert counts == sorted(counts, reverse=True)
    with pytest.raises(ValueError):
        component_count(sphere, radius=0.0)


def test_single_component_at_regular_level(cloud):
    assert component_count(cloud) == 1


def test_critical_values_contain_K_range_endpoints(cloud):
    crit = critical_values_K(P, cloud=cloud)
    k = integrals(cloud.points, 1.0)[:, 3]
    assert crit[0] <= k.min() + 0.01 and crit[-1] >= k.max() - 0.01
    assert np.all(k >= crit[0] - 1e-9) and np.all(k <= crit[-1] + 1e-9)
    other = critical_values_K(P, cloud=sample_isoenergy(P, 3000, seed=2))
    assert len(other) == len(crit) and np.allclose(other, crit, atol=1e-5)


def test_singular_values_and_K_evaluation(cloud):
    z = cloud.points[:50]
    assert np.all(smallest_singular_value(z, P) >= 0)
    k = K_num(z[:, :3], z[:, 3:], 1.0)
    assert np.allclose(k, integrals(z, 1.0)[:, 3])


def test_parse_grid():
    assert parse_grid("0:1:3").tolist() == [0.0, 0.5, 1.0]
    assert parse_grid("2.5").tolist() == [2.5]
    for bad in ("1:0:3", "0:1:0", "a:b:c"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_scan_report(tmp_path):
    seen = []
    rep = scan_h(1.0, 1.0, 0.0, [-10.0, 0.0, 1.0], n=1500, seed=3,
                 on_cloud=lambda i, c: seen.append((i, len(c))))
    assert [r.status for r in rep.rows] == ["EmptyLevelSet", "ok", "ok"]
    assert [i for i, _ in seen] == [1, 2]
    assert rep.rows[1].components == rep.rows[2].components == 1
    assert rep.changes == [0]
    data = json.loads(rep.dumps())
    assert data["schema"] == 1
    assert ScanReport.from_json(data) == rep
    with pytest.raises(ValueError):
        scan_h(1.0, 2.0, 0.5, [1.0, 0.0], n=10)
    singular = scan_h(1.0, 2.0, 1.0, [0.0], n=10)
    assert singular.rows[0].status == "singular-orbit"


def test_csv_dump(tmp_path, cloud):
    path = tmp_path / "c.csv"
    cloud.to_csv(path)
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.allclose(back, cloud.points)


def test_config_defaults():
    cfg = ScanConfig()
    assert (cfg.samples, cfg.tol, cfg.radius_factor, cfg.svd_tol) == (20000, 1e-10, 3.0, 1e-6)
    assert isinstance(SampleCloud(np.zeros((0, 6)), P, 0, 1e-10).residuals(), np.ndarray)
