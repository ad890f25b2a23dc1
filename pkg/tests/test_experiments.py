import csv

import numpy as np
import pytest

from blocksparse.experiments import (CSV_COLUMNS, HarnessConfig, UsageError,
                                     admm_formula_entries, read_csv_without_timing,
                                     resolve_config, run_experiment, write_rows)
from blocksparse.matrixio import read_pgm


def small_cfg(tmp_path, **kw):
    base = dict(seed=0, trials=2, jobs=1, out_dir=str(tmp_path))
    base.update(kw)
    return HarnessConfig(**base)


def test_unknown_experiment_raises():
    with pytest.raises(UsageError):
        run_experiment("mystery-sweep", HarnessConfig())
    with pytest.raises(UsageError):
        resolve_config("mystery-sweep", HarnessConfig())


def test_write_rows_validates_columns(tmp_path):
    with pytest.raises(ValueError):
        write_rows(tmp_path / "r.csv", [{"schema_version": "1", "experiment": "x",
                                        "trial": 0, "seed": 0, "bogus": 1}])
    with pytest.raises(ValueError):
        write_rows(tmp_path / "r.csv", [{"experiment": "x"}])


def test_write_rows_schema_header(tmp_path):
    path = tmp_path / "r.csv"
    write_rows(path, [{"schema_version": "1", "experiment": "x", "trial": 0, "seed": 0}])
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    assert tuple(header) == CSV_COLUMNS


def test_admm_formula():
    assert admm_formula_entries(10, 100, 5) == 204 * 100 * 5
    assert admm_formula_entries(2, 16, 1) == 12 * 16


def test_memory_benchmark_rows(tmp_path):
    cfg = small_cfg(tmp_path)
    path = run_experiment("memory-benchmark", cfg)
    rows = list(csv.DictReader(open(path, newline="")))
    fbs = rows[0]
    n, frames = 16 * 16, 4
    assert int(fbs["fbs_measured_entries"]) == 4 * n * frames
    assert int(fbs["admm_formula_entries"]) == admm_formula_entries(10, n, frames)
    assert float(fbs["memory_ratio"]) == pytest.approx(51.0)
    admm = rows[1]
    assert int(admm["admm_measured_entries"]) == 2 * 100 * n
    sides = [int(r["clique_side"]) for r in rows[2:]]
    assert sides == [4, 16]
    assert all(float(r["per_iter_seconds"]) > 0 for r in rows[2:])
    assert (tmp_path / "memory_observed_f0.pgm").exists()


def test_rpca_experiment_rows_and_images(tmp_path):
    cfg = small_cfg(tmp_path, trials=1)
    path = run_experiment("rpca-decompose", cfg)
    rows = list(csv.DictReader(open(path, newline="")))
    assert len(rows) == 1
    row = rows[0]
    assert row["failed"] == "0"
    assert float(row["f_measure"]) > 0.5
    assert row["rank_est"] == "2"
    assert row["objective_monotone"] == "1"
    for name in ("rpca_observed_f0.pgm", "rpca_foreground_f0.pgm",
                 "rpca_background_f0.pgm", "rpca_foreground.bsm"):
        assert (tmp_path / name).exists()
    img, maxval = read_pgm(tmp_path / "rpca_observed_f0.pgm")
    assert img.shape == (32, 32) and maxval == 255


def test_rpca_rejects_admm_solver(tmp_path):
    with pytest.raises(UsageError):
        run_experiment("rpca-decompose", small_cfg(tmp_path, solver="admm"))


def test_blocktv_experiment_grid(tmp_path):
    cfg = small_cfg(tmp_path, trials=1, lam=0.1)
    path = run_experiment("blocktv-denoise", cfg)
    rows = list(csv.DictReader(open(path, newline="")))
    # one lambda, two clique sides (2 and the l=1 baseline), one trial
    assert len(rows) == 2
    assert sorted(int(r["clique_side"]) for r in rows) == [1, 2]
    assert all(float(r["psnr_gain_db"]) > 0 for r in rows)
    assert (tmp_path / "tv_noisy.pgm").exists()


def test_cs_sweep_rows_failure_isolated(tmp_path):
    # single ratio point, tiny trial count to stay fast
    cfg = small_cfg(tmp_path, trials=2, m_over_k=3.0, k_sparsity=12)
    path = run_experiment("cs-recovery-sweep", cfg)
    rows = list(csv.DictReader(open(path, newline="")))
    assert len(rows) == 2
    assert all(r["experiment"] == "cs-recovery-sweep" for r in rows)
    assert all(r["m"] == "36" for r in rows)


def test_determinism_excluding_timing(tmp_path):
    a_dir = tmp_path / "a"
    b_dir = tmp_path / "b"
    pa = run_experiment("rpca-decompose", small_cfg(a_dir, trials=1))
    pb = run_experiment("rpca-decompose", small_cfg(b_dir, trials=1))
    assert read_csv_without_timing(pa) == read_csv_without_timing(pb)


def test_jobs_do_not_change_results(tmp_path):
    p1 = run_experiment("blocktv-denoise",
                        small_cfg(tmp_path / "j1", trials=2, lam=0.1, jobs=1))
    p2 = run_experiment("blocktv-denoise",
                        small_cfg(tmp_path / "j2", trials=2, lam=0.1, jobs=3))
    assert read_csv_without_timing(p1) == read_csv_without_timing(p2)


def test_resolve_config_defaults():
    resolved = resolve_config("memory-benchmark", HarnessConfig())
    assert resolved["clique_side"] == 10
    resolved = resolve_config("rpca-decompose", HarnessConfig())
    assert resolved["clique_side"] == 2
    assert resolved["lam"] == pytest.approx(1.0 / (2 * 32))
    resolved = resolve_config("cs-recovery-sweep", HarnessConfig())
    assert resolved["m_over_k"] == [1.0, 2.0, 3.0, 4.0, 5.0]


def test_config_validation():
    with pytest.raises(Exception):
        HarnessConfig(trials=0)
    with pytest.raises(Exception):
        HarnessConfig(jobs=0)
