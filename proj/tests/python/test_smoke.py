import json
import os
import subprocess

import numpy as np
import pytest
from scipy import stats
from sklearn.metrics import f1_score

import distlearn as dl


def test_synthetic_shapes_and_determinism():
    X, y = dl.make_synthetic("blobs", {"n": 120, "k": 3, "dim": 4}, seed=5)
    assert X.shape == (120, 4)
    assert y.shape == (120,)
    assert set(np.unique(y)) == {0, 1, 2}
    X2, y2 = dl.make_synthetic("blobs", {"n": 120, "k": 3, "dim": 4}, seed=5)
    assert np.array_equal(X, X2) and np.array_equal(y, y2)


def test_f1_macro_matches_sklearn():
    rng = np.random.default_rng(0)
    t = rng.integers(0, 4, 200)
    p = rng.integers(0, 4, 200)
    assert dl.f1_macro(t, p, 4) == pytest.approx(f1_score(t, p, average="macro"), abs=1e-12)


def test_wilcoxon_matches_scipy_exact():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = rng.normal(size=12)
        b = rng.normal(size=12) + 0.3
        ours = dl.wilcoxon(a, b)
        ref = stats.wilcoxon(a, b, method="exact")
        assert ours["exact"]
        assert ours["p_value"] == pytest.approx(ref.pvalue, abs=1e-12)


def test_friedman_matches_scipy_asymptotic():
    rng = np.random.default_rng(2)
    v = rng.normal(size=(20, 4))
    ours = dl.friedman(v)
    ref = stats.friedmanchisquare(*v.T)
    assert not ours["exact"]
    assert ours["statistic"] == pytest.approx(ref.statistic, rel=1e-12)
    assert ours["p_value"] == pytest.approx(ref.pvalue, rel=1e-9)


def test_mean_ranks_orientation():
    v = np.array([[0.9, 0.1, 0.5], [0.8, 0.2, 0.3]])
    assert list(dl.mean_ranks(v)) == [1.0, 3.0, 2.0]
    assert list(dl.mean_ranks(v, higher_is_better=False)) == [3.0, 1.0, 2.0]


def test_explanations_of_separable_blobs():
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal(size=(40, 2)) * 0.3 + [10 * c, 0] for c in range(3)])
    for method in ("imm", "cart"):
        out = dl.explain_clusters(X, 3, method=method, seed=4)
        assert out["leaves"] == 3
        assert out["cost_ratio"] == pytest.approx(1.0, abs=1e-9)
    c = dl.explain_clusters(X, 3, method="c_cart", budget=5, seed=4)
    assert c["training_runs"] == 5
    with pytest.raises(ValueError):
        dl.explain_clusters(X, 3, method="nope")


def test_fcnn_subsets_nest():
    X, y = dl.make_synthetic("rings", {"n": 150, "classes": 2, "dim": 2}, seed=6)
    subsets = dl.fcnn1(X, y)
    for a, b in zip(subsets, subsets[1:]):
        assert set(a) < set(b)


def test_oracle_and_forest():
    X, y = dl.make_synthetic("blobs", {"n": 100, "k": 2, "dim": 2}, seed=7)
    u = dl.oracle_uncertainty(X, y, seed=1, trees=20)
    assert u.shape == (100,)
    assert u.min() >= 0.0 and u.max() <= 1.0
    pred = dl.random_forest_predict(X, y, X, trees=5, max_depth=3, seed=2)
    assert pred.shape == (100,)
    assert (pred == y).mean() > 0.9


def write_config(path, out, sizes=(2, 3), **extra):
    cfg = {
        "schema_version": 1,
        "task": "expclust",
        "datasets": [{"name": "b", "synthetic": "blobs", "params": {"n": 60, "k": 3, "dim": 2}, "seed": 1}],
        "sizes": list(sizes),
        "methods": ["cart", "imm"],
        "trials": 2,
        "budget": 3,
        "seed": 3,
        "output_dir": str(out),
    }
    cfg.update(extra)
    path.write_text(json.dumps(cfg))
    return path


def test_run_and_report(tmp_path):
    cfg = write_config(tmp_path / "c.json", tmp_path / "out")
    s = dl.run_config(str(cfg))
    assert (s["computed"], s["failed"]) == (8, 0)
    assert dl.run_config(str(cfg))["computed"] == 0
    rep = dl.report(str(s["results"]))
    assert rep["metric"] == "cost_ratio"
    assert rep["friedman"] is None
    assert ("cart", "imm") in rep["wilcoxon"]
    with pytest.raises(dl.ConfigError):
        dl.run_config(str(write_config(tmp_path / "bad.json", tmp_path / "o2", methods=["snc"])))


CLI = os.environ.get("DISTLEARN_CLI")


@pytest.mark.skipif(not CLI, reason="DISTLEARN_CLI not set")
def test_cli_exit_codes(tmp_path):
    good = write_config(tmp_path / "good.json", tmp_path / "good")
    assert subprocess.run([CLI, "validate", "--config", str(good)], capture_output=True).returncode == 0
    r = subprocess.run([CLI, "run", "--config", str(good), "--quiet"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([CLI, "report", "--input", str(tmp_path / "good" / "results.csv")], capture_output=True, text=True)
    assert r.returncode == 0 and "mean_rank" in r.stdout

    bad = write_config(tmp_path / "bad.json", tmp_path / "bad", trials=0)
    assert subprocess.run([CLI, "validate", "--config", str(bad)], capture_output=True).returncode == 2
    assert subprocess.run([CLI, "run", "--config", str(bad)], capture_output=True).returncode == 2

    # More leaves than rows makes one size fail in every cell.
    partial = write_config(tmp_path / "partial.json", tmp_path / "partial", sizes=(2, 100))
    assert subprocess.run([CLI, "run", "--config", str(partial), "--quiet"], capture_output=True).returncode == 3
    r = subprocess.run([CLI, "report", "--input", str(tmp_path / "partial" / "results.csv")], capture_output=True, text=True)
    assert r.returncode == 3 and "missing" in r.stderr
