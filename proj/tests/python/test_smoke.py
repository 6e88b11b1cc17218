import math
import os
import random
from pathlib import Path

import pytest

import incidentlab as il

ROOT = Path(__file__).resolve().parents[2]
DATA = ROOT / "data"


def test_grid_network():
    net = il.load_network(str(DATA / "grid4x4.net"))
    assert len(net.node_ids) == 16
    assert len(net.segment_ids) == 48
    assert net.shortest_route("n00", "n01") == ["n00_n01"]
    again = il.parse_network(net.serialize())
    assert again.segment_ids == net.segment_ids
    pairs = il.contiguous_sensor_pairs(net, ["n11", "n12"])
    assert ("n11", "n12") in pairs


def test_bad_network_raises():
    with pytest.raises(ValueError):
        il.parse_network("[nodes]\nid,x,y\n")


def test_fit_recovers_sinusoids():
    rng = random.Random(3)
    day = 86400.0
    counts = [
        40 * math.sin(2 * math.pi / day * k * 900 + 0.4)
        + 15 * math.sin(4 * math.pi / day * k * 900 - 1.1)
        + 150
        + rng.gauss(0, 0.5)
        for k in range(96)
    ]
    p = il.fit_counts(counts)
    assert p.fit_rmse <= 0.75
    assert abs(p(0.0) - counts[0]) < 2.0


def test_ks():
    rng = random.Random(1)
    a = [rng.gauss(0, 1) for _ in range(100)]
    same = il.ks_two_sample(a, a)
    assert same.statistic == 0.0 and same.passed
    shifted = il.ks_two_sample(a, [x + 10 for x in a])
    assert shifted.statistic == 1.0 and not shifted.passed


def test_tree_ensemble_round_trip():
    rng = random.Random(2)
    X, y = [], []
    for _ in range(300):
        a, b = rng.uniform(-1, 1), rng.uniform(-1, 1)
        X.append([a, b])
        y.append(int((a > 0) != (b > 0)))
    cfg = il.TreeEnsembleConfig()
    cfg.n_trees = 40
    cfg.max_depth = 3
    cfg.min_samples_leaf = 5
    model = il.train_tree_ensemble(X, y, ["0", "1"], ["a", "b"], cfg)
    acc = sum(model.predict_class(x) == t for x, t in zip(X, y)) / len(X)
    assert acc >= 0.97
    back = il.parse_tree_ensemble(model.to_json())
    assert back.predict_proba([0.3, float("nan")]) == model.predict_proba([0.3, float("nan")])


def test_metrics():
    assert il.auc_roc([0.1, 0.9], [False, True]) == 1.0
    assert il.auc_roc([0.5], [True]) is None
    assert il.confusion([True, False, True], [True, False, False]) == {"tp": 1, "fp": 1, "tn": 1, "fn": 0}


def test_small_pipeline(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(
        f"network = {DATA / 'grid4x4.net'}\n"
        f"counts = {DATA / 'tempe_like_counts.csv'}\n"
        "days = 1\neval_days = 1\nseed = 3\nhorizon_s = 3600\ndemand_scale = 2.5\n"
        "sensors = n11;n12;n21;n22\nwindow.window_s = 300\nwindow.stride_s = 60\n"
        "incidents.p_incident = 0.004\ntrees.n_trees = 10\ntrees.min_samples_leaf = 10\n"
    )
    report = il.run_pipeline(str(cfg), str(tmp_path / "out"))
    assert report["gating_violations"] == 0
    assert report["tp"] + report["fp"] + report["tn"] + report["fn"] > 0
    table = il.load_feature_table(str(tmp_path / "out" / "features_eval.csv"))
    assert len(table["X"]) == len(table["label"])
    assert table["feature_names"][0] == "time_of_day"
