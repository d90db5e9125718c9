import json
import math

import pytest

import vflsim

SMALL = """
[data]
n_samples = 1500
validation_samples = 200
test_samples = 300
host_slots = 4
guest_slots = 5
vocab_size = 64

[model]
embedding_dim = 4
host_bottom = 16, 8
guest_bottom = 16, 8
top = 8
rep = 8, 8

[training]
batch_size = 64
max_epochs = 2
"""


def pairwise_auc(scores, labels):
    wins = pairs = 0.0
    for s, y in zip(scores, labels):
        if not y:
            continue
        for t, z in zip(scores, labels):
            if z:
                continue
            pairs += 1
            wins += 1.0 if s > t else 0.5 if s == t else 0.0
    return wins / pairs


def test_auc_matches_pairwise_oracle():
    scores = [0.1, 0.4, 0.4, 0.8, 0.3, 0.9, 0.4]
    labels = [0, 1, 0, 1, 0, 1, 1]
    assert vflsim.auc(scores, labels) == pytest.approx(pairwise_auc(scores, labels), abs=1e-12)
    assert vflsim.auc([0.2, 0.3], [1, 1]) is None


def test_logloss_and_ttest():
    assert vflsim.logloss([0.5, 0.5], [0, 1]) == pytest.approx(math.log(2.0), abs=1e-15)
    t, p, degenerate = vflsim.paired_ttest([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert degenerate and p == 1.0


def test_hash_feature_fixture():
    assert vflsim.hash_feature("site_id", "85f751fd", 100003) == 9515


def test_config_errors_map_to_python_exceptions():
    with pytest.raises(vflsim.ConfigError, match="alpah"):
        vflsim.Config.parse("[training]\nalpah = 1\n")
    cfg = vflsim.Config()
    with pytest.raises(vflsim.VflError):
        cfg.set("training.batch_size", "zero")
    assert issubclass(vflsim.CheckpointError, vflsim.VflError)


def test_train_evaluate_round_trip(tmp_path):
    cfg = vflsim.Config.parse(SMALL)
    out = tmp_path / "run"
    result = vflsim.train(cfg, out)
    assert "phase=step2" in result["log"]
    assert len(result["validation_auc"]) >= 1
    report = vflsim.evaluate(cfg, out / "checkpoint.fud", out)
    slices = report["slices"]
    assert slices["overall"]["n"] == slices["aligned"]["n"] + slices["unaligned"]["n"] == 300
    assert report == json.loads((out / "report.json").read_text())
    again = vflsim.evaluate(cfg, out / "checkpoint.fud", tmp_path / "again")
    assert again == report

    verdict, offending = vflsim.audit_transcript((out / "transcript.txt").read_text(), 8)
    assert verdict and offending == []

    other = vflsim.Config.parse(SMALL)
    other.set("training.beta", "0.5")
    with pytest.raises(vflsim.CheckpointError):
        vflsim.evaluate(other, out / "checkpoint.fud", tmp_path / "bad")


def test_sweep_rows(tmp_path):
    cfg = vflsim.Config.parse(SMALL)
    rows = vflsim.sweep(cfg, "beta", ["0"], seeds=[1], methods=["fedud", "local_dnn"], out=tmp_path)
    assert len(rows) == 6
    assert {r["status"] for r in rows} == {"ok"}
    assert (tmp_path / "sweep.csv").exists()
