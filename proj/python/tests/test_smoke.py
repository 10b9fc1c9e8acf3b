import math
import os
from pathlib import Path

import pytest

import relthresh as rt

DATA = Path(os.environ.get("RELTHRESH_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_varl_round_trip():
    v = rt.varl_threshold(-1.0, 0.1, 0.368941)
    assert abs(v - 4.6317) < 1e-3
    assert abs(rt.risk_at(-1.0, 0.1, v) - 0.368941) < 1e-12
    assert rt.finalize_threshold(v)["threshold"] == 5


def test_correction_identity_and_direction():
    assert rt.correct_intercept(1.3, 0.3, 0.3) == 1.3
    assert rt.correct_intercept(2.0, 0.358, 0.5) == pytest.approx(2.0 - math.log(0.642 / 0.358), abs=1e-12)
    assert rt.correct_intercept(2.0, 0.2, 0.4) < 2.0


def test_fixture_and_errors():
    assert rt.estimate_from_fixture("CBO", 994)["threshold"] == 13
    with pytest.raises(rt.RelthreshError) as info:
        rt.estimate_from_fixture("WMC", 500)
    assert info.value.code == "not-in-fixture"
    assert info.value.exit_code == 1


def test_fit_binary_predictor():
    x = [0] * 20 + [1] * 20
    y = [1] * 10 + [0] * 10 + [1] * 15 + [0] * 5
    fit = rt.fit_logistic(x, y)
    assert abs(fit["beta"] - math.log(3)) < 1e-6


def test_rank_test_closed_form():
    scores = [[0.9, 0.5, 0.1], [0.8, 0.6, 0.2], [0.7, 0.4, 0.3], [0.95, 0.55, 0.15]]
    r = rt.rank_test(scores)
    assert r["statistic"] == pytest.approx(8.0)
    assert r["p"] == pytest.approx(math.exp(-4), abs=1e-4)
    assert rt.nemenyi_cd(3, 36) == pytest.approx(0.5523, abs=1e-3)


def test_spearman_and_g_mean():
    assert rt.spearman([1, 2, 3, 4], [2, 4, 6, 8])["rho"] == 1.0
    assert rt.g_mean(8, 5, 5, 2) == pytest.approx(math.sqrt(0.4))


def test_synthetic_is_deterministic():
    spec = rt.planted_line_spec(3)
    a = rt.generate_synthetic(spec)
    b = rt.generate_synthetic(spec)
    assert a.to_csv() == b.to_csv()
    assert len(a) == 72


def test_pipeline_on_toy_corpus(tmp_path):
    corpus = rt.load_corpus(DATA / "toy_corpus.csv")
    assert len(corpus) == 36
    out = rt.run_pipeline(corpus, {"seed": 42}, tmp_path)
    assert out["errors"] == []
    assert "table5_models.json" in out["files"]
    assert (tmp_path / "manifest.json").exists()
    assert "CBO" in out["selected"]
