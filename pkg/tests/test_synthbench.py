import numpy as np
import pytest

from annofuse.core import FusionMethod
from annofuse.errors import BadInput, LagTooLarge
from annofuse.synthbench import (
    SCENARIOS,
    RaterModel,
    delay,
    evaluate,
    generate,
    make_truth,
    run_bench,
    run_scenario,
    scenario_raters,
    write_bench,
)

ALL = tuple(FusionMethod)


def test_truth_shape_and_range():
    t = make_truth(3)
    assert len(t) == 2000 and t.period_ms == 250
    assert np.abs(t.values).max() == pytest.approx(1.0)
    assert np.array_equal(make_truth(3).values, t.values)
    assert not np.array_equal(make_truth(4).values, t.values)


def test_delay_holds_first_value():
    assert delay(np.array([1.0, 2.0, 3.0, 4.0]), 2).tolist() == [1, 1, 1, 2]
    assert delay(np.array([1.0, 2.0]), 0).tolist() == [1, 2]


def test_identity_raters_equal_truth():
    truth = make_truth(0, 300)
    aset = generate(truth, [RaterModel(seed=i) for i in range(3)])
    for track in aset.tracks:
        assert np.array_equal(track.values, truth.values)


def test_rater_model_terms():
    truth = make_truth(1, 100)
    aset = generate(truth, [RaterModel(lag_samples=8, bias=0.5, scale=2.0)])
    assert np.allclose(aset.tracks[0].values, 2.0 * delay(truth.values, 8) + 0.5, atol=1e-15)
    assert 8 * truth.period_ms == 2000


def test_generate_is_seeded():
    truth = make_truth(2, 200)
    raters = [RaterModel(noise_std=0.3, seed=9), RaterModel(noise_std=0.3, seed=10)]
    a, b = generate(truth, raters), generate(truth, raters)
    assert a.matrix.tobytes() == b.matrix.tobytes()
    assert not np.array_equal(a.matrix[0], a.matrix[1])


def test_invalid_models():
    with pytest.raises(LagTooLarge):
        generate(make_truth(0, 20), [RaterModel(lag_samples=10)])
    for kw in (dict(lag_samples=-1), dict(scale=0.0), dict(noise_std=-0.1), dict(lag_samples=1.5)):
        with pytest.raises(BadInput):
            RaterModel(**kw)
    with pytest.raises(BadInput):
        scenario_raters("nope", 0)


def test_zero_noise_identity_scores_one():
    truth = make_truth(5, 400)
    scores = evaluate(truth, generate(truth, [RaterModel(seed=i) for i in range(3)]), ALL)
    for m in ALL:
        assert scores[m.value] == pytest.approx(1.0, abs=1e-12)


def test_single_rater_returns_truth():
    truth = make_truth(6, 300)
    aset = generate(truth, [RaterModel()])
    scores = evaluate(truth, aset, ALL)
    assert all(scores[m.value] == 1.0 for m in ALL)


@pytest.mark.parametrize("seed", range(5))
def test_lag_only_ordering(seed):
    scores = {r.method: r.ccc for r in run_scenario("lag_only", seed, (FusionMethod.RAAW, FusionMethod.EWE), n=1000)}
    assert scores["RAAW"] >= scores["EWE"] >= 0


def test_noise_only_weighting_helps():
    wins = 0
    for seed in range(100):
        scores = {r.method: r.ccc for r in run_scenario("noise_only", seed, (FusionMethod.EWE, FusionMethod.MEAN))}
        wins += scores["EWE"] >= scores["MEAN"]
    assert wins >= 90


def test_bench_deterministic_and_written(tmp_path):
    rows = run_bench(SCENARIOS, [1, 2], (FusionMethod.MEAN, FusionMethod.EWE), n=200)
    again = run_bench(SCENARIOS, [1, 2], (FusionMethod.MEAN, FusionMethod.EWE), n=200, workers=3)
    assert rows == again
    assert {r.scenario for r in rows} == set(SCENARIOS)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_bench(rows, str(a))
    write_bench(again, str(b))
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "scenario,method,seed,ccc"
    assert len(a.read_text().splitlines()) == 1 + len(rows) == 1 + len(SCENARIOS) * 2 * (2 + 5)
