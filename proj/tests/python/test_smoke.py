import math

import pytest

import lossgate as lg


def test_hashing_and_tokens():
    assert lg.hash64("good") == 0x9CE4D6720E9C9118
    assert lg.tokenize("Good movie!") == ["good", "movie"]
    assert lg.vectorize(["movie", "good", "good"]) == [37144, 115471]


def test_example_and_parse():
    rows = lg.parse_dataset('{"text":"good movie","label":1}\n')
    assert rows[0].tokens == ["good", "movie"]
    assert rows[0].label == 1
    with pytest.raises(lg.UsageError):
        lg.load_dataset("/no/such/file.jsonl")


def test_forward_backward():
    model = lg.TargetModel(0.5)
    batch = [lg.Example("good", 1)]
    fr = lg.forward(model, batch)
    assert fr.batch_loss == pytest.approx(math.log(2))
    lg.backward(model, fr, batch)
    assert model.step_count == 1
    assert model.weight(batch[0].features[0]) == 0.25
    with pytest.raises(lg.LossgateError):
        lg.backward(model, fr, batch)
    again = lg.TargetModel.from_json(model.to_json())
    assert again == model


def test_threshold():
    t = lg.ThresholdState(4)
    for v in (0.9, 0.5, 0.4, 0.3, 0.2):
        t.observe_loss(v)
    t.freeze()
    assert t.low == pytest.approx(0.35)
    assert t.should_skip_backward(0.3)
    assert not t.should_skip_backward(0.35)


def test_naive_bayes():
    nb = lg.NaiveBayesModel(1.0)
    nb.update([[1], [1, 2]], 1)
    nb.update([[2]], 0)
    j1, j0 = 0.6 * 0.75 * 0.5, 0.4 / 9
    assert nb.posterior([1]) == pytest.approx(j1 / (j1 + j0))
    assert nb.predict_batch([[1]])["decision"] == 1
    assert lg.make_label(0.5, 0.4) == 1


def test_metrics():
    assert lg.total_time(0.1, 0.6) == pytest.approx(1.0)
    assert lg.agot(0.88, 0.25, 0.5, 0.9) == pytest.approx(0.95 / 0.25**0.05)
    kwh, co2 = lg.energy_co2(100, 50, 250, 1, 10)
    assert kwh == pytest.approx(6.32)
    assert co2 == pytest.approx(6.02928)


def test_run_modes():
    train, test = lg.generate_toy(train_examples=1000, test_examples=200, seed=3)
    cfg = lg.TrainerConfig(batch_size=16, K=8, seed=1)
    assert cfg.to_dict()["K"] == 8
    report = lg.run(cfg, train, test)
    assert 0.0 <= report["accuracy"] <= 1.0
    assert report["alpha_b"] + report["alpha_fb"] <= 1.0
    again = lg.run(cfg, train, test)
    for key in ("accuracy", "alpha_b", "alpha_fb", "T", "stage_boundaries"):
        assert again[key] == report[key]

    everything = lg.run(lg.TrainerConfig(mode="train-all", batch_size=16), train, test)
    assert everything["alpha_b"] == 0 and everything["alpha_fb"] == 0
    assert everything["T_norm"] == 1.0

    rnd = lg.run_random_skip(cfg, train, test, target_ratio=0.5)
    assert rnd["alpha_b"] == 0
    with pytest.raises(lg.UsageError):
        lg.TrainerConfig(nonsense=1)


def test_sweep_csv_is_deterministic():
    train, test = lg.generate_toy(train_examples=600, test_examples=100, seed=2)
    cfg = lg.TrainerConfig(batch_size=16, K=8)
    args = dict(n0=[0.1], W=[4], alt=[0.3], thresholds=[0.5], seeds=[1, 2])
    a = lg.sweep_csv(cfg, train, test, threads=1, **args)
    b = lg.sweep_csv(cfg, train, test, threads=2, **args)
    assert a == b
    assert a.startswith("kind,mode,")
