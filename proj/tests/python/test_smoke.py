import math

import numpy as np
import pytest

import aknet


def model_2x2():
    cfg = aknet.ExperimentConfig("gaussian-grid", seed=3)
    return aknet.make_model(cfg)


def test_sow_matches_trace_ratio():
    assert aknet.sow(np.eye(2) * 3.0, np.eye(2) * 4.0) == pytest.approx(0.75)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ArithmeticError):
        aknet.sow(np.eye(2), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        aknet.GainNetConfig(0, 2)


def test_generate_shapes_and_determinism():
    model = model_2x2()
    sched = aknet.NoiseSchedule.constant(1.0, 1.0, 30)
    a = aknet.generate(model, sched, 30, seed=7)
    b = aknet.generate(model, sched, 30, seed=7)
    assert a.states.shape == (30, 2)
    assert a.observations.shape == (30, 2)
    np.testing.assert_array_equal(a.observations, b.observations)
    assert a.sow == pytest.approx([1.0] * 30)


def test_kf_beats_raw_observations():
    model = model_2x2()
    ds = aknet.make_dataset(model, [(1.0, 1.0)], 50, 50, seed=1)
    kf = aknet.evaluate_kf(model, ds)[0]
    raw = np.mean([np.mean(np.sum((np.linalg.solve(model.H, t.observations.T).T - t.states) ** 2,
                                  axis=1)) for t in ds.trajectories])
    assert kf.mse < raw
    assert kf.mse_db == pytest.approx(10 * math.log10(kf.mse))


def test_param_counts():
    net = aknet.GainNet.create(aknet.GainNetConfig(2, 2), seed=0)
    hyper = aknet.HyperNet.create(net, 5, seed=0)
    assert net.param_count == 10084
    assert hyper.param_count == 1029
    big = aknet.GainNet(aknet.GainNetConfig(10, 10))
    assert big.param_count == 264900
    assert aknet.HyperNet.create(big, 5).param_count == 5445


def test_identity_hypernet_leaves_filter_unchanged():
    model = model_2x2()
    ds = aknet.make_dataset(model, [(1.0, 1.0)], 4, 20, seed=2)
    net = aknet.GainNet.create(aknet.GainNetConfig(2, 2), seed=1)
    hyper = aknet.HyperNet.create(net, 5, seed=1)
    plain = aknet.aknet_filter(model, net, None, ds.trajectories)
    modulated = aknet.aknet_filter(model, net, hyper, ds.trajectories)
    for a, b in zip(plain, modulated):
        np.testing.assert_array_equal(a, b)


def test_training_round_trip(tmp_path):
    model = model_2x2()
    ds = aknet.make_dataset(model, [(1.0, 1.0)], 10, 20, seed=4)
    net = aknet.GainNet.create(aknet.GainNetConfig(2, 2, hidden=4), seed=0)
    cfg = aknet.TrainConfig()
    cfg.epochs = 3
    cfg.batch_size = 4
    cfg.step_size = 1e-2
    report = aknet.train_stage1(model, ds, net, cfg)
    assert len(report.epochs) == 4
    assert report.best_val_loss <= report.epochs[0].val_loss
    assert math.isfinite(aknet.loss(model, net, None, ds))

    hyper = aknet.HyperNet.create(net, 3, seed=0)
    path = tmp_path / "nets.akck"
    aknet.save_checkpoint(path, net, hyper)
    loaded, loaded_hyper = aknet.load_checkpoint(path)
    assert loaded_hyper is not None
    for name, value in net.params().items():
        np.testing.assert_array_equal(loaded.params()[name], value)


def test_corrupt_checkpoint_raises_os_error(tmp_path):
    path = tmp_path / "bad.akck"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(OSError):
        aknet.load_checkpoint(path)


def test_config_round_trip():
    cfg = aknet.ExperimentConfig("sow-jump", seed=5)
    again = aknet.ExperimentConfig.parse(cfg.dump())
    assert again.dump() == cfg.dump()
    with pytest.raises(ValueError):
        cfg.set("no_such_key", "1")
