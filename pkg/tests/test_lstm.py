import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluidport.channel import FluidAntennaConfig
from fluidport.lstm import (LSTMSelector, LstmNetwork, LstmShape, TrainSettings, draw_masks, estimate,
                            forward, load_network, loss_and_grads, mse_loss, predict_batch,
                            save_network, train)
from fluidport.pipelines import generate_dataset
from fluidport.selection import ObservationPlan, evenly_spread_plan, select_port

TINY = LstmShape(n_inputs=2, n_outputs=3, hidden=2, dense_width=4)


def sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def numeric_grads(net, series, labels, unobserved, masks, h=1e-6):
    out = {}
    for name, value in net.params.items():
        g = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            orig = value[idx]
            value[idx] = orig + h
            up, _ = loss_and_grads(net, series, labels, unobserved, masks)
            value[idx] = orig - h
            down, _ = loss_and_grads(net, series, labels, unobserved, masks)
            value[idx] = orig
            g[idx] = (up - down) / (2 * h)
        out[name] = g
    return out


class TestForward:
    def test_zero_network(self):
        net = LstmNetwork.zeros(LstmShape(5, 50))
        np.testing.assert_array_equal(forward(net, np.ones(5)), np.zeros(50))

    def test_eval_deterministic(self):
        net = LstmNetwork.initialize(LstmShape(5, 50), 0)
        x = np.random.default_rng(1).random(5)
        np.testing.assert_array_equal(forward(net, x), forward(net, x))

    def test_hand_computed_single_step(self):
        shape = LstmShape(n_inputs=1, n_outputs=1, hidden=1, dense_width=1, dropout=(0.0,))
        p = {
            "lstm_wx": np.array([[0.5, -0.3, 0.8, 0.1]]),
            "lstm_wh": np.array([[0.2, 0.4, -0.6, 0.7]]),
            "lstm_b": np.array([0.1, 0.2, -0.1, 0.3]),
            "dense0_w": np.array([[1.5]]), "dense0_b": np.array([-0.25]),
            "out_w": np.array([[2.0]]), "out_b": np.array([0.5]),
        }
        net = LstmNetwork(shape, p)
        x = 0.9
        # first step: h_prev = c_prev = 0, so the recurrent weights drop out
        i = sig(0.5 * x + 0.1)
        g = math.tanh(0.8 * x - 0.1)
        o = sig(0.1 * x + 0.3)
        c = i * g
        h = o * math.tanh(c)
        expected = (h * 1.5 - 0.25) * 2.0 + 0.5
        assert forward(net, [x])[0] == pytest.approx(expected, abs=1e-12)

    def test_length_mismatch(self):
        net = LstmNetwork.zeros(TINY)
        with pytest.raises(ValueError):
            forward(net, [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            forward(net, [1.0, 2.0], mode="bogus")

    @given(n=st.integers(1, 12), n_out=st.integers(1, 60))
    @settings(max_examples=20, deadline=None)
    def test_output_length_is_n_ports(self, n, n_out):
        net = LstmNetwork.initialize(LstmShape(n, n_out, dense_width=8), 0)
        assert forward(net, np.ones(n)).shape == (n_out,)
        assert forward(net, np.ones((3, n)), mode="train", rng=1).shape == (3, n_out)

    def test_dropout_only_in_train_mode(self):
        net = LstmNetwork.initialize(LstmShape(3, 4), 0)
        x = np.array([0.2, 0.5, 0.1])
        a = forward(net, x, mode="train", rng=1)
        b = forward(net, x, mode="train", rng=2)
        assert not np.array_equal(a, b)
        np.testing.assert_array_equal(forward(net, x), forward(net, x, mode="eval", rng=3))

    def test_dropout_expectation(self):
        net = LstmNetwork.initialize(LstmShape(3, 6), 0)
        x = np.array([0.4, 1.1, 0.7])
        batch = np.repeat(x[None, :], 10_000, axis=0)
        samples = forward(net, batch, mode="train", rng=5)
        eval_out = forward(net, x)
        # per-unit z-test; at p = 0.5 one standard error is already ~1% of the mean
        z = (samples.mean(axis=0) - eval_out) / (samples.std(axis=0) / math.sqrt(batch.shape[0]))
        assert np.all(np.abs(z) < 4)

    def test_inverted_mask_expectation(self):
        masks = draw_masks(LstmShape(1, 1), 10_000, 7)
        for m in masks:
            assert abs(m.mean() - 1.0) < 0.01
            assert np.all(m.mean(axis=0) > 0.9)

    def test_mask_rates(self):
        masks = draw_masks(LstmShape(1, 1), 2000, 0)
        for m, p in zip(masks, (0.2, 0.5, 0.2, 0.5)):
            assert set(np.unique(m)) == {0.0, 1.0 / (1.0 - p)}
            assert abs(np.mean(m == 0) - p) < 0.01


class TestLoss:
    def test_examples(self):
        assert mse_loss([1, 2, 3], [1, 2, 3], [0, 2]) == 0
        assert mse_loss([0, 5, 0], [1, 5, 3], [0, 2]) == 5.0

    def test_matches_naive_loop(self):
        rng = np.random.default_rng(0)
        p, y = rng.random(20), rng.random(20)
        u = [1, 4, 7, 19]
        total = 0.0
        for k in u:
            total += (p[k] - y[k]) ** 2
        assert mse_loss(p, y, u) == pytest.approx(total / len(u), rel=1e-14)

    def test_empty_unobserved(self):
        with pytest.raises(ValueError):
            mse_loss([1.0], [1.0], [])


class TestGradients:
    @pytest.mark.parametrize("use_masks", [False, True])
    def test_backprop_matches_finite_differences(self, use_masks):
        rng = np.random.default_rng(3)
        net = LstmNetwork.initialize(TINY, rng)
        series = rng.random((4, 2))
        labels = rng.random((4, 3))
        masks = draw_masks(TINY, 4, rng) if use_masks else None
        _, analytic = loss_and_grads(net, series, labels, [0, 2], masks)
        numeric = numeric_grads(net, series, labels, [0, 2], masks)
        for name in analytic:
            a, n = analytic[name], numeric[name]
            rel = np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), 1e-7)
            assert rel.max() <= 1e-4, name


class TestTraining:
    def test_zero_learning_rate(self):
        net = LstmNetwork.initialize(TINY, 0)
        rng = np.random.default_rng(1)
        out = train(net, rng.random((20, 2)), rng.random((20, 3)), [1],
                    TrainSettings(epochs=3, learning_rate=0.0), 2)
        for k in net.params:
            np.testing.assert_array_equal(out.params[k], net.params[k])
        assert len(out.history) == 3

    def test_deterministic(self):
        net = LstmNetwork.initialize(LstmShape(2, 3, dense_width=16), 0)
        rng = np.random.default_rng(1)
        x, y = rng.random((30, 2)), rng.random((30, 3))
        a = train(net, x, y, [0, 1], TrainSettings(epochs=4), 9)
        b = train(net, x, y, [0, 1], TrainSettings(epochs=4), 9)
        for k in a.params:
            np.testing.assert_array_equal(a.params[k], b.params[k])

    def test_input_not_mutated(self):
        net = LstmNetwork.initialize(TINY, 0)
        before = {k: v.copy() for k, v in net.params.items()}
        rng = np.random.default_rng(1)
        train(net, rng.random((10, 2)), rng.random((10, 3)), [0], TrainSettings(epochs=2), 0)
        for k in before:
            np.testing.assert_array_equal(net.params[k], before[k])

    def test_overfits_small_set(self):
        # per-example updates without dropout; the default schedule (batch 10,
        # dropout on) only reaches the per-port variance in 500 epochs
        cfg = FluidAntennaConfig.from_db(50, 0.5)
        plan = evenly_spread_plan(50, 5)
        unobs = plan.unobserved_idx
        for seed in range(3):
            rng = np.random.default_rng(seed)
            data = generate_dataset(cfg, plan, 10, rng)
            net = LstmNetwork.initialize(LstmShape(5, 50, dropout=(0.0,) * 4), rng)
            initial = mse_loss(predict_batch(net, data.features), data.labels, unobs)
            trained = train(net, data.features, data.labels, unobs,
                            TrainSettings(batch_size=1, epochs=500, learning_rate=0.3), rng)
            assert mse_loss(predict_batch(trained, data.features), data.labels, unobs) < 0.1 * initial

    def test_dimension_checks(self):
        net = LstmNetwork.zeros(TINY)
        with pytest.raises(ValueError):
            train(net, np.ones((5, 3)), np.ones((5, 3)), [0], TrainSettings(), 0)
        with pytest.raises(ValueError):
            train(net, np.ones((5, 2)), np.ones((4, 3)), [0], TrainSettings(), 0)
        with pytest.raises(ValueError):
            TrainSettings(batch_size=0)

    @pytest.mark.slow
    def test_beats_constant_predictor_on_channel_data(self):
        cfg = FluidAntennaConfig.from_db(50, 0.5)
        plan = evenly_spread_plan(50, 5)
        rng = np.random.default_rng(6)
        train_set = generate_dataset(cfg, plan, 1500, rng)
        test_set = generate_dataset(cfg, plan, 1000, rng)
        net = LstmNetwork.initialize(LstmShape(5, 50), rng)
        net = train(net, train_set.features, train_set.labels, plan.unobserved_idx,
                    TrainSettings(epochs=15), rng)
        mse = mse_loss(predict_batch(net, test_set.features), test_set.labels, plan.unobserved_idx)
        variance = test_set.labels[:, plan.unobserved_idx].var(axis=0).mean()
        assert mse < variance


class TestEstimate:
    def test_full_observation_passes_through(self):
        net = LstmNetwork.initialize(LstmShape(4, 4), 0)
        plan = evenly_spread_plan(4, 4)
        obs = np.array([0.3, 0.1, 0.9, 0.4])
        np.testing.assert_array_equal(estimate(net, obs, plan).values, obs)

    def test_zero_network_falls_back_to_best_observed(self):
        plan = evenly_spread_plan(50, 5)
        net = LstmNetwork.zeros(LstmShape(5, 50))
        obs = np.array([0.2, 0.9, 0.4, 0.3, 0.1])
        est = estimate(net, obs, plan)
        assert np.all(est.values[plan.unobserved_idx] == 0)
        assert select_port(est) == 12

    def test_selector_matches_estimate(self):
        plan = evenly_spread_plan(20, 3)
        net = LstmNetwork.initialize(LstmShape(3, 20), 1)
        obs = np.random.default_rng(2).random((6, 3))
        picks = LSTMSelector(net)(obs, plan)
        expected = [select_port(estimate(net, row, plan)) for row in obs]
        np.testing.assert_array_equal(picks, expected)


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        net = LstmNetwork.initialize(LstmShape(3, 7, hidden=4, dense_width=6), 0)
        path = tmp_path / "net.txt"
        save_network(net, path)
        back = load_network(path)
        assert back.shape == net.shape
        for k in net.params:
            np.testing.assert_array_equal(back.params[k], net.params[k])
        x = np.random.default_rng(1).random(3)
        np.testing.assert_array_equal(forward(back, x), forward(net, x))

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "net.txt"
        path.write_text("something-else 1\n")
        with pytest.raises(ValueError):
            load_network(path)

    def test_rejects_wrong_block(self, tmp_path):
        net = LstmNetwork.initialize(TINY, 0)
        path = tmp_path / "net.txt"
        save_network(net, path)
        text = path.read_text().replace("lstm_wh 2 8", "lstm_wh 8 2")
        path.write_text(text)
        with pytest.raises(ValueError):
            load_network(path)
