"""Layer, gradient, optimizer and training-loop tests.

Gradient assertions use central finite differences as the independent
oracle; convolution is additionally checked against naive loops.
"""

import numpy as np
import pytest

from vibxai import nn
from vibxai.nn.layers import BatchNorm1d, Conv1d, Dense, MaxPool1d, ReLU, Softmax


def fd_gradients(model, batch, labels, smoothing, h=1e-5):
    """Central finite differences of the training loss for every parameter."""
    out = {}
    for name, layer, key in model.trainable():
        p = layer.params[key]
        g = np.empty_like(p)
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            lp, _ = nn.loss_and_grads(model, batch, labels, smoothing)
            flat_p[i] = orig - h
            lm, _ = nn.loss_and_grads(model, batch, labels, smoothing)
            flat_p[i] = orig
            flat_g[i] = (lp - lm) / (2 * h)
        out[name] = g
    return out


def max_rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1e-8)))


SMALL_CONFIGS = [
    nn.ModelConfig(input_len=16, conv_blocks=(nn.ConvBlockSpec(3, 3, 2),),
                   dense_hidden=4),
    nn.ModelConfig(input_len=24,
                   conv_blocks=(nn.ConvBlockSpec(2, 3, 2), nn.ConvBlockSpec(3, 2, 2)),
                   dense_hidden=5),
    nn.ModelConfig(input_len=20, conv_blocks=(nn.ConvBlockSpec(4, 5, 3),),
                   dense_hidden=6),
]


class TestConv:
    def test_hand_example(self):
        conv = Conv1d(1, 1, 2)
        conv.params["w"] = np.array([[[1.0, -1.0]]])
        conv.params["b"] = np.zeros(1)
        out = conv.forward(np.array([[[3.0, 1.0, 4.0]]]), train=False)
        assert np.allclose(out, [[[2.0, -3.0]]])

    def test_matches_naive_loops(self):
        rng = np.random.default_rng(7)
        conv = Conv1d(3, 5, 4, rng)
        x = rng.normal(size=(2, 3, 11))
        out = conv.forward(x, train=True)
        w, b = conv.params["w"], conv.params["b"]
        naive = np.zeros((2, 5, 8))
        for bb in range(2):
            for o in range(5):
                for t in range(8):
                    naive[bb, o, t] = (x[bb, :, t : t + 4] * w[o]).sum() + b[o]
        np.testing.assert_allclose(out, naive, atol=1e-12)

        dout = rng.normal(size=out.shape)
        dx = conv.backward(dout)
        dwn = np.zeros_like(w)
        dxn = np.zeros_like(x)
        for bb in range(2):
            for o in range(5):
                for t in range(8):
                    dwn[o] += dout[bb, o, t] * x[bb, :, t : t + 4]
                    dxn[bb, :, t : t + 4] += dout[bb, o, t] * w[o]
        np.testing.assert_allclose(conv.grads["w"], dwn, atol=1e-12)
        np.testing.assert_allclose(conv.grads["b"], dout.sum(axis=(0, 2)), atol=1e-12)
        np.testing.assert_allclose(dx, dxn, atol=1e-12)

    def test_rejects_bad_shapes(self):
        conv = Conv1d(2, 1, 3)
        with pytest.raises(ValueError):
            conv.forward(np.zeros((1, 3, 8)), train=False)
        with pytest.raises(ValueError):
            conv.forward(np.zeros((1, 2, 2)), train=False)


class TestMaxPool:
    def test_forward_and_tie_routing(self):
        pool = MaxPool1d(2)
        x = np.array([[[1.0, 1.0, 3.0, 2.0, 0.0, 5.0]]])
        out = pool.forward(x, train=True)
        np.testing.assert_allclose(out, [[[1.0, 3.0, 5.0]]])
        dx = pool.backward(np.array([[[1.0, 1.0, 1.0]]]))
        # tie in the first window routes to the first index
        np.testing.assert_allclose(dx, [[[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]]])

    def test_remainder_dropped(self):
        pool = MaxPool1d(4)
        x = np.arange(10.0)[None, None, :]
        out = pool.forward(x, train=True)
        np.testing.assert_allclose(out, [[[3.0, 7.0]]])
        dx = pool.backward(np.ones((1, 1, 2)))
        assert dx.shape == x.shape
        assert np.all(dx[0, 0, 8:] == 0)


class TestBatchNorm:
    def test_eval_is_affine(self):
        rng = np.random.default_rng(3)
        bn = BatchNorm1d(4)
        bn.running_mean = rng.normal(size=4)
        bn.running_var = rng.uniform(0.5, 2.0, size=4)
        bn.params["gamma"] = rng.normal(size=4)
        bn.params["beta"] = rng.normal(size=4)
        x = rng.normal(size=(3, 4, 6))
        out = bn.forward(x, train=False).copy()
        scale, offset = bn.eval_affine()
        np.testing.assert_allclose(out, scale[:, None] * x + offset[:, None],
                                   atol=1e-12)

    def test_train_normalizes_batch(self):
        rng = np.random.default_rng(4)
        bn = BatchNorm1d(2)
        x = rng.normal(2.0, 3.0, size=(8, 2, 16))
        out = bn.forward(x, train=True)
        assert np.allclose(out.mean(axis=(0, 2)), 0.0, atol=1e-12)
        assert np.allclose(out.std(axis=(0, 2)), 1.0, atol=1e-3)


class TestSoftmaxAndLoss:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        sm = Softmax()
        p = sm.forward(rng.normal(size=(7, 2)) * 50, train=False)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)

    def test_zero_head_gives_uniform(self):
        model = nn.Model(SMALL_CONFIGS[0], seed=0)
        dense1 = dict(model.named_layers())["dense1"]
        dense1.params["w"][:] = 0.0
        dense1.params["b"][:] = 0.0
        probs = model.forward(np.random.default_rng(1).normal(size=(4, 16)),
                              train=False)
        np.testing.assert_allclose(probs, 0.5, atol=1e-15)

    def test_loss_closed_forms(self):
        # model predicting exactly (0.95, 0.05) hits the smoothed-target floor
        logits = np.log(np.array([[0.95, 0.05]]))
        targets = nn.smoothed_targets(np.array([0]), 2, 0.05)
        expected = -(0.95 * np.log(0.95) + 0.05 * np.log(0.05))
        assert abs(nn.cross_entropy(logits, targets) - expected) < 1e-12
        assert abs(expected - 0.19852) < 5e-6

        # uniform prediction costs ln 2 regardless of smoothing
        logits = np.zeros((1, 2))
        for s in (0.0, 0.05, 0.2):
            t = nn.smoothed_targets(np.array([1]), 2, s)
            assert abs(nn.cross_entropy(logits, t) - np.log(2)) < 1e-12

    def test_smoothed_targets_match_stated_values(self):
        t = nn.smoothed_targets(np.array([0, 1]), 2, 0.05)
        np.testing.assert_allclose(t, [[0.95, 0.05], [0.05, 0.95]])


class TestGradients:
    @pytest.mark.parametrize("idx", range(len(SMALL_CONFIGS)))
    def test_finite_difference_oracle(self, idx):
        cfg = SMALL_CONFIGS[idx]
        rng = np.random.default_rng(100 + idx)
        model = nn.Model(cfg, seed=idx)
        batch = rng.normal(size=(3, cfg.input_len))
        labels = rng.integers(0, 2, 3)
        _, grads = nn.loss_and_grads(model, batch, labels, 0.05)
        analytic = {k: v.copy() for k, v in grads.items()}
        numeric = fd_gradients(model, batch, labels, 0.05)
        for name in analytic:
            err = max_rel_err(analytic[name], numeric[name])
            assert err < 1e-4, f"{name}: rel err {err:.2e}"


class TestAdam:
    def test_zero_gradient_no_move(self):
        p = {"w": np.array([1.0, -2.0])}
        st = nn.AdamState()
        nn.adam_step(p, {"w": np.zeros(2)}, st, lr=0.1, t=1)
        np.testing.assert_allclose(p["w"], [1.0, -2.0])

    def test_first_step_magnitude_is_lr(self):
        for g in (0.3, -4.0, 1e-3):
            p = {"w": np.array([0.0])}
            st = nn.AdamState()
            nn.adam_step(p, {"w": np.array([g])}, st, lr=0.01, t=1)
            assert abs(abs(p["w"][0]) - 0.01) < 1e-6
            assert np.sign(p["w"][0]) == -np.sign(g)

    def test_constant_gradient_steps_equal(self):
        p = {"w": np.array([0.0])}
        st = nn.AdamState()
        g = {"w": np.array([2.5])}
        nn.adam_step(p, g, st, lr=0.01, t=1)
        d1 = abs(p["w"][0])
        before = p["w"][0]
        nn.adam_step(p, g, st, lr=0.01, t=2)
        d2 = abs(p["w"][0] - before)
        assert abs(d1 - d2) < 1e-6

    def test_rejects_t_zero(self):
        with pytest.raises(ValueError):
            nn.adam_step({}, {}, nn.AdamState(), lr=0.1, t=0)


def _toy_training_data(n=10, width=32, seed=5):
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(n, width))
    labels = rng.integers(0, 2, n)
    rows[labels == 1, :4] += 2.0  # separable feature
    return rows, labels


class TestTraining:
    def test_overfits_tiny_subset(self):
        rows, labels = _toy_training_data()
        cfg = nn.ModelConfig(input_len=32, conv_blocks=(nn.ConvBlockSpec(4, 3, 2),),
                             dense_hidden=8)
        ckpt = nn.train(cfg, rows, labels, rows, labels,
                        nn.TrainConfig(epochs=150, lr=1e-3, batch_size=4, seed=0))
        pred, _ = nn.predict(ckpt, rows)
        assert (pred == labels).mean() == 1.0
        assert ckpt.best_test_accuracy == 1.0

    def test_reproducible_checkpoints(self):
        rows, labels = _toy_training_data()
        cfg = nn.ModelConfig(input_len=32, conv_blocks=(nn.ConvBlockSpec(3, 3, 2),),
                             dense_hidden=4)
        tc = nn.TrainConfig(epochs=5, lr=1e-3, batch_size=4, seed=42)
        c1 = nn.train(cfg, rows, labels, rows, labels, tc)
        c2 = nn.train(cfg, rows, labels, rows, labels, tc)
        assert c1.state.keys() == c2.state.keys()
        for k in c1.state:
            assert np.array_equal(c1.state[k], c2.state[k]), k
        assert c1.epoch_of_best == c2.epoch_of_best

    def test_divergence_aborts(self):
        rows, labels = _toy_training_data()
        cfg = nn.ModelConfig(input_len=32, conv_blocks=(nn.ConvBlockSpec(3, 3, 2),),
                             dense_hidden=4)
        # batch norm keeps moderate blowups finite, so force a real overflow
        with pytest.raises(nn.TrainingDiverged), np.errstate(all="ignore"):
            nn.train(cfg, rows, labels, rows, labels,
                     nn.TrainConfig(epochs=50, lr=1e200, batch_size=4, seed=0))

    def test_predict_matches_eval_forward(self):
        rows, labels = _toy_training_data()
        cfg = nn.ModelConfig(input_len=32, conv_blocks=(nn.ConvBlockSpec(3, 3, 2),),
                             dense_hidden=4)
        ckpt = nn.train(cfg, rows, labels, rows, labels,
                        nn.TrainConfig(epochs=2, batch_size=4, seed=1))
        _, p1 = nn.predict(ckpt, rows)
        _, p2 = nn.predict(ckpt, rows)
        assert np.array_equal(p1, p2)
        model = nn.restore_model(ckpt)
        direct = model.forward(ckpt.standardize(rows), train=False)
        assert np.array_equal(p1, direct)
        np.testing.assert_allclose(p1.sum(axis=1), 1.0, atol=1e-12)

    def test_empty_sets_rejected(self):
        cfg = nn.ModelConfig(input_len=32, conv_blocks=(nn.ConvBlockSpec(3, 3, 2),),
                             dense_hidden=4)
        with pytest.raises(ValueError):
            nn.train(cfg, np.zeros((0, 32)), np.zeros(0, dtype=int),
                     np.zeros((1, 32)), np.zeros(1, dtype=int), nn.TrainConfig())

    def test_accuracy_ties_keep_earliest_epoch(self):
        # single-sample test set: accuracy is 0 or 1, so once it first hits
        # 1.0 every later perfect epoch ties and must not displace it
        rng = np.random.default_rng(6)
        rows = rng.normal(size=(8, 32))
        labels = np.array([0, 1] * 4)
        rows[labels == 1] += 3.0
        cfg = nn.ModelConfig(input_len=32, conv_blocks=(nn.ConvBlockSpec(3, 3, 2),),
                             dense_hidden=4)
        short = nn.train(cfg, rows, labels, rows[:1], labels[:1],
                         nn.TrainConfig(epochs=10, lr=1e-3, batch_size=4, seed=2))
        long = nn.train(cfg, rows, labels, rows[:1], labels[:1],
                        nn.TrainConfig(epochs=40, lr=1e-3, batch_size=4, seed=2))
        assert short.best_test_accuracy == long.best_test_accuracy == 1.0
        assert short.epoch_of_best == long.epoch_of_best


class TestCheckpointIO:
    def _checkpoint(self):
        rows, labels = _toy_training_data()
        cfg = nn.ModelConfig(input_len=32, conv_blocks=(nn.ConvBlockSpec(3, 3, 2),),
                             dense_hidden=4)
        return nn.train(cfg, rows, labels, rows, labels,
                        nn.TrainConfig(epochs=2, batch_size=4, seed=3)), rows

    def test_round_trip_bit_exact(self, tmp_path):
        ckpt, rows = self._checkpoint()
        path = tmp_path / "model.ckpt"
        nn.save_weights(ckpt, str(path))
        loaded = nn.load_weights(str(path))
        assert loaded.model_config == ckpt.model_config
        assert loaded.best_test_accuracy == ckpt.best_test_accuracy
        assert loaded.epoch_of_best == ckpt.epoch_of_best
        for k in ckpt.state:
            assert np.array_equal(loaded.state[k], ckpt.state[k]), k
        _, before = nn.predict(ckpt, rows)
        _, after = nn.predict(loaded, rows)
        assert np.array_equal(before, after)

    def test_corrupt_and_truncated_files(self, tmp_path):
        ckpt, _ = self._checkpoint()
        path = tmp_path / "model.ckpt"
        nn.save_weights(ckpt, str(path))

        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"NOPE" + path.read_bytes()[4:])
        with pytest.raises(nn.CheckpointError):
            nn.load_weights(str(bad))

        trunc = tmp_path / "trunc.ckpt"
        trunc.write_bytes(path.read_bytes()[:-16])
        with pytest.raises(nn.CheckpointError):
            nn.load_weights(str(trunc))

        empty = tmp_path / "empty.ckpt"
        empty.write_bytes(b"")
        with pytest.raises(nn.CheckpointError):
            nn.load_weights(str(empty))


class TestModelConfig:
    def test_rejects_vanishing_stack(self):
        with pytest.raises(ValueError):
            nn.ModelConfig(input_len=8,
                           conv_blocks=(nn.ConvBlockSpec(2, 9, 4),),
                           dense_hidden=4)

    def test_round_trip_dict(self):
        cfg = SMALL_CONFIGS[1]
        assert nn.ModelConfig.from_dict(cfg.to_dict()) == cfg
