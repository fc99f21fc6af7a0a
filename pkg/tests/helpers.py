"""Shared toy-model builders for the explanation-method tests."""

import numpy as np

from vibxai import nn


def checkpoint_from_model(model: nn.Model, mean=None, std=None) -> nn.Checkpoint:
    """Wrap a hand-configured model; identity standardization by default."""
    n = model.config.input_len
    return nn.Checkpoint(
        model_config=model.config,
        state=model.state_dict(),
        feature_mean=np.zeros(n) if mean is None else np.asarray(mean, float),
        feature_std=np.ones(n) if std is None else np.asarray(std, float),
        best_test_accuracy=1.0,
        epoch_of_best=0,
    )


def zero_biases(model: nn.Model) -> None:
    """Zero every additive term so z-rule conservation is exact: conv/dense
    biases, batch-norm beta and running means."""
    for name, layer in model.named_layers():
        if "b" in layer.params:
            layer.params["b"][:] = 0.0
        if isinstance(layer, nn.BatchNorm1d):
            layer.params["beta"][:] = 0.0
            layer.running_mean[:] = 0.0


def identity_batchnorms(model: nn.Model) -> None:
    for name, layer in model.named_layers():
        if isinstance(layer, nn.BatchNorm1d):
            layer.params["gamma"][:] = 1.0
            layer.params["beta"][:] = 0.0
            layer.running_mean[:] = 0.0
            layer.running_var[:] = 1.0


def planted_toy(seed=0, n_rows=16, n_cols=60, segment=4, n_segments=10):
    """Two classes identical except for one hot segment in class 1."""
    from vibxai.xai import segment_slices

    rng = np.random.default_rng(seed)
    base = rng.uniform(0.5, 1.0, size=(2 * n_rows, n_cols))
    rows0 = base[:n_rows].copy()
    rows1 = base[n_rows:].copy()
    sl = segment_slices(n_cols, n_segments)[segment]
    rows1[:, sl] += 2.0
    return rows0, rows1, sl


def train_toy_checkpoint(rows0, rows1, seed=0, epochs=40):
    rows = np.vstack([rows0, rows1])
    labels = np.array([0] * len(rows0) + [1] * len(rows1))
    cfg = nn.ModelConfig(
        input_len=rows.shape[1],
        conv_blocks=(nn.ConvBlockSpec(4, 5, 2),),
        dense_hidden=8,
    )
    return nn.train(cfg, rows, labels, rows, labels,
                    nn.TrainConfig(epochs=epochs, lr=3e-3, batch_size=8, seed=seed))
