"""Training loop with per-epoch test evaluation and best-epoch checkpointing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Model, ModelConfig, loss_and_grads
from .optim import AdamState, adam_step


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    lr: float = 1e-4
    batch_size: int = 32
    label_smoothing: float = 0.05
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if not 0.0 <= self.label_smoothing < 0.5:
            raise ValueError("label_smoothing must be in [0, 0.5)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass
class Checkpoint:
    """Parameters from the epoch with the best test accuracy, plus the
    input standardization fitted on the training split (stored per feature
    so the file format is agnostic to how the statistics were pooled)."""

    model_config: ModelConfig
    state: dict[str, np.ndarray]
    feature_mean: np.ndarray
    feature_std: np.ndarray
    best_test_accuracy: float
    epoch_of_best: int

    def standardize(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        return (rows - self.feature_mean) / self.feature_std


def fit_standardizer(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Global mean/std of the training matrix, broadcast per feature.

    A single scale keeps the relative bin amplitudes intact; normalizing
    each bin separately turns the near-silent bins into unit-variance
    noise features, and on map-sized inputs the classifier then memorizes
    noise instead of finding the (amplitude-dominant) discriminative bins.
    """
    mean = float(rows.mean())
    std = float(rows.std())
    if std < 1e-12:
        std = 1.0
    n = rows.shape[1]
    return np.full(n, mean), np.full(n, std)


def restore_model(ckpt: Checkpoint) -> Model:
    model = Model(ckpt.model_config)
    model.load_state_dict(ckpt.state)
    return model


def _eval_accuracy(model: Model, rows: np.ndarray, labels: np.ndarray,
                   batch_size: int = 32) -> float:
    correct = 0
    for i in range(0, rows.shape[0], batch_size):
        probs = model.forward(rows[i : i + batch_size], train=False)
        correct += int((probs.argmax(axis=1) == labels[i : i + batch_size]).sum())
    return correct / rows.shape[0]


def train(
    model_cfg: ModelConfig,
    train_rows: np.ndarray,
    train_labels: np.ndarray,
    test_rows: np.ndarray,
    test_labels: np.ndarray,
    cfg: TrainConfig,
    verbose: bool = False,
) -> Checkpoint:
    """Train and return the checkpoint of the best test-accuracy epoch.

    Rows are raw map rows; standardization is fitted on the training split
    and applied to both. Shuffling, initialization and therefore the whole
    run are deterministic functions of the two seeds. Ties in test accuracy
    keep the earliest epoch. A non-finite loss aborts.
    """
    train_rows = np.asarray(train_rows, dtype=np.float64)
    test_rows = np.asarray(test_rows, dtype=np.float64)
    train_labels = np.asarray(train_labels, dtype=np.int64)
    test_labels = np.asarray(test_labels, dtype=np.int64)
    if train_rows.shape[0] == 0 or test_rows.shape[0] == 0:
        raise ValueError("train and test sets must be nonempty")

    mean, std = fit_standardizer(train_rows)
    xtr = (train_rows - mean) / std
    xte = (test_rows - mean) / std

    model = Model(model_cfg, seed=cfg.seed)
    opt_state = AdamState()
    step = 0
    best_acc = -1.0
    best_epoch = -1
    best_state = model.state_dict()

    shuffle_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x5F]))
    n = xtr.shape[0]
    for epoch in range(cfg.epochs):
        perm = shuffle_rng.permutation(n)
        for i in range(0, n, cfg.batch_size):
            idx = perm[i : i + cfg.batch_size]
            loss, grads = loss_and_grads(
                model, xtr[idx], train_labels[idx], cfg.label_smoothing
            )
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss {loss} at epoch {epoch}, batch {i // cfg.batch_size}"
                )
            step += 1
            params = {name: layer.params[key] for name, layer, key in model.trainable()}
            adam_step(params, grads, opt_state, cfg.lr, step,
                      cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        acc = _eval_accuracy(model, xte, test_labels)
        if acc > best_acc:
            best_acc = acc
            best_epoch = epoch
            best_state = model.state_dict()
        if verbose:
            print(f"epoch {epoch + 1}/{cfg.epochs}  loss {loss:.4f}  "
                  f"test acc {acc:.4f}  best {best_acc:.4f} @ {best_epoch + 1}")

    return Checkpoint(
        model_config=model_cfg,
        state=best_state,
        feature_mean=mean,
        feature_std=std,
        best_test_accuracy=best_acc,
        epoch_of_best=best_epoch,
    )


def predict(ckpt: Checkpoint, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode forward on raw rows -> (labels, probabilities)."""
    model = restore_model(ckpt)
    x = ckpt.standardize(np.atleast_2d(rows))
    probs_parts = [
        model.forward(x[i : i + 32], train=False) for i in range(0, x.shape[0], 32)
    ]
    probs = np.concatenate(probs_parts, axis=0)
    return probs.argmax(axis=1), probs
