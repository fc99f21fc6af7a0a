"""Model assembly: conv blocks -> dense head -> softmax.

Each conv block is conv -> ReLU -> batch norm -> max pool, matching the
classifier used for the RPM-map experiments. The head is
flatten -> dense+ReLU -> dense -> softmax with two output classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import BatchNorm1d, Conv1d, Dense, Flatten, Layer, MaxPool1d, ReLU, Softmax


@dataclass(frozen=True)
class ConvBlockSpec:
    filters: int
    kernel_size: int
    pool_size: int


DEFAULT_BLOCKS = (
    ConvBlockSpec(filters=32, kernel_size=9, pool_size=4),
    ConvBlockSpec(filters=64, kernel_size=9, pool_size=4),
)


@dataclass(frozen=True)
class ModelConfig:
    input_len: int
    conv_blocks: tuple[ConvBlockSpec, ...] = DEFAULT_BLOCKS
    dense_hidden: int = 64
    n_classes: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "conv_blocks",
            tuple(
                b if isinstance(b, ConvBlockSpec) else ConvBlockSpec(**b)
                for b in self.conv_blocks
            ),
        )
        if self.flattened_size() <= 0:
            raise ValueError(
                "conv/pool stack shrinks the input to nothing; "
                "reduce kernel or pool sizes"
            )

    def block_output_lens(self) -> list[int]:
        """Position count after each conv block."""
        t = self.input_len
        out = []
        for b in self.conv_blocks:
            t = (t - b.kernel_size + 1) // b.pool_size
            out.append(t)
        return out

    def flattened_size(self) -> int:
        lens = self.block_output_lens()
        if not self.conv_blocks:
            return self.input_len
        if any(t <= 0 for t in lens):
            return 0
        return lens[-1] * self.conv_blocks[-1].filters

    def to_dict(self) -> dict:
        return {
            "input_len": self.input_len,
            "conv_blocks": [vars(b) for b in self.conv_blocks],
            "dense_hidden": self.dense_hidden,
            "n_classes": self.n_classes,
        }

    @staticmethod
    def from_dict(d: dict) -> "ModelConfig":
        return ModelConfig(
            input_len=d["input_len"],
            conv_blocks=tuple(ConvBlockSpec(**b) for b in d["conv_blocks"]),
            dense_hidden=d["dense_hidden"],
            n_classes=d["n_classes"],
        )


class Model:
    """Layer stack with explicit forward/backward passes.

    Inputs are [batch, input_len] float64 rows (already standardized by the
    caller); forward returns per-class probabilities. backward() walks the
    full stack from a gradient w.r.t. the probabilities, which the saliency
    methods use; the training loss instead injects its gradient at the
    logits via backward_from_logits() so confident predictions cannot
    overflow the softmax Jacobian path.
    """

    def __init__(self, config: ModelConfig, seed: int = 0) -> None:
        self.config = config
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0]))
        self.layers: list[Layer] = []
        self._layer_names: list[str] = []
        c_in = 1
        for i, blk in enumerate(config.conv_blocks):
            self._add(f"conv{i}", Conv1d(c_in, blk.filters, blk.kernel_size, rng))
            self._add(f"relu{i}", ReLU())
            self._add(f"bn{i}", BatchNorm1d(blk.filters))
            self._add(f"pool{i}", MaxPool1d(blk.pool_size))
            c_in = blk.filters
        self._add("flatten", Flatten())
        self._add("dense0", Dense(config.flattened_size(), config.dense_hidden, rng))
        self._add("relu_d0", ReLU())
        self._add("dense1", Dense(config.dense_hidden, config.n_classes, rng))
        self.softmax = Softmax()

    def _add(self, name: str, layer: Layer) -> None:
        self.layers.append(layer)
        self._layer_names.append(name)

    def named_layers(self) -> list[tuple[str, Layer]]:
        return list(zip(self._layer_names, self.layers))

    # -- passes ------------------------------------------------------------

    def forward(self, batch: np.ndarray, train: bool = False) -> np.ndarray:
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != 2 or batch.shape[1] != self.config.input_len:
            raise ValueError(
                f"batch must be [rows, {self.config.input_len}], got {batch.shape}"
            )
        x = batch[:, None, :]  # single input channel
        for layer in self.layers:
            x = layer.forward(x, train)
        return self.softmax.forward(x, train)

    @property
    def logits(self) -> np.ndarray:
        """Pre-softmax outputs of the most recent forward pass."""
        return self.softmax._logits

    def backward(self, dprobs: np.ndarray) -> np.ndarray:
        return self.backward_from_logits(self.softmax.backward(dprobs))

    def backward_from_logits(self, dlogits: np.ndarray) -> np.ndarray:
        d = dlogits
        for layer in reversed(self.layers):
            d = layer.backward(d)
        return d[:, 0, :]

    def backward_to_layer(self, dprobs: np.ndarray, layer_name: str) -> np.ndarray:
        """Gradient w.r.t. the *output* of the named layer."""
        names = self._layer_names
        if layer_name not in names:
            raise KeyError(layer_name)
        stop = names.index(layer_name)
        d = self.softmax.backward(dprobs)
        for layer in reversed(self.layers[stop + 1:]):
            d = layer.backward(d)
        return d

    # -- parameter access ----------------------------------------------------

    def trainable(self) -> list[tuple[str, Layer, str]]:
        """Deterministic (name, layer, key) order for the optimizer."""
        out = []
        for name, layer in self.named_layers():
            for key in sorted(layer.params):
                out.append((f"{name}/{key}", layer, key))
        return out

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {name: layer.params[key].copy() for name, layer, key in self.trainable()}
        for name, layer in self.named_layers():
            if isinstance(layer, BatchNorm1d):
                state[f"{name}/running_mean"] = layer.running_mean.copy()
                state[f"{name}/running_var"] = layer.running_var.copy()
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for name, layer, key in self.trainable():
            layer.params[key] = state[name].copy()
        for name, layer in self.named_layers():
            if isinstance(layer, BatchNorm1d):
                layer.running_mean = state[f"{name}/running_mean"].copy()
                layer.running_var = state[f"{name}/running_var"].copy()


def smoothed_targets(labels: np.ndarray, n_classes: int, smoothing: float) -> np.ndarray:
    """Hard labels -> smoothed rows, e.g. (0.95, 0.05) at smoothing 0.05."""
    if not 0.0 <= smoothing < 0.5:
        raise ValueError("smoothing must be in [0, 0.5)")
    labels = np.asarray(labels, dtype=np.int64)
    t = np.full((labels.size, n_classes), smoothing / (n_classes - 1))
    t[np.arange(labels.size), labels] = 1.0 - smoothing
    return t


def cross_entropy(logits: np.ndarray, targets: np.ndarray) -> float:
    """Mean cross-entropy against (possibly smoothed) target rows."""
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-(targets * logp).sum(axis=1).mean())


def loss_and_grads(
    model: Model, batch: np.ndarray, labels: np.ndarray, smoothing: float
) -> tuple[float, dict[str, np.ndarray]]:
    """Smoothed cross-entropy and gradients for every trainable parameter.

    Runs the forward pass in train mode (batch statistics) and seeds the
    backward pass at the logits with (probs - targets)/batch, the fused
    softmax+cross-entropy gradient. The returned gradient arrays are the
    layers' persistent buffers: they are overwritten by the next backward
    pass, so copy them if they must outlive the current step.
    """
    probs = model.forward(batch, train=True)
    targets = smoothed_targets(labels, model.config.n_classes, smoothing)
    loss = cross_entropy(model.logits, targets)
    model.backward_from_logits((probs - targets) / batch.shape[0])
    grads = {name: layer.grads[key] for name, layer, key in model.trainable()}
    return loss, grads
