"""From-scratch differentiable layers for the 1-D CNN.

All tensors are float64 C-order ndarrays; activations are [batch, channels,
positions] until Flatten. Every layer caches what its backward pass needs,
so forward(train=...) must precede backward(). Convolution is
cross-correlation (no kernel flip), stride 1, valid padding.

Large intermediates are written into per-layer scratch buffers that persist
across calls (fresh mmapped pages fault at a fraction of copy bandwidth, so
reallocating tens of MB per step would dominate the run time). Consequence:
arrays returned by forward()/backward() are only valid until the same
layer's next call; callers that keep activations across forward passes must
copy them. Softmax returns freshly allocated arrays so probabilities are
always safe to hold.
"""

from __future__ import annotations

import numpy as np


class Scratch:
    """Reusable buffers keyed by (name, shape)."""

    def __init__(self) -> None:
        self._bufs: dict[tuple, np.ndarray] = {}

    def get(self, name: str, shape: tuple[int, ...],
            dtype=np.float64) -> np.ndarray:
        key = (name, shape, np.dtype(dtype).char)
        buf = self._bufs.get(key)
        if buf is None:
            buf = np.empty(shape, dtype=dtype)
            self._bufs[key] = buf
        return buf

    def zeros(self, name: str, shape: tuple[int, ...]) -> np.ndarray:
        buf = self.get(name, shape)
        buf.fill(0.0)
        return buf


class Layer:
    """Base: parameter-free layers leave params/grads empty."""

    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._scratch = Scratch()

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Conv1d(Layer):
    def __init__(self, c_in: int, c_out: int, kernel_size: int,
                 rng: np.random.Generator | None = None) -> None:
        super().__init__()
        self.c_in, self.c_out, self.k = c_in, c_out, kernel_size
        # He initialization for the ReLU that follows.
        scale = np.sqrt(2.0 / (c_in * kernel_size))
        rng = rng or np.random.default_rng()
        self.params["w"] = rng.normal(0.0, scale, size=(c_out, c_in, kernel_size))
        self.params["b"] = np.zeros(c_out)
        self._xmat: np.ndarray | None = None
        self._dims: tuple[int, int, int] = (0, 0, 0)

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.c_in:
            raise ValueError(f"conv input must be [B,{self.c_in},L], got {x.shape}")
        b, _, length = x.shape
        if length < self.k:
            raise ValueError("input shorter than kernel")
        t = length - self.k + 1
        self._dims = (b, t, length)
        # im2col in [C_in, K, B, T] layout: each tap is one cheap strided
        # copy with whole position runs contiguous, and forward plus both
        # backward products become plain GEMMs against the [C_in*K, B*T] view.
        xmat = self._scratch.get("xmat", (self.c_in, self.k, b, t))
        for k in range(self.k):
            np.copyto(xmat[:, k], x[:, :, k : k + t].transpose(1, 0, 2))
        self._xmat = xmat2 = xmat.reshape(self.c_in * self.k, b * t)
        wmat = self.params["w"].reshape(self.c_out, -1)
        outm = self._scratch.get("outm", (self.c_out, b * t))
        np.matmul(wmat, xmat2, out=outm)
        out = self._scratch.get("out", (b, self.c_out, t))
        np.add(outm.reshape(self.c_out, b, t).transpose(1, 0, 2),
               self.params["b"][:, None], out=out)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        b, t, length = self._dims
        wmat = self.params["w"].reshape(self.c_out, -1)
        dmat3 = self._scratch.get("dmat", (self.c_out, b, t))
        np.copyto(dmat3, dout.transpose(1, 0, 2))
        dmat = dmat3.reshape(self.c_out, b * t)
        gw = self.grads.get("w")
        if gw is None or gw.shape != self.params["w"].shape:
            gw = self.grads["w"] = np.empty_like(self.params["w"])
        np.matmul(dmat, self._xmat.T, out=gw.reshape(self.c_out, -1))
        self.grads["b"] = dmat.sum(axis=1)
        # col2im: scatter-add each kernel tap back onto the input axis.
        dxcol = self._scratch.get("dxcol", (self.c_in * self.k, b * t))
        np.matmul(wmat.T, dmat, out=dxcol)
        dxcol4 = dxcol.reshape(self.c_in, self.k, b, t)
        dx = self._scratch.zeros("dx", (b, self.c_in, length))
        dxv = dx.transpose(1, 0, 2)  # [C_in, B, L] view sharing dx's memory
        for k in range(self.k):
            dxv[:, :, k : k + t] += dxcol4[:, k]
        return dx


class ReLU(Layer):
    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        out = self._scratch.get("out", x.shape)
        np.maximum(x, 0.0, out=out)
        self._out = out
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dx = self._scratch.get("dx", dout.shape)
        mask = self._scratch.get("mask", self._out.shape, dtype=bool)
        np.greater(self._out, 0.0, out=mask)
        np.multiply(dout, mask, out=dx)
        return dx


class BatchNorm1d(Layer):
    """Per-channel batch normalization over (batch, position).

    Train mode normalizes with biased batch statistics and updates running
    stats with momentum; eval mode is a frozen per-channel affine map.
    """

    def __init__(self, channels: int, momentum: float = 0.9, eps: float = 1e-5) -> None:
        super().__init__()
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        # State, not trainable.
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.channels:
            raise ValueError("batch norm expects [B, channels, T] input")
        self._train = train
        out = self._scratch.get("out", x.shape)
        if train:
            n = x.shape[0] * x.shape[2]
            mean = x.mean(axis=(0, 2))
            # Single-pass variance; activations are O(1) so the cancellation
            # in E[x^2] - mean^2 is harmless.
            var = np.maximum(np.einsum("bct,bct->c", x, x) / n - mean * mean, 0.0)
            self.running_mean = self.momentum * self.running_mean + (1 - self.momentum) * mean
            self.running_var = self.momentum * self.running_var + (1 - self.momentum) * var
            self._inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = self._scratch.get("xhat", x.shape)
            np.subtract(x, mean[:, None], out=xhat)
            xhat *= self._inv_std[:, None]
            self._xhat = xhat
            np.multiply(xhat, self.params["gamma"][:, None], out=out)
            out += self.params["beta"][:, None]
        else:
            self._inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
            self._x = x
            self._xhat = None  # materialized lazily if backward needs it
            scale, offset = self.eval_affine()
            np.multiply(x, scale[:, None], out=out)
            out += offset[:, None]
        return out

    def _eval_xhat(self) -> np.ndarray:
        xhat = self._scratch.get("xhat", self._x.shape)
        np.subtract(self._x, self.running_mean[:, None], out=xhat)
        xhat *= self._inv_std[:, None]
        return xhat

    def backward(self, dout: np.ndarray) -> np.ndarray:
        gamma = self.params["gamma"]
        xhat = self._xhat if self._xhat is not None else self._eval_xhat()
        sum_dout = dout.sum(axis=(0, 2))
        sum_dout_xhat = np.einsum("bct,bct->c", dout, xhat)
        self.grads["gamma"] = sum_dout_xhat
        self.grads["beta"] = sum_dout
        dx = self._scratch.get("dx", dout.shape)
        coef = gamma * self._inv_std
        if not self._train:
            np.multiply(dout, coef[:, None], out=dx)
            return dx
        # dx = inv_std/n * (n*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat)),
        # with dxhat = gamma*dout; arranged to minimize full-size temporaries.
        n = dout.shape[0] * dout.shape[2]
        np.multiply(dout, coef[:, None], out=dx)
        tmp = self._scratch.get("tmp", dout.shape)
        np.multiply(xhat, (coef * sum_dout_xhat / n)[:, None], out=tmp)
        dx -= tmp
        dx -= (coef * sum_dout / n)[:, None]
        return dx

    def eval_affine(self) -> tuple[np.ndarray, np.ndarray]:
        """Frozen per-channel (scale, offset): y = scale*x + offset."""
        scale = self.params["gamma"] / np.sqrt(self.running_var + self.eps)
        offset = self.params["beta"] - scale * self.running_mean
        return scale, offset


class MaxPool1d(Layer):
    """Non-overlapping max pooling; trailing remainder positions dropped.

    Backward routes gradient only to each window's argmax (first index on
    ties, which is what np.argmax yields).
    """

    def __init__(self, pool_size: int) -> None:
        super().__init__()
        self.pool = pool_size

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        b, c, t = x.shape
        t_out = t // self.pool
        if t_out == 0:
            raise ValueError("input shorter than pool window")
        xr = x[:, :, : t_out * self.pool].reshape(b, c, t_out, self.pool)
        self._in_shape = x.shape
        self._argmax = self._scratch.get("argmax", (b, c, t_out), dtype=np.intp)
        xr.argmax(axis=3, out=self._argmax)
        out = self._scratch.get("out", (b, c, t_out))
        return np.max(xr, axis=3, out=out)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        b, c, t = self._in_shape
        t_out = dout.shape[2]
        dx = self._scratch.zeros("dx", (b, c, t))
        dxr = dx[:, :, : t_out * self.pool].reshape(b, c, t_out, self.pool)
        np.put_along_axis(dxr, self._argmax[..., None], dout[..., None], axis=3)
        return dx


class Flatten(Layer):
    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout.reshape(self._in_shape)


class Dense(Layer):
    def __init__(self, n_in: int, n_out: int,
                 rng: np.random.Generator | None = None) -> None:
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        rng = rng or np.random.default_rng()
        self.params["w"] = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_out))
        self.params["b"] = np.zeros(n_out)

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        self._x = x
        out = self._scratch.get("out", (x.shape[0], self.n_out))
        np.matmul(x, self.params["w"], out=out)
        out += self.params["b"]
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        gw = self.grads.get("w")
        if gw is None or gw.shape != self.params["w"].shape:
            gw = self.grads["w"] = np.empty_like(self.params["w"])
        np.matmul(self._x.T, dout, out=gw)
        self.grads["b"] = dout.sum(axis=0)
        dx = self._scratch.get("dx", self._x.shape)
        np.matmul(dout, self.params["w"].T, out=dx)
        return dx


class Softmax(Layer):
    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        self._logits = x.copy()
        z = x - x.max(axis=1, keepdims=True)
        e = np.exp(z)
        self._probs = e / e.sum(axis=1, keepdims=True)
        return self._probs

    def backward(self, dout: np.ndarray) -> np.ndarray:
        # Jacobian-vector product for arbitrary upstream dL/dprobs.
        p = self._probs
        return p * (dout - (dout * p).sum(axis=1, keepdims=True))
