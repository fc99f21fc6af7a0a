"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    _scratch: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    t: int,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One Adam update, in place.

    t is the 1-based step count used for bias correction:
      m <- b1*m + (1-b1)*g        m_hat = m / (1 - b1^t)
      v <- b2*v + (1-b2)*g^2      v_hat = v / (1 - b2^t)
      p <- p - lr * m_hat / (sqrt(v_hat) + eps)
    All moment updates run in place through one scratch array per parameter.
    """
    if t < 1:
        raise ValueError("step count t must be >= 1")
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for key, g in grads.items():
        if key not in state.m:
            state.m[key] = np.zeros_like(g)
            state.v[key] = np.zeros_like(g)
            state._scratch[key] = np.empty_like(g)
        m, v, s = state.m[key], state.v[key], state._scratch[key]
        m *= beta1
        np.multiply(g, 1.0 - beta1, out=s)
        m += s
        v *= beta2
        np.multiply(g, g, out=s)
        s *= 1.0 - beta2
        v += s
        # s = sqrt(v_hat) + eps, then s = lr * m_hat / s, then p -= s
        np.sqrt(v, out=s)
        s /= np.sqrt(bc2)
        s += eps
        np.divide(m, s, out=s)
        s *= lr / bc1
        params[key] -= s
