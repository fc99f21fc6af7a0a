"""Post-hoc saliency methods for the trained map classifiers.

Six methods over a shared contract: given a checkpoint and a map row (raw,
unstandardized bins), produce one relevance value per input bin.

* grad_cam / grad_cam_pp weight the last conv block's post-ReLU feature
  maps by (averaged / alpha-weighted positive) gradients of the predicted
  class probability.
* score_cam weights them by the probability change when the input is
  masked with each channel's normalized activation; it needs no gradients.
* lrp propagates the class probability backward through the stack with the
  z-rule (optionally epsilon-stabilized), batch norm handled as a frozen
  per-channel affine map and max pool routed to the argmax.
* lime_global fits one ridge surrogate on mask -> mean-class-probability
  pairs for the whole class at once, replacing masked-off spectral bands
  per a configurable strategy (by default with the opposite class's data at
  the same positions), and averages the per-(segments, features) maps.

Gradient-based scores are taken after the softmax; training with label
smoothing keeps those gradients finite even for confident models.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .nn.layers import BatchNorm1d, Conv1d, Dense, Flatten, MaxPool1d, ReLU
from .nn.model import Model
from .nn.training import Checkpoint, restore_model

METHODS = ("gradcam", "gradcam_pp", "scorecam", "lrp_z", "lrp_eps", "lime_global")

REPLACEMENT_STRATEGIES = ("opposite_class", "mean", "total_mean", "noise", "total_noise")


@dataclass
class SaliencyMap:
    """Per-bin relevance aligned to the map it explains."""

    values: np.ndarray
    rpm: np.ndarray
    axis: str
    bin_width: float
    method: str
    class_explained: int

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        self.rpm = np.asarray(self.rpm, dtype=np.float64)
        if self.values.ndim != 2 or self.rpm.shape != (self.values.shape[0],):
            raise ValueError("saliency values must be [n_rows, n_cols] with matching rpm")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("saliency values must be finite")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class LimeConfig:
    segment_counts: tuple[int, ...] = (10, 20, 40)
    feature_counts: tuple[int, ...] = (3, 5, 10)
    perturbations_per_config: int = 1000
    ridge_alpha: float = 1.0
    strategy: str = "opposite_class"
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.segment_counts or not self.feature_counts:
            raise ValueError("need at least one segment count and feature count")
        if min(self.feature_counts) < 1:
            raise ValueError("feature counts must be >= 1")
        if max(self.feature_counts) > min(self.segment_counts):
            raise ValueError("every feature count must be <= min(segment_counts)")
        if self.perturbations_per_config < 10 * max(self.segment_counts):
            raise ValueError(
                "perturbations_per_config must be >= 10 * max(segment_counts)"
            )
        if self.strategy not in REPLACEMENT_STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass
class ClassStats:
    """Per-bin and global statistics of one class's map rows, used by the
    mean/noise replacement strategies."""

    bin_mean: np.ndarray
    bin_min: np.ndarray
    bin_max: np.ndarray
    total_mean: float
    total_min: float
    total_max: float

    @staticmethod
    def from_rows(rows: np.ndarray) -> "ClassStats":
        rows = np.asarray(rows, dtype=np.float64)
        return ClassStats(
            bin_mean=rows.mean(axis=0),
            bin_min=rows.min(axis=0),
            bin_max=rows.max(axis=0),
            total_mean=float(rows.mean()),
            total_min=float(rows.min()),
            total_max=float(rows.max()),
        )


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


def _feature_geometry(config) -> tuple[float, float]:
    """(stride, center of position 0) of the last conv block's post-ReLU
    feature map, in input-bin coordinates.

    Upsampling anchors each feature position at its receptive-field center;
    anchoring at the window start would shift every saliency feature left
    by half a receptive field (about 20 bins for the default stack).
    """
    stride, rf = 1, 1
    blocks = config.conv_blocks
    for i, blk in enumerate(blocks):
        rf += (blk.kernel_size - 1) * stride
        if i < len(blocks) - 1:
            rf += (blk.pool_size - 1) * stride
            stride *= blk.pool_size
    return float(stride), (rf - 1) / 2.0


def _upsample_feature_map(v: np.ndarray, n_cols: int, config) -> np.ndarray:
    stride, center0 = _feature_geometry(config)
    centers = center0 + stride * np.arange(v.size)
    return np.interp(np.arange(n_cols), centers, v)


def _eval_forward_collect(model: Model, x: np.ndarray) -> tuple[np.ndarray, dict, dict]:
    """Eval-mode forward that records every layer's input and output.

    The recorded arrays are copies: the layers reuse their output buffers,
    so anything kept across a later forward pass must be detached.
    """
    inputs: dict[str, np.ndarray] = {}
    outputs: dict[str, np.ndarray] = {}
    h = np.asarray(x, dtype=np.float64)[:, None, :]
    for name, layer in model.named_layers():
        inputs[name] = h
        h = layer.forward(h, train=False).copy()
        outputs[name] = h
    probs = model.softmax.forward(h, train=False)
    return probs, inputs, outputs


def _last_relu_name(model: Model) -> str:
    n_blocks = len(model.config.conv_blocks)
    if n_blocks == 0:
        raise ValueError("model has no conv blocks to take feature maps from")
    return f"relu{n_blocks - 1}"


def _cam_setup(ckpt: Checkpoint, sample: np.ndarray):
    model = restore_model(ckpt)
    sample = np.asarray(sample, dtype=np.float64)
    x = ckpt.standardize(sample[None, :])
    probs, inputs, outputs = _eval_forward_collect(model, x)
    feats = outputs[_last_relu_name(model)][0]  # [channels, positions]
    return model, x, probs, feats


def _class_grad_of_features(model: Model, probs: np.ndarray, class_idx: int) -> np.ndarray:
    dprobs = np.zeros_like(probs)
    dprobs[0, class_idx] = 1.0
    return model.backward_to_layer(dprobs, _last_relu_name(model))[0]


# ---------------------------------------------------------------------------
# CAM family
# ---------------------------------------------------------------------------


def grad_cam(ckpt: Checkpoint, sample: np.ndarray, class_idx: int) -> np.ndarray:
    """Gradient-weighted class activation map, upsampled to input length."""
    model, x, probs, feats = _cam_setup(ckpt, sample)
    grads = _class_grad_of_features(model, probs, class_idx)
    if not np.any(grads):
        warnings.warn("grad_cam: gradient is identically zero; returning zeros")
        return np.zeros(x.shape[1])
    weights = grads.mean(axis=1)  # GAP over positions
    cam = np.maximum(weights @ feats, 0.0)
    return _upsample_feature_map(cam, x.shape[1], model.config)


def grad_cam_pp(ckpt: Checkpoint, sample: np.ndarray, class_idx: int) -> np.ndarray:
    """CAM with alpha-weighted positive gradients.

    Uses the closed-form alpha of the exponential-composed score,
    alpha = g^2 / (2 g^2 + sum_t(A) g^3), with alpha forced to 0 wherever
    the denominator degenerates.
    """
    model, x, probs, feats = _cam_setup(ckpt, sample)
    grads = _class_grad_of_features(model, probs, class_idx)
    if not np.any(grads):
        warnings.warn("grad_cam_pp: gradient is identically zero; returning zeros")
        return np.zeros(x.shape[1])
    g2 = grads**2
    denom = 2.0 * g2 + feats.sum(axis=1, keepdims=True) * grads**3
    # alpha is scale-invariant in the gradient, so only an exactly zero
    # denominator is degenerate (and gets alpha 0).
    alpha = np.divide(g2, denom, out=np.zeros_like(g2), where=denom != 0)
    weights = (alpha * np.maximum(grads, 0.0)).sum(axis=1)
    cam = np.maximum(weights @ feats, 0.0)
    return _upsample_feature_map(cam, x.shape[1], model.config)


def score_cam(ckpt: Checkpoint, sample: np.ndarray, class_idx: int) -> np.ndarray:
    """Gradient-free CAM: channel weights from masked-input score changes.

    Each channel's activation is upsampled, min-max normalized, multiplied
    elementwise with the (standardized) input and passed through the model;
    the weight is that probability minus the unmodified input's probability.
    Channels with constant activation maps get weight 0.
    """
    model, x, probs, feats = _cam_setup(ckpt, sample)
    n_cols = x.shape[1]
    base_score = probs[0, class_idx]
    n_ch = feats.shape[0]
    weights = np.zeros(n_ch)
    masks = np.zeros((n_ch, n_cols))
    active = []
    for k in range(n_ch):
        u = _upsample_feature_map(feats[k], n_cols, model.config)
        lo, hi = u.min(), u.max()
        if hi > lo:
            masks[k] = (u - lo) / (hi - lo)
            active.append(k)
    if active:
        masked_inputs = x[0] * masks[active]
        scores = np.concatenate(
            [
                model.forward(masked_inputs[i : i + 32], train=False)[:, class_idx]
                for i in range(0, len(active), 32)
            ]
        )
        weights[active] = scores - base_score
    cam = np.maximum(weights @ feats, 0.0)
    return _upsample_feature_map(cam, n_cols, model.config)


# ---------------------------------------------------------------------------
# Layer-wise relevance propagation
# ---------------------------------------------------------------------------


def _stabilized(z: np.ndarray, variant: str, eps: float) -> np.ndarray:
    if variant == "z":
        return z
    if variant == "epsilon":
        scale = eps * np.mean(np.abs(z))
        return z + scale * np.where(z >= 0, 1.0, -1.0)
    raise ValueError(f"unknown lrp variant {variant!r}")


def _safe_ratio(relevance: np.ndarray, z: np.ndarray) -> np.ndarray:
    # Exactly-zero denominators drop that unit's relevance (documented).
    return np.divide(relevance, z, out=np.zeros_like(relevance), where=z != 0)


def dense_z_rule(
    x: np.ndarray, w: np.ndarray, b: np.ndarray, relevance: np.ndarray,
    variant: str = "z", eps: float = 1e-2,
) -> np.ndarray:
    """z-rule through y = x @ w + b: R_i = sum_j x_i w_ij / z_j * R_j."""
    z = _stabilized(x @ w + b, variant, eps)
    s = _safe_ratio(relevance, z)
    return x * (s @ w.T)


def conv_z_rule(
    x: np.ndarray, w: np.ndarray, b: np.ndarray, relevance: np.ndarray,
    variant: str = "z", eps: float = 1e-2,
) -> np.ndarray:
    """z-rule through a stride-1 valid conv; x is [B, C_in, L]."""
    ref = Conv1d(w.shape[1], w.shape[0], w.shape[2])
    ref.params["w"], ref.params["b"] = w, b
    z = _stabilized(ref.forward(x, train=False), variant, eps)
    s = _safe_ratio(relevance, z)
    # Transpose pass: same routing as the conv input gradient.
    dpad = np.pad(s, ((0, 0), (0, 0), (w.shape[2] - 1, w.shape[2] - 1)))
    from numpy.lib.stride_tricks import sliding_window_view

    dcol = sliding_window_view(dpad, w.shape[2], axis=2)
    c = np.tensordot(dcol, w[:, :, ::-1], axes=([1, 3], [0, 2]))
    return x * np.ascontiguousarray(c.transpose(0, 2, 1))


def affine_z_rule(
    x: np.ndarray, scale: np.ndarray, offset: np.ndarray, relevance: np.ndarray,
    variant: str = "z", eps: float = 1e-2,
) -> np.ndarray:
    """z-rule through a per-channel affine map (frozen batch norm)."""
    z = _stabilized(scale[:, None] * x + offset[:, None], variant, eps)
    s = _safe_ratio(relevance, z)
    return x * scale[:, None] * s


def lrp(
    ckpt: Checkpoint,
    sample: np.ndarray,
    class_idx: int,
    variant: str = "z",
    eps: float = 1e-2,
) -> np.ndarray:
    """Relevance per input bin, seeded with the predicted class probability.

    The seed is placed at the class position of the output layer and pushed
    back layer by layer: z-rule for dense/conv, frozen-affine z-rule for
    batch norm, argmax routing for max pool, pass-through for ReLU. On a
    bias-free stack the bin relevances sum to the seed exactly; biases
    absorb relevance and the deviation is visible in the output, not hidden.
    ``eps`` scales the epsilon variant's stabilizer relative to each
    layer's mean |denominator|.
    """
    if variant not in ("z", "epsilon"):
        raise ValueError(f"unknown lrp variant {variant!r}")
    model = restore_model(ckpt)
    sample = np.asarray(sample, dtype=np.float64)
    x = ckpt.standardize(sample[None, :])
    probs, inputs, outputs = _eval_forward_collect(model, x)

    relevance = np.zeros_like(probs)
    relevance[0, class_idx] = probs[0, class_idx]
    for name, layer in reversed(model.named_layers()):
        x_in = inputs[name]
        if isinstance(layer, Dense):
            relevance = dense_z_rule(
                x_in, layer.params["w"], layer.params["b"], relevance, variant, eps
            )
        elif isinstance(layer, Conv1d):
            relevance = conv_z_rule(
                x_in, layer.params["w"], layer.params["b"], relevance, variant, eps
            )
        elif isinstance(layer, BatchNorm1d):
            scale, offset = layer.eval_affine()
            relevance = affine_z_rule(x_in, scale, offset, relevance, variant, eps)
        elif isinstance(layer, MaxPool1d):
            relevance = layer.backward(relevance)  # argmax routing
        elif isinstance(layer, Flatten):
            relevance = relevance.reshape(x_in.shape)
        elif isinstance(layer, ReLU):
            pass  # relevance flows through unchanged
        else:  # pragma: no cover - stack is fixed
            raise TypeError(f"no relevance rule for layer {type(layer).__name__}")
    return relevance[0, 0, :]


# ---------------------------------------------------------------------------
# Global LIME with opposite-class band replacement
# ---------------------------------------------------------------------------


def segment_slices(n_cols: int, n_segments: int) -> list[slice]:
    """Equal-width segments; the last one absorbs the remainder."""
    if not 1 <= n_segments <= n_cols:
        raise ValueError("need 1 <= n_segments <= n_cols")
    width = n_cols // n_segments
    bounds = [i * width for i in range(n_segments)] + [n_cols]
    return [slice(bounds[i], bounds[i + 1]) for i in range(n_segments)]


def _replace_rows(
    rows: np.ndarray,
    segment_mask: np.ndarray,
    strategy: str,
    paired_rows: np.ndarray | None,
    stats: ClassStats | None,
    rng: np.random.Generator | None,
) -> np.ndarray:
    slices = segment_slices(rows.shape[1], segment_mask.size)
    out = rows.copy()
    for seg, sl in enumerate(slices):
        if segment_mask[seg]:
            continue
        if strategy == "opposite_class":
            if paired_rows is None:
                raise ValueError("opposite_class replacement requires paired samples")
            out[:, sl] = paired_rows[:, sl]
        elif strategy == "mean":
            out[:, sl] = stats.bin_mean[sl]
        elif strategy == "total_mean":
            out[:, sl] = stats.total_mean
        elif strategy == "noise":
            lo = float(stats.bin_min[sl].min())
            hi = float(stats.bin_max[sl].max())
            out[:, sl] = rng.uniform(lo, hi, size=out[:, sl].shape)
        elif strategy == "total_noise":
            out[:, sl] = rng.uniform(stats.total_min, stats.total_max,
                                     size=out[:, sl].shape)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
    return out


def replace_segments(
    sample: np.ndarray,
    segment_mask: np.ndarray,
    strategy: str = "opposite_class",
    paired_opposite_sample: np.ndarray | None = None,
    class_stats: ClassStats | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Replace the bins of masked-off segments in one sample.

    segment_mask has one bit per segment; 1 keeps the segment, 0 replaces
    it according to ``strategy``: the paired opposite-class sample's bins at
    the same positions, the per-bin class mean, the scalar mean of the whole
    class, or uniform noise spanning the segment's / the whole class's value
    range.
    """
    sample = np.asarray(sample, dtype=np.float64)
    mask = np.asarray(segment_mask).astype(bool)
    paired = None
    if paired_opposite_sample is not None:
        paired = np.asarray(paired_opposite_sample, dtype=np.float64)[None, :]
    if strategy in ("mean", "total_mean", "noise", "total_noise") and class_stats is None:
        raise ValueError(f"strategy {strategy!r} requires class_stats")
    if strategy in ("noise", "total_noise") and rng is None:
        raise ValueError(f"strategy {strategy!r} requires an rng")
    return _replace_rows(sample[None, :], mask, strategy, paired, class_stats, rng)[0]


def ridge_fit(Z: np.ndarray, y: np.ndarray, alpha: float) -> tuple[np.ndarray, float]:
    """Closed-form ridge with an unpenalized intercept.

    Minimizes ||y - Z w - b||^2 + alpha ||w||^2. With alpha = 0 the
    minimum-norm least-squares solution is returned, and a rank-deficient
    design raises LinAlgError.
    """
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] < 1 or y.shape != (Z.shape[0],):
        raise ValueError("Z must be [p, n] with y of length p >= 1")
    p, n = Z.shape
    A = np.concatenate([Z, np.ones((p, 1))], axis=1)
    if alpha == 0.0:
        theta, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
        if rank < min(p, n + 1):
            raise np.linalg.LinAlgError("singular system with alpha=0")
    else:
        gram = A.T @ A
        gram[:n, :n] += alpha * np.eye(n)
        theta = np.linalg.solve(gram, A.T @ y)
    return theta[:n], float(theta[n])


def lime_global(
    ckpt: Checkpoint,
    class_rows: np.ndarray,
    opposite_rows: np.ndarray | None,
    class_idx: int,
    cfg: LimeConfig,
) -> np.ndarray:
    """Global surrogate importance per input bin.

    For every (segment count, feature count) pair: sample random keep/drop
    masks (each segment kept with probability 0.5), perturb every sample of
    the explained class under each mask, record the mean predicted
    probability of that class over the whole set, fit mask -> score with
    ridge regression, keep the top-|weight| segments and expand them
    piecewise-constant over the bins. The returned map is the arithmetic
    mean of all per-pair maps. All perturbations enter the surrogate with
    equal weight; there is no locality kernel.
    """
    class_rows = np.asarray(class_rows, dtype=np.float64)
    if class_rows.ndim != 2 or class_rows.shape[0] < 1:
        raise ValueError("class_rows must be [n_samples, n_cols]")
    if cfg.strategy == "opposite_class":
        if opposite_rows is None:
            raise ValueError("opposite_class strategy requires opposite-class rows")
        opposite_rows = np.asarray(opposite_rows, dtype=np.float64)
        if opposite_rows.shape != class_rows.shape:
            raise ValueError("opposite rows must pair 1:1 with class rows")
    n_cols = class_rows.shape[1]
    model = restore_model(ckpt)
    stats = ClassStats.from_rows(class_rows)

    def mean_class_prob(rows: np.ndarray) -> float:
        x = ckpt.standardize(rows)
        scores = [
            model.forward(x[i : i + 32], train=False)[:, class_idx]
            for i in range(0, x.shape[0], 32)
        ]
        return float(np.concatenate(scores).mean())

    maps = []
    for n_seg in cfg.segment_counts:
        for m_feat in cfg.feature_counts:
            rng = np.random.default_rng(
                np.random.SeedSequence([cfg.seed, n_seg, m_feat])
            )
            masks = rng.random((cfg.perturbations_per_config, n_seg)) < 0.5
            scores = np.empty(cfg.perturbations_per_config)
            for i, mask in enumerate(masks):
                perturbed = _replace_rows(
                    class_rows, mask, cfg.strategy, opposite_rows, stats, rng
                )
                scores[i] = mean_class_prob(perturbed)
            weights, _ = ridge_fit(masks.astype(np.float64), scores, cfg.ridge_alpha)
            keep = np.argsort(-np.abs(weights), kind="stable")[:m_feat]
            selected = np.zeros(n_seg)
            selected[keep] = weights[keep]
            expanded = np.zeros(n_cols)
            for seg, sl in enumerate(segment_slices(n_cols, n_seg)):
                expanded[sl] = selected[seg]
            maps.append(expanded)
    return np.mean(maps, axis=0)


# ---------------------------------------------------------------------------
# Map-level driver + saliency serialization
# ---------------------------------------------------------------------------


def explain_map(
    ckpt: Checkpoint,
    rpm_map,
    method: str,
    class_idx: int,
    lime_cfg: LimeConfig | None = None,
    lrp_eps: float = 1e-2,
) -> SaliencyMap:
    """Run one method over a labeled map.

    Per-sample methods explain each row of the target class and emit one
    saliency row per window; lime_global emits a single global map
    broadcast across all rows for display. The map must carry labels so the
    explained class's rows (and, for LIME pairing, the opposite class's
    rows at the same rpm positions) can be selected.
    """
    if rpm_map.labels is None:
        raise ValueError("map must have labels to be explained")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    idx = np.flatnonzero(rpm_map.labels == class_idx)
    if idx.size == 0:
        raise ValueError(f"map has no rows of class {class_idx}")
    rows = rpm_map.values[idx]
    rpm = rpm_map.rpm[idx]

    if method == "lime_global":
        cfg = lime_cfg or LimeConfig()
        opposite = None
        if cfg.strategy == "opposite_class":
            opp_idx = np.flatnonzero(rpm_map.labels != class_idx)
            if opp_idx.size != idx.size:
                raise ValueError("opposite_class pairing needs equal per-class rows")
            opposite = rpm_map.values[opp_idx]
        flat = lime_global(ckpt, rows, opposite, class_idx, cfg)
        values = np.tile(flat, (idx.size, 1))
    else:
        per_sample = {
            "gradcam": lambda r: grad_cam(ckpt, r, class_idx),
            "gradcam_pp": lambda r: grad_cam_pp(ckpt, r, class_idx),
            "scorecam": lambda r: score_cam(ckpt, r, class_idx),
            "lrp_z": lambda r: lrp(ckpt, r, class_idx, "z", lrp_eps),
            "lrp_eps": lambda r: lrp(ckpt, r, class_idx, "epsilon", lrp_eps),
        }[method]
        values = np.stack([per_sample(r) for r in rows])
    return SaliencyMap(
        values=values, rpm=rpm, axis=rpm_map.axis, bin_width=rpm_map.bin_width,
        method=method, class_explained=class_idx,
    )


_SAL_MAGIC = b"VXSAL"
_SAL_VERSION = 1


def save_saliency(smap: SaliencyMap, path: str) -> None:
    header = json.dumps(
        {
            "axis": smap.axis,
            "bin_width": smap.bin_width,
            "method": smap.method,
            "class_explained": smap.class_explained,
            "n_rows": int(smap.values.shape[0]),
            "n_cols": int(smap.values.shape[1]),
        },
        sort_keys=True,
    ).encode()
    with open(path, "wb") as f:
        f.write(_SAL_MAGIC)
        f.write(struct.pack("<II", _SAL_VERSION, len(header)))
        f.write(header)
        f.write(np.ascontiguousarray(smap.rpm, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(smap.values, dtype="<f8").tobytes())


def load_saliency(path: str) -> SaliencyMap:
    with open(path, "rb") as f:
        if f.read(len(_SAL_MAGIC)) != _SAL_MAGIC:
            raise ValueError(f"{path}: not a saliency file (bad magic)")
        version, hlen = struct.unpack("<II", f.read(8))
        if version != _SAL_VERSION:
            raise ValueError(f"{path}: unsupported saliency version {version}")
        hdr = json.loads(f.read(hlen))
        n_rows, n_cols = hdr["n_rows"], hdr["n_cols"]
        rpm = np.frombuffer(f.read(8 * n_rows), dtype="<f8").copy()
        blob = f.read(8 * n_rows * n_cols)
        if len(blob) != 8 * n_rows * n_cols:
            raise ValueError(f"{path}: truncated saliency file")
        values = np.frombuffer(blob, dtype="<f8").reshape(n_rows, n_cols).copy()
    return SaliencyMap(
        values=values, rpm=rpm, axis=hdr["axis"], bin_width=hdr["bin_width"],
        method=hdr["method"], class_explained=hdr["class_explained"],
    )
