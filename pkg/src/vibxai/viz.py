"""Heatmap rendering of RPM maps and saliency maps.

Values are normalized to [0, 1] (optionally after dropping negatives and/or
a log10 transform), outliers above a quantile are clipped to full scale,
and each cell becomes a block of viridis-colored pixels with rpm rising
upward. Output is a lossless raster: binary PPM always, PNG when Pillow is
asked for via the file suffix.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

import numpy as np

_LOG_EPS = 1e-6


@dataclass(frozen=True)
class RenderSpec:
    positive_only: bool = False
    scale: str = "linear"  # linear | log
    clip_quantile: float = 0.95
    pixel_size: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.clip_quantile <= 1.0:
            raise ValueError("clip_quantile must be in (0, 1]")
        if self.scale not in ("linear", "log"):
            raise ValueError("scale must be linear or log")
        if self.pixel_size < 1:
            raise ValueError("pixel_size must be >= 1")


def _load_viridis_table() -> np.ndarray:
    ref = importlib.resources.files("vibxai").joinpath("data/viridis_256.txt")
    rows = [
        [int(v) for v in line.split()]
        for line in ref.read_text().splitlines()
        if line and not line.startswith("#")
    ]
    table = np.array(rows, dtype=np.float64)
    if table.shape != (256, 3):
        raise RuntimeError("viridis table fixture must be 256x3")
    return table


_VIRIDIS = _load_viridis_table()


def normalize_saliency(values: np.ndarray, spec: RenderSpec) -> np.ndarray:
    """Map raw values into [0, 1] for rendering.

    Order: negatives zeroed (if positive_only), log10(v + 1e-6) (if log
    scale), min-max to [0, 1], then everything at or above the
    clip_quantile quantile saturates to 1.0 with linear scaling below. A
    constant map renders mid-scale (all 0.5) by convention.
    """
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    if spec.positive_only:
        v = np.maximum(v, 0.0)
    if spec.scale == "log":
        v = np.log10(v + _LOG_EPS)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.full_like(v, 0.5)
    v = (v - lo) / (hi - lo)
    q = np.quantile(v, spec.clip_quantile)
    if q <= 0.0:
        return (v > 0).astype(np.float64)
    return np.minimum(v / q, 1.0)


def viridis_lookup(v: float) -> tuple[int, int, int]:
    """RGB for v in [0, 1], linearly interpolated in the bundled 256-entry
    table; out-of-range values clamp to the endpoints."""
    pos = np.clip(v, 0.0, 1.0) * 255.0
    lo = int(np.floor(pos))
    hi = min(lo + 1, 255)
    frac = pos - lo
    rgb = _VIRIDIS[lo] * (1.0 - frac) + _VIRIDIS[hi] * frac
    r, g, b = (int(round(c)) for c in rgb)
    return r, g, b


def _rgb_rows(norm: np.ndarray) -> np.ndarray:
    pos = np.clip(norm, 0.0, 1.0) * 255.0
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, 255)
    frac = pos - lo
    rgb = _VIRIDIS[lo] * (1.0 - frac)[..., None] + _VIRIDIS[hi] * frac[..., None]
    return np.round(rgb).astype(np.uint8)


def render_map(m, spec: RenderSpec, path: str) -> None:
    """Write a heatmap image of an RpmMap or SaliencyMap.

    One pixel_size x pixel_size block per cell, lowest rpm row at the
    bottom. ``.ppm`` writes binary P6; ``.png`` needs Pillow. Identical
    inputs write byte-identical files.
    """
    values = np.asarray(m.values if hasattr(m, "values") else m, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:
        raise ValueError("map must be a nonempty 2-D array")
    norm = normalize_saliency(values, spec)
    pixels = _rgb_rows(norm[::-1])  # rpm increases upward
    if spec.pixel_size > 1:
        pixels = pixels.repeat(spec.pixel_size, axis=0).repeat(spec.pixel_size, axis=1)
    path = str(path)
    if path.endswith(".png"):
        from PIL import Image

        Image.fromarray(pixels, mode="RGB").save(path, format="PNG")
    elif path.endswith(".ppm"):
        h, w, _ = pixels.shape
        with open(path, "wb") as f:
            f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
            f.write(pixels.tobytes())
    else:
        raise ValueError(f"unsupported image suffix on {path!r} (use .ppm or .png)")
