"""Frequency-RPM and order-RPM map construction.

A frequency-RPM map stacks one-sided amplitude spectra of equal-length
windows, rows ordered by rising rotation speed. Constant-frequency
components form vertical lines; rotation-locked components form lines whose
bin position grows linearly with rpm. The order-RPM map resamples every row
onto a grid of orders (frequency normalized by the rotation frequency
rpm/60), which swaps the two behaviors.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass

import numpy as np

from .synth import TimeWindow

WINDOW_FUNCTIONS = ("rect", "hann")

AXIS_FREQUENCY = "frequency"
AXIS_ORDER = "order"


@dataclass
class Spectrum:
    """One-sided amplitude spectrum (Nyquist bin dropped)."""

    bins: np.ndarray
    df_hz: float

    @property
    def freqs_hz(self) -> np.ndarray:
        return np.arange(self.bins.shape[-1]) * self.df_hz


@dataclass
class RpmMap:
    """Matrix of spectra: rows = windows by rising rpm, columns = bins.

    ``axis`` is "frequency" (bin width in Hz) or "order" (bin width in
    orders). ``labels`` carries the per-row class tag where known.
    """

    values: np.ndarray
    rpm: np.ndarray
    axis: str
    bin_width: float
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        self.rpm = np.asarray(self.rpm, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be 2-D")
        if self.rpm.shape != (self.values.shape[0],):
            raise ValueError("rpm length must match row count")
        if np.any(np.diff(self.rpm) < 0):
            raise ValueError("rpm must be nondecreasing")
        if np.any(self.values < 0):
            raise ValueError("map values must be non-negative")
        if self.axis not in (AXIS_FREQUENCY, AXIS_ORDER):
            raise ValueError(f"unknown axis {self.axis!r}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.values.shape[0],):
                raise ValueError("labels length must match row count")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def rows_for_label(self, label: int) -> "RpmMap":
        """Per-class submap (row order preserved)."""
        if self.labels is None:
            raise ValueError("map has no labels")
        idx = np.flatnonzero(self.labels == label)
        return RpmMap(
            values=self.values[idx],
            rpm=self.rpm[idx],
            axis=self.axis,
            bin_width=self.bin_width,
            labels=self.labels[idx],
        )


def _check_pow2(n: int) -> None:
    if n <= 0 or (n & (n - 1)) != 0:
        raise ValueError(f"length must be a power of two, got {n}")


def amplitude_spectrum(
    samples: np.ndarray, fs: float, window_fn: str = "hann"
) -> Spectrum:
    """One-sided amplitude spectrum of a power-of-two-length signal.

    With the rect window, a bin-centered unit sine yields amplitude 1.0 at
    its bin (scaling 2/N for k >= 1 and 1/N for DC). The hann window trades
    exactness at bin centers for leakage control; its coherent gain of 0.5
    is compensated by an amplitude correction factor of 2.0. The Nyquist bin
    is dropped, so n_bins = N/2.
    """
    x = np.asarray(samples, dtype=np.float64)
    n = x.shape[-1]
    _check_pow2(n)
    if window_fn == "rect":
        xw = x
        gain = 1.0
    elif window_fn == "hann":
        w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)  # periodic hann
        xw = x * w
        gain = 0.5
    else:
        raise ValueError(f"unknown window_fn {window_fn!r}, expected rect|hann")
    spec = np.abs(np.fft.rfft(xw, axis=-1))[..., : n // 2]
    scale = np.full(n // 2, 2.0 / (n * gain))
    scale[0] = 1.0 / (n * gain)
    return Spectrum(bins=spec * scale, df_hz=fs / n)


def fft_energy(samples: np.ndarray) -> float:
    """Signal energy sum(x^2) computed on the frequency side.

    Uses the same transform path as amplitude_spectrum and serves as its
    correctness check against a direct time-domain sum: by Parseval,
    sum(x^2) = (|X_0|^2 + 2*sum_{0<k<N/2}|X_k|^2 + |X_{N/2}|^2) / N.
    """
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    _check_pow2(n)
    mag2 = np.abs(np.fft.rfft(x)) ** 2
    return float((mag2[0] + 2.0 * mag2[1:-1].sum() + mag2[-1]) / n)


def _stack_windows(windows: list[TimeWindow]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not windows:
        raise ValueError("need at least one window")
    n = windows[0].samples.size
    if any(w.samples.size != n for w in windows):
        raise ValueError("all windows must have the same length")
    order = np.argsort([w.rpm for w in windows], kind="stable")
    samples = np.stack([windows[i].samples for i in order])
    rpm = np.array([windows[i].rpm for i in order])
    labels = np.array([windows[i].label for i in order])
    return samples, rpm, labels


def freq_rpm_map(
    windows: list[TimeWindow], fs: float, window_fn: str = "hann"
) -> RpmMap:
    """Frequency-RPM map: one amplitude spectrum per window, sorted by rpm."""
    samples, rpm, labels = _stack_windows(windows)
    spec = amplitude_spectrum(samples, fs, window_fn)
    return RpmMap(
        values=spec.bins, rpm=rpm, axis=AXIS_FREQUENCY,
        bin_width=spec.df_hz, labels=labels,
    )


def default_o_max(fs: float, rpm_max: float) -> float:
    """Largest order whose frequency stays at/below Nyquist at rpm_max."""
    return (fs / 2.0) / (rpm_max / 60.0)


def order_rpm_map(
    windows: list[TimeWindow],
    fs: float,
    o_max: float | None = None,
    n_order_bins: int | None = None,
    window_fn: str = "hann",
) -> RpmMap:
    """Order-RPM map: per-row spectra resampled onto a shared order grid.

    Order o at rotation speed rpm corresponds to frequency o*rpm/60; each
    row is linearly interpolated from its frequency grid onto bins
    o_k = k * d_order, k = 0..n_order_bins-1 with d_order = o_max/n_order_bins.
    n_order_bins defaults to the frequency-map bin count so both feature
    vectors have the same length.
    """
    samples, rpm, labels = _stack_windows(windows)
    n = samples.shape[1]
    if o_max is None:
        o_max = default_o_max(fs, float(rpm.max()))
    if o_max * (float(rpm.max()) / 60.0) > fs / 2.0 + 1e-9:
        raise ValueError("o_max * rpm_max/60 exceeds Nyquist frequency")
    if n_order_bins is None:
        n_order_bins = n // 2
    spec = amplitude_spectrum(samples, fs, window_fn)
    freqs = spec.freqs_hz
    d_order = o_max / n_order_bins
    order_grid = np.arange(n_order_bins) * d_order
    values = np.empty((samples.shape[0], n_order_bins))
    for i in range(samples.shape[0]):
        f_wanted = order_grid * (rpm[i] / 60.0)
        values[i] = np.interp(f_wanted, freqs, spec.bins[i])
    return RpmMap(
        values=values, rpm=rpm, axis=AXIS_ORDER,
        bin_width=d_order, labels=labels,
    )


# ---------------------------------------------------------------------------
# Serialization. Binary form: magic, version, JSON header, float64 blobs.
# CSV form: '#' header lines, then one row per map row:
# rpm,label,v0,v1,...  (label -1 when unknown). Both forms round-trip exactly
# (CSV uses repr-precision floats).
# ---------------------------------------------------------------------------

_MAP_MAGIC = b"VXMAP"
_MAP_VERSION = 1


def _map_header(m: RpmMap, extra: dict | None = None) -> dict:
    hdr = {
        "axis": m.axis,
        "bin_width": m.bin_width,
        "n_rows": int(m.n_rows),
        "n_cols": int(m.n_cols),
        "has_labels": m.labels is not None,
    }
    if extra:
        hdr.update(extra)
    return hdr


def save_map(m: RpmMap, path: str, extra_meta: dict | None = None) -> None:
    """Write a map; '.csv' suffix selects the CSV form, else binary."""
    if str(path).endswith(".csv"):
        _save_map_csv(m, path, extra_meta)
    else:
        _save_map_binary(m, path, extra_meta)


def _save_map_binary(m: RpmMap, path: str, extra_meta: dict | None) -> None:
    header = json.dumps(_map_header(m, extra_meta), sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(_MAP_MAGIC)
        f.write(struct.pack("<II", _MAP_VERSION, len(header)))
        f.write(header)
        f.write(np.ascontiguousarray(m.rpm, dtype="<f8").tobytes())
        if m.labels is not None:
            f.write(np.ascontiguousarray(m.labels, dtype="<i8").tobytes())
        f.write(np.ascontiguousarray(m.values, dtype="<f8").tobytes())


def _save_map_csv(m: RpmMap, path: str, extra_meta: dict | None) -> None:
    with open(path, "w", newline="") as f:
        for k, v in sorted(_map_header(m, extra_meta).items()):
            f.write(f"# {k}={v}\n")
        writer = csv.writer(f)
        labels = m.labels if m.labels is not None else np.full(m.n_rows, -1)
        for i in range(m.n_rows):
            writer.writerow(
                [repr(float(m.rpm[i])), int(labels[i])]
                + [repr(float(v)) for v in m.values[i]]
            )


def load_map(path: str) -> tuple[RpmMap, dict]:
    """Read a map written by save_map; returns (map, extra metadata)."""
    if str(path).endswith(".csv"):
        return _load_map_csv(path)
    return _load_map_binary(path)


_CORE_KEYS = {"axis", "bin_width", "n_rows", "n_cols", "has_labels"}


def _load_map_binary(path: str) -> tuple[RpmMap, dict]:
    with open(path, "rb") as f:
        magic = f.read(len(_MAP_MAGIC))
        if magic != _MAP_MAGIC:
            raise ValueError(f"{path}: not a map file (bad magic)")
        version, hlen = struct.unpack("<II", f.read(8))
        if version != _MAP_VERSION:
            raise ValueError(f"{path}: unsupported map version {version}")
        hdr = json.loads(f.read(hlen))
        n_rows, n_cols = hdr["n_rows"], hdr["n_cols"]
        rpm = np.frombuffer(f.read(8 * n_rows), dtype="<f8")
        labels = None
        if hdr["has_labels"]:
            labels = np.frombuffer(f.read(8 * n_rows), dtype="<i8")
        blob = f.read(8 * n_rows * n_cols)
        if len(blob) != 8 * n_rows * n_cols:
            raise ValueError(f"{path}: truncated map file")
        values = np.frombuffer(blob, dtype="<f8").reshape(n_rows, n_cols)
    extra = {k: v for k, v in hdr.items() if k not in _CORE_KEYS}
    m = RpmMap(values=values.copy(), rpm=rpm.copy(), axis=hdr["axis"],
               bin_width=hdr["bin_width"], labels=labels)
    return m, extra


def _load_map_csv(path: str) -> tuple[RpmMap, dict]:
    hdr: dict = {}
    rows = []
    with open(path, newline="") as f:
        for line in f:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                hdr[k.strip()] = v
            else:
                if line.strip():
                    rows.append(line)
    axis = hdr["axis"]
    bin_width = float(hdr["bin_width"])
    rpm, labels, values = [], [], []
    for line in rows:
        parts = next(csv.reader([line]))
        rpm.append(float(parts[0]))
        labels.append(int(parts[1]))
        values.append([float(v) for v in parts[2:]])
    labels_arr = np.array(labels)
    m = RpmMap(
        values=np.array(values), rpm=np.array(rpm), axis=axis,
        bin_width=bin_width,
        labels=None if np.all(labels_arr == -1) else labels_arr,
    )
    extra = {k: v for k, v in hdr.items() if k not in _CORE_KEYS}
    return m, extra
