"""Synthetic sine cut-off dataset.

Two classes of periodic windows with known discriminative features: a base
sine at the rotation frequency (rpm/60) that is either left intact (class
``normal``) or clipped at a fixed amplitude (class ``cutoff``), plus two
constant-frequency sines and Gaussian noise that are common to both classes.
Clipping the base sine injects odd harmonics of the rotation frequency, so
the class difference lives entirely at multiples of rpm/60.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LABEL_NORMAL = 0
LABEL_CUTOFF = 1
LABEL_NAMES = ("normal", "cutoff")


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SignalConfig:
    """Generation parameters for the sine cut-off dataset.

    The defaults put the rotation fundamental at 10..40 Hz across the rpm
    sweep, well separated from the two constant-frequency additions, so the
    clipped-sine harmonics never collide with them. The addition amplitudes
    are kept just above the spectral noise floor: class activation maps
    couple to feature amplitude regardless of class relevance, and louder
    class-neutral tones would dominate the saliency floor.
    """

    sample_rate_hz: float = 4096.0
    window_len: int = 4096
    rpm_start: float = 600.0
    rpm_end: float = 2400.0
    windows_per_class: int = 100
    chirp_amp: float = 1.0
    clip_level: float = 0.7
    add1_freq_hz: float = 500.0
    add2_freq_hz: float = 700.0
    add1_amp: float = 0.001
    add2_amp: float = 0.001
    noise_std: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.clip_level < self.chirp_amp):
            raise ValueError("clip_level must satisfy 0 < clip_level < chirp_amp")
        if not self.rpm_start < self.rpm_end:
            raise ValueError("rpm_start must be < rpm_end")
        nyquist = self.sample_rate_hz / 2.0
        if not (self.rpm_end / 60.0 < self.add1_freq_hz < self.add2_freq_hz < nyquist):
            raise ValueError(
                "need rpm_end/60 < add1_freq_hz < add2_freq_hz < sample_rate_hz/2"
            )
        if not _is_power_of_two(self.window_len):
            raise ValueError("window_len must be a power of two")
        if self.windows_per_class < 1:
            raise ValueError("windows_per_class must be >= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


@dataclass
class TimeWindow:
    """One fixed-length snippet tagged with its rotation speed and class."""

    samples: np.ndarray
    rpm: float
    label: int

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.rpm <= 0:
            raise ValueError("rpm must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")


@dataclass
class LabeledDataset:
    """Ordered window collection; rows sorted by nondecreasing rpm."""

    windows: list[TimeWindow]
    split: str = "train"

    def __post_init__(self) -> None:
        rpms = [w.rpm for w in self.windows]
        if any(b < a for a, b in zip(rpms, rpms[1:])):
            raise ValueError("windows must be sorted by nondecreasing rpm")

    def __len__(self) -> int:
        return len(self.windows)


def clip(x, level: float):
    """Symmetric hard clip: min(max(x, -level), level)."""
    if level <= 0:
        raise ValueError("clip level must be positive")
    return np.clip(x, -level, level)


def _window_rng(seed: int, split_tag: int, index: int) -> np.random.Generator:
    # Each window owns an independent stream so generation order (or
    # parallelism) cannot change the result.
    return np.random.default_rng(np.random.SeedSequence([seed, split_tag, index]))


def make_window(
    cfg: SignalConfig, rpm: float, label: int, rng: np.random.Generator
) -> TimeWindow:
    """Synthesize one window at a fixed rotation speed.

    The base component is chirp_amp * sin(2*pi*(rpm/60)*t + phi0), clipped at
    +-clip_level for the cutoff class before the two constant-frequency sines
    and noise are added. Phases are drawn from ``rng`` so the absolute phase
    carries no class information.
    """
    if not (cfg.rpm_start <= rpm <= cfg.rpm_end):
        raise ValueError(f"rpm {rpm} outside [{cfg.rpm_start}, {cfg.rpm_end}]")
    if label not in (LABEL_NORMAL, LABEL_CUTOFF):
        raise ValueError(f"unknown label {label}")

    n = np.arange(cfg.window_len, dtype=np.float64)
    t = n / cfg.sample_rate_hz
    phi0, phi1, phi2 = rng.uniform(0.0, 2.0 * np.pi, size=3)

    base = cfg.chirp_amp * np.sin(2.0 * np.pi * (rpm / 60.0) * t + phi0)
    if label == LABEL_CUTOFF:
        base = clip(base, cfg.clip_level)

    samples = (
        base
        + cfg.add1_amp * np.sin(2.0 * np.pi * cfg.add1_freq_hz * t + phi1)
        + cfg.add2_amp * np.sin(2.0 * np.pi * cfg.add2_freq_hz * t + phi2)
    )
    if cfg.noise_std > 0:
        samples = samples + rng.normal(0.0, cfg.noise_std, size=cfg.window_len)
    return TimeWindow(samples=samples, rpm=float(rpm), label=label)


def rpm_grid(cfg: SignalConfig) -> np.ndarray:
    """Linearly spaced rpm values, one per window and class."""
    return np.linspace(cfg.rpm_start, cfg.rpm_end, cfg.windows_per_class)


_SPLIT_TAGS = {"train": 1, "test": 2}


def _build_split(cfg: SignalConfig, split: str) -> LabeledDataset:
    tag = _SPLIT_TAGS[split]
    windows: list[TimeWindow] = []
    for i, rpm in enumerate(rpm_grid(cfg)):
        for label in (LABEL_NORMAL, LABEL_CUTOFF):
            rng = _window_rng(cfg.seed, tag, 2 * i + label)
            windows.append(make_window(cfg, rpm, label, rng))
    return LabeledDataset(windows=windows, split=split)


def build_dataset(cfg: SignalConfig) -> tuple[LabeledDataset, LabeledDataset]:
    """Generate (train, test) splits, deterministic given ``cfg``.

    Each split holds windows_per_class windows per class on a shared rpm
    grid, interleaved normal/cutoff at every rpm value. Train and test use
    disjoint random streams derived from cfg.seed.
    """
    return _build_split(cfg, "train"), _build_split(cfg, "test")


# ---------------------------------------------------------------------------
# Dataset CSV format: one row per window, columns rpm,label,s0,s1,...,sN-1
# with repr-precision floats so round trips are bit-exact.
# ---------------------------------------------------------------------------


def save_dataset(ds: LabeledDataset, path) -> None:
    import csv

    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        n = ds.windows[0].samples.size if ds.windows else 0
        writer.writerow(["rpm", "label"] + [f"s{i}" for i in range(n)])
        for w in ds.windows:
            writer.writerow(
                [repr(float(w.rpm)), w.label] + [repr(float(s)) for s in w.samples]
            )


def load_dataset(path, split: str = "train") -> LabeledDataset:
    import csv

    windows = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[:2] != ["rpm", "label"]:
            raise ValueError(f"{path}: expected columns rpm,label,s0,... ")
        for row in reader:
            windows.append(
                TimeWindow(
                    samples=np.array([float(v) for v in row[2:]]),
                    rpm=float(row[0]),
                    label=int(row[1]),
                )
            )
    return LabeledDataset(windows=windows, split=split)
