"""Pipeline configuration: one YAML document drives every command.

Each section mirrors one stage's config dataclass; omitted keys fall back
to the library defaults, unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .nn.model import ConvBlockSpec, ModelConfig, DEFAULT_BLOCKS
from .nn.training import TrainConfig
from .synth import SignalConfig
from .viz import RenderSpec
from .xai import LimeConfig


@dataclass(frozen=True)
class SpectralOptions:
    window_fn: str = "hann"
    o_max: float | None = None        # default: Nyquist order at rpm_max
    n_order_bins: int | None = None   # default: frequency bin count


@dataclass
class PipelineConfig:
    workdir: Path = Path("runs/default")
    signal: SignalConfig = field(default_factory=SignalConfig)
    spectral: SpectralOptions = field(default_factory=SpectralOptions)
    model_blocks: tuple[ConvBlockSpec, ...] = DEFAULT_BLOCKS
    dense_hidden: int = 64
    train: TrainConfig = field(default_factory=TrainConfig)
    lime: LimeConfig = field(default_factory=LimeConfig)
    render: RenderSpec = field(default_factory=RenderSpec)

    # -- derived paths ------------------------------------------------------

    def dataset_path(self, split: str) -> Path:
        return self.workdir / "dataset" / f"{split}.csv"

    def map_path(self, split: str, domain: str) -> Path:
        return self.workdir / "maps" / f"{split}_{domain}.rmap"

    def checkpoint_path(self, domain: str) -> Path:
        return self.workdir / "checkpoints" / f"{domain}.ckpt"

    def saliency_path(self, method: str, class_name: str, domain: str) -> Path:
        return self.workdir / "saliency" / f"{method}_{class_name}_{domain}.sal"

    def render_dir(self) -> Path:
        return self.workdir / "renders"

    def model_config(self, input_len: int) -> ModelConfig:
        return ModelConfig(
            input_len=input_len,
            conv_blocks=self.model_blocks,
            dense_hidden=self.dense_hidden,
        )


def _build(cls, section: dict, where: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise ValueError(f"unknown key(s) in {where}: {sorted(unknown)}")
    return cls(**section)


def _tupled(section: dict, *keys: str) -> dict:
    return {k: tuple(v) if k in keys and v is not None else v
            for k, v in section.items()}


def config_from_dict(doc: dict) -> PipelineConfig:
    doc = dict(doc or {})
    known = {"workdir", "signal", "spectral", "model", "train", "lime", "render"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown top-level config section(s): {sorted(unknown)}")
    model_section = dict(doc.get("model") or {})
    unknown_model = set(model_section) - {"conv_blocks", "dense_hidden"}
    if unknown_model:
        raise ValueError(f"unknown key(s) in model: {sorted(unknown_model)}")
    blocks = model_section.get("conv_blocks")
    return PipelineConfig(
        workdir=Path(doc.get("workdir", "runs/default")),
        signal=_build(SignalConfig, doc.get("signal") or {}, "signal"),
        spectral=_build(SpectralOptions, doc.get("spectral") or {}, "spectral"),
        model_blocks=(
            tuple(ConvBlockSpec(**b) for b in blocks) if blocks else DEFAULT_BLOCKS
        ),
        dense_hidden=model_section.get("dense_hidden", 64),
        train=_build(TrainConfig, doc.get("train") or {}, "train"),
        lime=_build(
            LimeConfig,
            _tupled(doc.get("lime") or {}, "segment_counts", "feature_counts"),
            "lime",
        ),
        render=_build(RenderSpec, doc.get("render") or {}, "render"),
    )


def load_config(path: str | Path) -> PipelineConfig:
    with open(path) as f:
        doc = yaml.safe_load(f)
    return config_from_dict(doc)
