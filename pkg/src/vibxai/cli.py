"""Command-line pipeline: generate -> transform -> train -> explain -> render.

Every verb reads the same YAML config and derives its input/output paths
from the configured workdir, so the full chain runs with no manual steps.
``ingest`` converts an external per-sample vibration CSV into the same
window format the synthetic generator emits.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import spectral, synth, viz, xai
from .config import PipelineConfig, load_config
from .nn import load_weights, predict, save_weights, train
from .spectral import RpmMap, load_map, save_map
from .synth import LABEL_NAMES, TimeWindow

DOMAINS = ("frequency", "order")


def _class_index(name: str) -> int:
    if name in LABEL_NAMES:
        return LABEL_NAMES.index(name)
    try:
        return int(name)
    except ValueError:
        raise SystemExit(
            f"error: unknown class {name!r} (use {'/'.join(LABEL_NAMES)} or an integer)"
        )


# ---------------------------------------------------------------------------
# ingestion of external per-sample CSV data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IngestSpec:
    csv_path: str
    rpm_column: str
    vibration_column: str
    window_len: int
    label: int
    rpm_min: float | None = None
    rpm_max: float | None = None

    def __post_init__(self) -> None:
        if self.window_len <= 0 or self.window_len & (self.window_len - 1):
            raise ValueError("window_len must be a power of two")


def ingest_csv(spec: IngestSpec) -> list[TimeWindow]:
    """Cut a long recording into consecutive non-overlapping windows.

    Each window's rpm is the mean of its rpm column; windows outside
    [rpm_min, rpm_max] are dropped, as is a short tail. Malformed rows abort
    with their line numbers.
    """
    rpms: list[float] = []
    vibs: list[float] = []
    bad: list[int] = []
    with open(spec.csv_path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{spec.csv_path}: empty file")
        try:
            rpm_idx = header.index(spec.rpm_column)
            vib_idx = header.index(spec.vibration_column)
        except ValueError:
            raise ValueError(
                f"{spec.csv_path}: missing column(s) "
                f"{spec.rpm_column!r}/{spec.vibration_column!r} in header {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                rpms.append(float(row[rpm_idx]))
                vibs.append(float(row[vib_idx]))
            except (ValueError, IndexError):
                bad.append(lineno)
    if bad:
        shown = ", ".join(map(str, bad[:20]))
        more = f" (+{len(bad) - 20} more)" if len(bad) > 20 else ""
        raise ValueError(f"{spec.csv_path}: malformed rows at lines {shown}{more}")

    rpm_arr = np.array(rpms)
    vib_arr = np.array(vibs)
    windows = []
    for start in range(0, len(vib_arr) - spec.window_len + 1, spec.window_len):
        sl = slice(start, start + spec.window_len)
        rpm = float(rpm_arr[sl].mean())
        if spec.rpm_min is not None and rpm < spec.rpm_min:
            continue
        if spec.rpm_max is not None and rpm > spec.rpm_max:
            continue
        windows.append(TimeWindow(samples=vib_arr[sl], rpm=rpm, label=spec.label))
    return windows


def export_timeseries_csv(
    windows: list[TimeWindow], path, rpm_column: str = "rpm",
    vibration_column: str = "vibration",
) -> None:
    """Write windows back out as a long per-sample recording (the inverse of
    ingest_csv for windows with constant rpm)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([rpm_column, vibration_column])
        for w in windows:
            for s in w.samples:
                writer.writerow([repr(float(w.rpm)), repr(float(s))])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_generate(cfg: PipelineConfig) -> None:
    train_ds, test_ds = synth.build_dataset(cfg.signal)
    out = cfg.dataset_path("train").parent
    out.mkdir(parents=True, exist_ok=True)
    synth.save_dataset(train_ds, cfg.dataset_path("train"))
    synth.save_dataset(test_ds, cfg.dataset_path("test"))
    print(f"wrote {len(train_ds)} train / {len(test_ds)} test windows under {out}")


def _transform_split(cfg: PipelineConfig, split: str, domain: str) -> RpmMap:
    ds = synth.load_dataset(cfg.dataset_path(split), split)
    fs = cfg.signal.sample_rate_hz
    if domain == "frequency":
        return spectral.freq_rpm_map(ds.windows, fs, cfg.spectral.window_fn)
    return spectral.order_rpm_map(
        ds.windows, fs,
        o_max=cfg.spectral.o_max,
        n_order_bins=cfg.spectral.n_order_bins,
        window_fn=cfg.spectral.window_fn,
    )


def cmd_transform(cfg: PipelineConfig, domain: str) -> None:
    cfg.map_path("train", domain).parent.mkdir(parents=True, exist_ok=True)
    for split in ("train", "test"):
        m = _transform_split(cfg, split, domain)
        save_map(m, str(cfg.map_path(split, domain)))
        print(f"{split} {domain} map: {m.n_rows} x {m.n_cols} "
              f"(bin width {m.bin_width:.6g}) -> {cfg.map_path(split, domain)}")


def cmd_train(cfg: PipelineConfig, domain: str) -> None:
    train_map, _ = load_map(str(cfg.map_path("train", domain)))
    test_map, _ = load_map(str(cfg.map_path("test", domain)))
    model_cfg = cfg.model_config(train_map.n_cols)
    ckpt = train(
        model_cfg,
        train_map.values, train_map.labels,
        test_map.values, test_map.labels,
        cfg.train,
        verbose=True,
    )
    cfg.checkpoint_path(domain).parent.mkdir(parents=True, exist_ok=True)
    save_weights(ckpt, str(cfg.checkpoint_path(domain)))
    _, probs = predict(ckpt, test_map.values)
    from .nn.model import smoothed_targets

    logp = np.log(np.clip(probs, 1e-300, None))
    targets = smoothed_targets(test_map.labels, probs.shape[1],
                               cfg.train.label_smoothing)
    loss = float(-(targets * logp).sum(axis=1).mean())
    print(f"best test accuracy {ckpt.best_test_accuracy:.4f} "
          f"(epoch {ckpt.epoch_of_best + 1}); final test loss {loss:.4f}")
    print(f"checkpoint -> {cfg.checkpoint_path(domain)}")


def cmd_explain(cfg: PipelineConfig, domain: str, method: str, class_name: str) -> None:
    class_idx = _class_index(class_name)
    ckpt = load_weights(str(cfg.checkpoint_path(domain)))
    test_map, _ = load_map(str(cfg.map_path("test", domain)))
    smap = xai.explain_map(ckpt, test_map, method, class_idx, lime_cfg=cfg.lime)
    out = cfg.saliency_path(method, class_name, domain)
    out.parent.mkdir(parents=True, exist_ok=True)
    xai.save_saliency(smap, str(out))
    print(f"{method} saliency for class {class_name}: "
          f"{smap.values.shape[0]} x {smap.values.shape[1]} -> {out}")


def _load_any_map(path: str):
    with open(path, "rb") as f:
        magic = f.read(5)
    if magic == b"VXSAL":
        s = xai.load_saliency(path)
        return s, f"{s.method} class {s.class_explained}"
    m, _ = load_map(path)
    return m, f"{m.axis} map"


def cmd_render(cfg: PipelineConfig, map_file: str, out: str | None) -> None:
    m, desc = _load_any_map(map_file)
    if out is None:
        cfg.render_dir().mkdir(parents=True, exist_ok=True)
        out = str(cfg.render_dir() / (Path(map_file).stem + ".png"))
    viz.render_map(m, cfg.render, out)
    print(f"rendered {desc} -> {out}")


def cmd_ingest(spec: IngestSpec, out: str) -> None:
    windows = ingest_csv(spec)
    if not windows:
        raise ValueError("no windows survived ingestion (check rpm filter/window_len)")
    windows.sort(key=lambda w: w.rpm)
    ds = synth.LabeledDataset(windows=windows, split="ingested")
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    synth.save_dataset(ds, out)
    print(f"ingested {len(windows)} windows -> {out}")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vibxai",
        description="RPM-map classification and saliency analysis pipeline",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_config(sp):
        sp.add_argument("--config", required=True, help="YAML pipeline config")

    sp = sub.add_parser("generate", help="synthesize the sine cut-off dataset")
    add_config(sp)

    sp = sub.add_parser("transform", help="build frequency/order RPM maps")
    add_config(sp)
    sp.add_argument("--domain", choices=DOMAINS, required=True)

    sp = sub.add_parser("train", help="train the map classifier")
    add_config(sp)
    sp.add_argument("--domain", choices=DOMAINS, required=True)

    sp = sub.add_parser("explain", help="produce a saliency map")
    add_config(sp)
    sp.add_argument("--domain", choices=DOMAINS, required=True)
    sp.add_argument("--method", choices=xai.METHODS, required=True)
    sp.add_argument("--class", dest="class_name", required=True,
                    help="class to explain (normal/cutoff or integer label)")

    sp = sub.add_parser("render", help="render a map or saliency file to an image")
    add_config(sp)
    sp.add_argument("map_file")
    sp.add_argument("--out", help="output image (.ppm or .png)")

    sp = sub.add_parser("ingest", help="window an external vibration CSV")
    sp.add_argument("--csv", required=True, help="per-sample recording CSV")
    sp.add_argument("--rpm-column", required=True)
    sp.add_argument("--vibration-column", required=True)
    sp.add_argument("--window-len", type=int, required=True)
    sp.add_argument("--label", required=True,
                    help="class label for every window in this file")
    sp.add_argument("--rpm-min", type=float)
    sp.add_argument("--rpm-max", type=float)
    sp.add_argument("--out", required=True, help="output dataset CSV")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "ingest":
            spec = IngestSpec(
                csv_path=args.csv,
                rpm_column=args.rpm_column,
                vibration_column=args.vibration_column,
                window_len=args.window_len,
                label=_class_index(args.label),
                rpm_min=args.rpm_min,
                rpm_max=args.rpm_max,
            )
            cmd_ingest(spec, args.out)
            return 0
        cfg = load_config(args.config)
        if args.command == "generate":
            cmd_generate(cfg)
        elif args.command == "transform":
            cmd_transform(cfg, args.domain)
        elif args.command == "train":
            cmd_train(cfg, args.domain)
        elif args.command == "explain":
            cmd_explain(cfg, args.domain, args.method, args.class_name)
        elif args.command == "render":
            cmd_render(cfg, args.map_file, args.out)
        return 0
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
