"""vibxai: saliency analysis for CNN-based condition monitoring on
frequency-RPM and order-RPM maps, with a synthetic sine cut-off benchmark
whose class-discriminative bins are known by construction."""

from . import cli, config, nn, spectral, synth, viz, xai

__version__ = "0.1.0"

__all__ = ["cli", "config", "nn", "spectral", "synth", "viz", "xai", "__version__"]
