"""restyle: optimization-based neural style transfer at desk scale.

The engine optimizes an output image against perceptual content/style
losses extracted by a fixed convolutional feature network, logs a full
per-iteration loss breakdown, reproduces parameter sweeps as labelled
contact sheets, and exposes runs through an HTTP job service.
"""

from .config import TransferConfig
from .imaging import RgbImage, contact_sheet, load_png, resize_bilinear, save_png
from .losses import LossReport
from .network import LossNetwork, extract_features, load_weights, save_weights, tiny_network
from .optimize import TransferResult, run_transfer
from .sweeps import SweepSpec, builtin_sweeps, recommended_preset, run_sweep
from .tensor import Tensor

__all__ = [
    "LossNetwork",
    "LossReport",
    "RgbImage",
    "SweepSpec",
    "Tensor",
    "TransferConfig",
    "TransferResult",
    "builtin_sweeps",
    "contact_sheet",
    "extract_features",
    "load_png",
    "load_weights",
    "recommended_preset",
    "resize_bilinear",
    "run_sweep",
    "run_transfer",
    "save_png",
    "save_weights",
    "tiny_network",
]
