"""Fixed convolutional feature extractor ("loss network").

The network is an ordered stack of conv / relu / pool layers. Conv weights
come either from a portable binary file or from a seeded generator used by
the tests and the demo. Activations at named layers ("taps") feed the
perceptual losses; the network itself is never trained.

Weight file layout (little-endian, extension-agnostic, magic "NSTW"):

    magic   4 bytes  b"NSTW"
    version u32      1
    count   u32      number of conv weight tensors
    per tensor:
        name_len u16, name UTF-8,
        dtype    u8  (0 = float32),
        ndim     u8, dims u32[ndim],
        data     float32[prod(dims)]
    means   3 x float32   per-channel means subtracted during preprocessing

Only conv weights are persisted; conv biases in a loss network are zero.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, FormatError, TruncatedFileError
from .tensor import Tensor, avg_pool2d, conv2d, max_pool2d, relu

MAGIC = b"NSTW"
VERSION = 1

FeatureSet = Dict[str, Tensor]


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the extractor stack.

    kind "conv" uses out_channels/in_channels/kernel/stride/padding,
    kind "pool" uses window and pool_mode ("avg" or "max"),
    kind "relu" needs nothing extra. Names must be unique in a network.
    """

    name: str
    kind: str
    in_channels: int = 0
    out_channels: int = 0
    kernel: int = 0
    stride: int = 1
    padding: int = 0
    window: int = 0
    pool_mode: str = "avg"

    def __post_init__(self):
        if self.kind not in ("conv", "relu", "pool"):
            raise ConfigurationError(f"unknown layer kind '{self.kind}' for '{self.name}'")
        if self.kind == "pool" and self.pool_mode not in ("avg", "max"):
            raise ConfigurationError(f"unknown pool mode '{self.pool_mode}' for '{self.name}'")


class LossNetwork:
    """Immutable layer stack with bound conv weights; shareable across runs."""

    def __init__(
        self,
        layers: Sequence[LayerSpec],
        weights: Dict[str, np.ndarray],
        channel_means: Sequence[float],
    ):
        names = [layer.name for layer in layers]
        if len(set(names)) != len(names):
            raise ConfigurationError("layer names must be unique")
        for layer in layers:
            if layer.kind != "conv":
                continue
            if layer.name not in weights:
                raise ConfigurationError(f"no weight tensor bound for conv layer '{layer.name}'")
            got = weights[layer.name].shape
            want = (layer.out_channels, layer.in_channels, layer.kernel, layer.kernel)
            if got != want:
                raise ConfigurationError(
                    f"weight shape mismatch for '{layer.name}': declared {want}, bound {got}"
                )
        self.layers = tuple(layers)
        self._weights = {
            name: Tensor(np.asarray(w, dtype=np.float64)) for name, w in weights.items()
        }
        self._biases = {
            name: Tensor(np.zeros(self._weights[name].shape[0])) for name in self._weights
        }
        self.channel_means = np.asarray(channel_means, dtype=np.float64)
        if self.channel_means.shape != (3,):
            raise ConfigurationError("channel_means must hold exactly 3 values")

    @property
    def tap_names(self) -> tuple:
        return tuple(layer.name for layer in self.layers)

    def weight_arrays(self) -> Dict[str, np.ndarray]:
        return {name: t.data for name, t in self._weights.items()}

    def apply_layer(self, layer: LayerSpec, x: Tensor) -> Tensor:
        if layer.kind == "conv":
            return conv2d(
                x,
                self._weights[layer.name],
                self._biases[layer.name],
                stride=layer.stride,
                padding=layer.padding,
            )
        if layer.kind == "relu":
            return relu(x)
        pool = avg_pool2d if layer.pool_mode == "avg" else max_pool2d
        return pool(x, layer.window)


def extract_features(net: LossNetwork, image: Tensor, taps: Sequence[str]) -> FeatureSet:
    """Run the stack over a preprocessed 3×H×W image and collect tap activations.

    Layers past the deepest requested tap are skipped. When the image
    requires gradients the returned activations stay graph-linked, so any
    loss built from them backpropagates to the pixels.
    """
    taps = list(taps)
    if len(set(taps)) != len(taps):
        raise ConfigurationError(f"duplicate tap names requested: {taps}")
    available = set(net.tap_names)
    unknown = [t for t in taps if t not in available]
    if unknown:
        raise ConfigurationError(
            f"unknown tap(s) {unknown}; available taps: {sorted(available)}"
        )
    if not taps:
        return {}

    remaining = set(taps)
    features: FeatureSet = {}
    x = image
    for layer in net.layers:
        x = net.apply_layer(layer, x)
        if layer.name in remaining:
            features[layer.name] = x
            remaining.discard(layer.name)
            if not remaining:
                break
    return features


def tiny_architecture() -> list:
    """The built-in desk-scale extractor layout (valid 3×3 convs, avg pools)."""
    return [
        LayerSpec("conv1_1", "conv", in_channels=3, out_channels=16, kernel=3),
        LayerSpec("relu1_1", "relu"),
        LayerSpec("conv1_2", "conv", in_channels=16, out_channels=16, kernel=3),
        LayerSpec("relu1_2", "relu"),
        LayerSpec("pool1", "pool", window=2),
        LayerSpec("conv2_1", "conv", in_channels=16, out_channels=32, kernel=3),
        LayerSpec("relu2_1", "relu"),
        LayerSpec("conv2_2", "conv", in_channels=32, out_channels=32, kernel=3),
        LayerSpec("relu2_2", "relu"),
        LayerSpec("pool2", "pool", window=2),
        LayerSpec("conv3_2", "conv", in_channels=32, out_channels=64, kernel=3),
        LayerSpec("relu3_2", "relu"),
    ]


def tiny_network(seed: int) -> LossNetwork:
    """Deterministic seeded network so tests and demos need no weight files.

    Conv weights are He-style normals (std = sqrt(2 / fan_in)); the same
    seed always yields bit-identical weights. Channel means are 0.5 on
    [0,1]-scaled pixels.
    """
    rng = np.random.default_rng(seed)
    weights: Dict[str, np.ndarray] = {}
    for layer in tiny_architecture():
        if layer.kind != "conv":
            continue
        fan_in = layer.in_channels * layer.kernel * layer.kernel
        std = np.sqrt(2.0 / fan_in)
        weights[layer.name] = rng.normal(
            0.0, std, size=(layer.out_channels, layer.in_channels, layer.kernel, layer.kernel)
        )
    return LossNetwork(tiny_architecture(), weights, (0.5, 0.5, 0.5))


# -- weight file I/O ---------------------------------------------------------


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise TruncatedFileError(f"weight file truncated while reading {what}")
    return buf


def save_weights(net: LossNetwork, path) -> None:
    """Serialize conv weights and channel means in the portable format."""
    conv_names = [layer.name for layer in net.layers if layer.kind == "conv"]
    arrays = net.weight_arrays()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(conv_names)))
        for name in conv_names:
            arr = arrays[name].astype("<f4")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<BB", 0, arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())
        fh.write(np.asarray(net.channel_means, dtype="<f4").tobytes())


def read_weight_file(path):
    """Parse a weight file into ({name: float64 array}, channel_means)."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}; expected {MAGIC!r}")
        version, count = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version != VERSION:
            raise FormatError(f"unsupported weight file version {version}")
        tensors: Dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, "name length"))
            name = _read_exact(fh, name_len, "name").decode("utf-8")
            dtype, ndim = struct.unpack("<BB", _read_exact(fh, 2, "tensor header"))
            if dtype != 0:
                raise FormatError(f"unknown dtype code {dtype} for tensor '{name}'")
            dims = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim, "dims"))
            payload = _read_exact(fh, 4 * int(np.prod(dims)), f"data of '{name}'")
            tensors[name] = (
                np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(dims)
            )
        means = np.frombuffer(_read_exact(fh, 12, "channel means"), dtype="<f4").astype(
            np.float64
        )
    return tensors, means


def load_weights(path, architecture: Optional[Sequence[LayerSpec]] = None) -> LossNetwork:
    """Bind a weight file to an architecture (built-in layout by default).

    Raises FormatError for bad magic/version, TruncatedFileError for short
    files, and ConfigurationError naming the layer on any shape mismatch.
    """
    if architecture is None:
        architecture = tiny_architecture()
    tensors, means = read_weight_file(path)
    weights: Dict[str, np.ndarray] = {}
    for layer in architecture:
        if layer.kind != "conv":
            continue
        if layer.name not in tensors:
            raise ConfigurationError(f"weight file has no tensor for conv layer '{layer.name}'")
        got = tensors[layer.name].shape
        want = (layer.out_channels, layer.in_channels, layer.kernel, layer.kernel)
        if got != want:
            raise ConfigurationError(
                f"weight shape mismatch for '{layer.name}': declared {want}, stored {got}"
            )
        weights[layer.name] = tensors[layer.name]
    return LossNetwork(architecture, weights, means)
