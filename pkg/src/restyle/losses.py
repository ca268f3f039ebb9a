"""The weighted perceptual objective: content, style, and smoothness terms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


from .config import TransferConfig
from .errors import ConfigurationError
from .network import FeatureSet, LossNetwork, extract_features
from .tensor import Tensor

CSV_HEADER = "iteration,content,style,tv,total"


@dataclass(frozen=True)
class LossReport:
    """Per-iteration loss breakdown; the engine's observable trace."""

    iteration: int
    content: float
    style: float
    tv: float
    total: float

    def csv_row(self) -> str:
        return (
            f"{self.iteration},{self.content!r},{self.style!r},{self.tv!r},{self.total!r}"
        )

    @staticmethod
    def from_csv_row(row: str) -> "LossReport":
        it, c, s, t, total = row.strip().split(",")
        return LossReport(int(it), float(c), float(s), float(t), float(total))


@dataclass(frozen=True)
class StyleTarget:
    """Precomputed per-tap style statistics of the style image.

    mode "gram" stores C×C Gram matrices, mode "spatial_average" stores
    per-channel mean vectors. Targets are plain arrays: they are constants
    during optimization.
    """

    mode: str
    statistics: dict

    @property
    def taps(self) -> tuple:
        return tuple(self.statistics)


def gram_matrix(features: Tensor) -> Tensor:
    """Channel correlation matrix G[i,j] = sum_hw F[i]·F[j] / (C·H·W).

    The C·H·W normalization makes the statistic comparable across image
    resolutions. Differentiable; symmetric and PSD by construction.
    """
    if features.ndim != 3:
        raise ConfigurationError(f"gram_matrix expects C×H×W features, got {features.shape}")
    c, h, w = features.shape
    flat = features.reshape(c, h * w)
    return (flat @ flat.T) * (1.0 / (c * h * w))


def spatial_average(features: Tensor) -> Tensor:
    """Per-channel mean activation, the alternative style statistic."""
    if features.ndim != 3:
        raise ConfigurationError(f"spatial_average expects C×H×W features, got {features.shape}")
    c = features.shape[0]
    return features.reshape(c, -1).mean(axis=1)


def style_target_from_image(
    net: LossNetwork, image: Tensor, taps: Sequence[str], mode: str
) -> StyleTarget:
    """Extract and freeze the style statistics once per run."""
    if mode not in ("gram", "spatial_average"):
        raise ConfigurationError(f"unknown style target mode '{mode}'")
    feats = extract_features(net, image, taps)
    stat = gram_matrix if mode == "gram" else spatial_average
    return StyleTarget(mode, {name: stat(feats[name]).data.copy() for name in taps})


def content_loss(generated: FeatureSet, target: FeatureSet, taps: Sequence[str]) -> Tensor:
    """Mean over taps of the MSE between generated and target activations."""
    if not taps:
        raise ConfigurationError("content loss needs at least one tap")
    total = None
    for name in taps:
        if name not in generated or name not in target:
            raise ConfigurationError(f"content tap '{name}' missing from a feature set")
        gen, tgt = generated[name], target[name]
        if gen.shape != tgt.shape:
            raise ConfigurationError(
                f"content tap '{name}' shape mismatch: {gen.shape} vs {tgt.shape}"
            )
        term = ((gen - tgt.data) ** 2).mean()
        total = term if total is None else total + term
    return total * (1.0 / len(taps))


def style_loss(generated: FeatureSet, target: StyleTarget) -> Tensor:
    """Sum over taps of squared distance between style statistics."""
    stat = gram_matrix if target.mode == "gram" else spatial_average
    total = None
    for name in target.taps:
        if name not in generated:
            raise ConfigurationError(f"style tap '{name}' missing from generated features")
        term = ((stat(generated[name]) - target.statistics[name]) ** 2).sum()
        total = term if total is None else total + term
    if total is None:
        return Tensor(0.0)
    return total


def tv_loss(image: Tensor) -> Tensor:
    """Anisotropic squared total variation over all channels."""
    if image.ndim != 3 or image.shape[1] < 2 or image.shape[2] < 2:
        raise ConfigurationError(f"tv_loss expects C×H×W with H,W >= 2, got {image.shape}")
    dh = image[:, :, 1:] - image[:, :, :-1]
    dv = image[:, 1:, :] - image[:, :-1, :]
    return (dh ** 2).sum() + (dv ** 2).sum()


def total_objective(
    image: Tensor,
    config: TransferConfig,
    content_target: FeatureSet,
    style_target: StyleTarget,
    net: LossNetwork,
):
    """Weighted total loss of a candidate image.

    Returns the differentiable scalar and a numeric LossReport (iteration 0;
    the caller stamps the real iteration). One forward pass serves both the
    content and style taps.
    """
    wanted = list(dict.fromkeys(list(config.content_taps) + list(style_target.taps)))
    features = extract_features(net, image, wanted)

    l_content = content_loss(features, content_target, config.content_taps)
    l_style = style_loss(features, style_target)
    l_tv = tv_loss(image)

    total = (
        l_content * config.content_weight
        + l_style * config.style_weight
        + l_tv * config.tv_strength
    )
    c, s, t = l_content.item(), l_style.item(), l_tv.item()
    report = LossReport(
        iteration=0,
        content=c,
        style=s,
        tv=t,
        total=config.content_weight * c + config.style_weight * s + config.tv_strength * t,
    )
    return total, report
