"""The full parameter set of a stylization run, with validation and JSON mapping."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Tuple

from .errors import ConfigurationError

DEFAULT_CONTENT_TAPS = ("relu2_2",)
DEFAULT_STYLE_TAPS = ("relu1_1", "relu1_2", "relu2_1", "relu2_2")


@dataclass(frozen=True)
class TransferConfig:
    """Everything a run needs besides the two images and the network.

    learning_rate applies to the Adam optimizer only and is quoted in 8-bit
    pixel units per step (the scale the sweep grids are expressed in).
    """

    num_iterations: int = 500
    save_every: int = 50
    optimizer: str = "lbfgs"
    learning_rate: float = 1e-3
    tv_strength: float = 1e-6
    content_weight: float = 100.0
    style_weight: float = 100.0
    content_taps: Tuple[str, ...] = DEFAULT_CONTENT_TAPS
    style_taps: Tuple[str, ...] = DEFAULT_STYLE_TAPS
    style_target_mode: str = "gram"
    init: str = "content"
    seed: int = 0
    image_size: int = 256

    def validate(self) -> "TransferConfig":
        if not isinstance(self.num_iterations, int) or self.num_iterations < 0:
            raise ConfigurationError("num_iterations must be an integer >= 0")
        if not isinstance(self.save_every, int) or self.save_every < 1:
            raise ConfigurationError("save_every must be an integer >= 1")
        if self.optimizer not in ("adam", "lbfgs"):
            raise ConfigurationError("optimizer must be 'adam' or 'lbfgs'")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be > 0")
        if self.tv_strength < 0:
            raise ConfigurationError("tv_strength must be >= 0")
        if self.content_weight < 0 or self.style_weight < 0:
            raise ConfigurationError("content_weight and style_weight must be >= 0")
        if not self.content_taps:
            raise ConfigurationError("content_taps must name at least one layer")
        if self.style_target_mode not in ("gram", "spatial_average"):
            raise ConfigurationError("style_target_mode must be 'gram' or 'spatial_average'")
        if self.init not in ("noise", "content"):
            raise ConfigurationError("init must be 'noise' or 'content'")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")
        if not isinstance(self.image_size, int) or self.image_size < 8:
            raise ConfigurationError("image_size must be an integer >= 8")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["content_taps"] = list(self.content_taps)
        d["style_taps"] = list(self.style_taps)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TransferConfig":
        """Build from a JSON-style dict; unknown keys are rejected by name."""
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config field(s): {', '.join(unknown)}")
        kwargs = dict(data)
        for key in ("content_taps", "style_taps"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        for key in ("num_iterations", "save_every", "seed", "image_size"):
            if key in kwargs:
                value = kwargs[key]
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigurationError(f"{key} must be a number")
                if isinstance(value, float) and not value.is_integer():
                    raise ConfigurationError(f"{key} must be an integer")
                kwargs[key] = int(value)
        for key in ("learning_rate", "tv_strength", "content_weight", "style_weight"):
            if key in kwargs:
                kwargs[key] = float(kwargs[key])
        return cls(**kwargs).validate()

    def with_overrides(self, **kwargs) -> "TransferConfig":
        return replace(self, **kwargs).validate()
