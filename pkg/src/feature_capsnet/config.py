"""
Configuration models for networks and losses

NetworkConfig is the single record of architecture and training
hyperparameters. It is validated on construction, serialized into every run
manifest and checkpoint, and fingerprinted for benchmark reports.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigurationError

HeadMode = Literal["class", "feature"]


class LossConfig(BaseModel):
    """Margin and reconstruction loss constants"""

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    m_plus: float = Field(default=0.9, description="Upper margin m+")
    m_minus: float = Field(default=0.1, description="Lower margin m-")
    lam: float = Field(default=0.5, alias="lambda", ge=0.0, description="Down-weight for absent classes")
    beta: float = Field(default=0.0005, gt=0.0, description="Reconstruction loss scale")

    @model_validator(mode="after")
    def _check_margins(self) -> "LossConfig":
        if not (0.0 < self.m_minus < self.m_plus < 1.0):
            raise ValueError(
                f"margins must satisfy 0 < m_minus < m_plus < 1, got m_minus={self.m_minus}, m_plus={self.m_plus}"
            )
        return self


def conv_output_size(size: int, kernel: int, stride: int) -> int:
    """Spatial output size of a valid (unpadded) convolution"""
    return (size - kernel) // stride + 1


class NetworkConfig(BaseModel):
    """Architecture and training hyperparameters"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    head_mode: HeadMode = "class"
    n_class: int = Field(default=10, ge=2, le=10000)
    n_features: Optional[int] = Field(default=None, ge=1, le=1024)
    routing_iters: int = Field(default=3, ge=1, le=16)
    image_height: int = Field(default=28, ge=1)
    image_width: int = Field(default=28, ge=1)

    # Architecture; reduced values serve tests and gradient checks
    conv_channels: int = Field(default=256, ge=1)
    primary_groups: int = Field(default=32, ge=1)
    primary_dim: int = Field(default=8, ge=1)
    capsule_dim: int = Field(default=16, ge=1)
    kernel_size: int = Field(default=9, ge=1)
    conv_stride: int = Field(default=1, ge=1)
    primary_stride: int = Field(default=2, ge=1)
    decoder_hidden: Tuple[int, ...] = (512, 1024)

    loss: LossConfig = Field(default_factory=LossConfig)
    optimizer: Literal["adam"] = "adam"
    learning_rate: float = Field(default=1e-3, gt=0.0)
    batch_size: int = Field(default=64, ge=1)
    epochs: int = Field(default=30, ge=0)
    seed: int = Field(default=0, ge=0)

    resize_policy: Literal["pad", "resize"] = "pad"
    float64: bool = False

    @model_validator(mode="after")
    def _check_geometry(self) -> "NetworkConfig":
        if self.head_mode == "feature" and self.n_features is None:
            raise ValueError("n_features: feature head mode requires n_features >= 1")
        if any(width < 1 for width in self.decoder_hidden):
            raise ValueError(f"decoder_hidden: widths must be positive, got {list(self.decoder_hidden)}")
        grid = self.primary_grid
        if grid[0] < 1 or grid[1] < 1:
            raise ValueError(
                f"image_height/image_width: image {self.image_height}x{self.image_width} is too small, "
                f"minimum is {self.min_image_size}x{self.min_image_size}"
            )
        return self

    @property
    def n_out(self) -> int:
        """Number of routed output capsules (classes or features)"""
        return self.n_class if self.head_mode == "class" else int(self.n_features)

    @property
    def conv1_grid(self) -> Tuple[int, int]:
        k, s = self.kernel_size, self.conv_stride
        return conv_output_size(self.image_height, k, s), conv_output_size(self.image_width, k, s)

    @property
    def primary_grid(self) -> Tuple[int, int]:
        h, w = self.conv1_grid
        k, s = self.kernel_size, self.primary_stride
        if h < 1 or w < 1:
            return 0, 0
        return conv_output_size(h, k, s), conv_output_size(w, k, s)

    @property
    def n_primary(self) -> int:
        """Number of primary capsules N_PC"""
        h, w = self.primary_grid
        return self.primary_groups * h * w

    @property
    def min_image_size(self) -> int:
        """Smallest square image both valid convolutions fit into"""
        return (self.kernel_size - 1) * self.conv_stride + self.kernel_size

    @property
    def n_pixels(self) -> int:
        return self.image_height * self.image_width

    @property
    def dtype(self) -> str:
        return "float64" if self.float64 else "float32"

    def fingerprint(self) -> str:
        """Stable content hash of the resolved configuration"""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def to_dict(self) -> Dict[str, Any]:
        data = self.model_dump(by_alias=True)
        data["decoder_hidden"] = list(self.decoder_hidden)
        return data


def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        field = ".".join(str(p) for p in err.get("loc", ())) or "config"
        message = err.get("msg", "invalid value").removeprefix("Value error, ")
        parts.append(f"{field}: {message}" if not message.startswith(field) else message)
    return "; ".join(parts)


def build_config(data: Optional[Dict[str, Any]] = None, **overrides: Any) -> NetworkConfig:
    """Validate a config mapping plus overrides into a NetworkConfig

    Overrides whose value is None are ignored, so unset command-line flags
    leave file values alone.

    Raises:
        ConfigurationError: If the merged values violate any constraint
    """
    merged: Dict[str, Any] = dict(data or {})
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "loss" and isinstance(value, dict):
            merged["loss"] = {**merged.get("loss", {}), **value}
        else:
            merged[key] = value
    try:
        return NetworkConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid network config: {_format_validation_error(e)}") from e


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON config file into a plain mapping

    Raises:
        ConfigurationError: If the file is missing or is not a JSON object
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigurationError(f"Config file not found: {config_path}")
    try:
        with open(config_path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Config file {config_path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {config_path} must hold a JSON object")
    return data


def decoder_widths(config: NetworkConfig) -> List[int]:
    """Layer widths of the decoder from capsule input to pixels"""
    return [config.capsule_dim * config.n_out, *config.decoder_hidden, config.n_pixels]
