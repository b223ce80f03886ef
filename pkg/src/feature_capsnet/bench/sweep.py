"""
Sweep specification for the timing and cost tables
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..config import HeadMode
from ..data import DATASET_CATALOG
from ..errors import ConfigurationError
from ..settings import get_default_budget, get_default_workers

NUMERAL_FEATURES = [2, 4, 6, 8, 10]
CHARACTER_FEATURES = [2, 4, 6, 8, 10, 15, 20]


class SweepDataset(BaseModel):
    """One table row: a named corpus with its class count and train size

    Without `source` the timing sample is synthesized; with one it is drawn
    from the corpus a `--data` argument would load.
    """

    model_config = ConfigDict(extra="forbid")

    name: str
    classes: int = Field(ge=2)
    train_count: int = Field(ge=1)
    source: Optional[str] = None

    @classmethod
    def from_catalog(cls, name: str) -> "SweepDataset":
        if name not in DATASET_CATALOG:
            raise ValueError(f"unknown corpus {name!r}; known corpora are {sorted(DATASET_CATALOG)}")
        preset = DATASET_CATALOG[name]
        return cls(name=name, classes=preset.classes, train_count=preset.train)


class SweepSpec(BaseModel):
    """Datasets x head modes x N_features grid with timing repetitions"""

    model_config = ConfigDict(extra="forbid")

    datasets: List[SweepDataset] = Field(min_length=1)
    n_features: Optional[List[int]] = None
    head_modes: List[HeadMode] = Field(default_factory=lambda: ["class", "feature"], min_length=1)
    budget_bytes: int = Field(default_factory=get_default_budget, gt=0)
    repetitions: int = Field(default=3, ge=3)
    timing_samples: int = Field(default=32, ge=1)
    seed: int = Field(default=0, ge=0)
    workers: int = Field(default_factory=get_default_workers, ge=1)
    base_config: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("datasets", mode="before")
    @classmethod
    def _expand_catalog_names(cls, value: Any) -> Any:
        if isinstance(value, list):
            return [SweepDataset.from_catalog(item) if isinstance(item, str) else item for item in value]
        return value

    @model_validator(mode="after")
    def _check_features(self) -> "SweepSpec":
        if self.n_features is not None:
            if not self.n_features or any(k < 1 for k in self.n_features):
                raise ValueError("n_features: values must be positive integers")
            self.n_features = sorted(set(self.n_features))
        return self

    def features_for(self, dataset: SweepDataset) -> List[int]:
        """N_features columns for a row; the wider range applies beyond ten classes"""
        if self.n_features is not None:
            return list(self.n_features)
        return list(CHARACTER_FEATURES if dataset.classes > 10 else NUMERAL_FEATURES)

    def columns(self) -> List[str]:
        """Stable column order: class-mode baseline, then ascending N_features"""
        columns = ["capsnet"] if "class" in self.head_modes else []
        if "feature" in self.head_modes:
            features = sorted({k for d in self.datasets for k in self.features_for(d)})
            columns.extend(feature_column(k) for k in features)
        return columns


def feature_column(n_features: int) -> str:
    return f"n_features_{n_features}"


def build_sweep(data: Union[Dict[str, Any], SweepSpec], **overrides: Any) -> SweepSpec:
    """Validate a sweep mapping; None-valued overrides are ignored

    Raises:
        ConfigurationError: If the sweep is invalid
    """
    merged = data.model_dump() if isinstance(data, SweepSpec) else dict(data)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SweepSpec.model_validate(merged)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid sweep spec: {e}") from e


def load_sweep_file(path: str, **overrides: Any) -> SweepSpec:
    sweep_path = Path(path)
    try:
        data = json.loads(sweep_path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigurationError(f"Could not read sweep spec {sweep_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Sweep spec {sweep_path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Sweep spec {sweep_path} must hold a JSON object")
    return build_sweep(data, **overrides)
