"""
Run manifest: the record that lets a training run be repeated exactly
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict

from .. import __version__
from ..config import NetworkConfig
from ..data import Dataset
from ..errors import IngestError

CHECKPOINT_FILE = "checkpoint.bin"
MANIFEST_FILE = "manifest.json"
METRICS_FILE = "metrics.csv"


class ArtifactPaths(BaseModel):
    """Artifact file names, relative to the run directory"""

    checkpoint: str = CHECKPOINT_FILE
    manifest: str = MANIFEST_FILE
    metrics: str = METRICS_FILE


class RunManifest(BaseModel):
    """Resolved config, data identity and artifact layout of one run

    The `checkpoint` section is filled in once training has saved its
    parameters; until then it is None.
    """

    model_config = ConfigDict(extra="forbid")

    config: Dict[str, Any]
    config_fingerprint: str
    data_source: str
    dataset_fingerprint: str
    train_samples: int
    seed: int
    artifacts: ArtifactPaths = ArtifactPaths()
    package_version: str = __version__
    checkpoint: Optional[Dict[str, Any]] = None

    @classmethod
    def for_run(cls, config: NetworkConfig, data_source: str, train_set: Dataset) -> "RunManifest":
        return cls(
            config=config.to_dict(),
            config_fingerprint=config.fingerprint(),
            data_source=data_source,
            dataset_fingerprint=train_set.fingerprint(),
            train_samples=len(train_set),
            seed=config.seed,
        )

    def write(self, directory: str) -> Path:
        path = Path(directory) / self.artifacts.manifest
        path.write_text(json.dumps(self.model_dump(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def read_manifest(directory: str) -> Dict[str, Any]:
    """Raw manifest.json contents of a run or checkpoint directory

    Raises:
        IngestError: If the file is missing or not a JSON object
    """
    path = Path(directory) / MANIFEST_FILE
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise IngestError(f"Could not read manifest: {e}", path=str(path)) from e
    if not isinstance(data, dict):
        raise IngestError("Manifest must hold a JSON object", path=str(path))
    return data
