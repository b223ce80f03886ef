"""
Checkpoints: flat little-endian float arrays plus a JSON manifest section

checkpoint.bin holds every parameter back to back in registration order.
The manifest section records each tensor's name, shape, element offset and
count, the float width, the resolved config, the epoch and the training
accuracy it was selected with.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ..config import NetworkConfig, build_config
from ..errors import IngestError
from ..layers import CapsuleNetwork
from .manifest import CHECKPOINT_FILE, MANIFEST_FILE, read_manifest

_WIRE_DTYPES = {"float32": "<f4", "float64": "<f8"}


@dataclass
class Checkpoint:
    config: NetworkConfig
    state: Dict[str, np.ndarray]
    epoch: int
    train_accuracy: float

    @classmethod
    def from_network(cls, network: CapsuleNetwork, epoch: int, train_accuracy: float) -> "Checkpoint":
        return cls(network.config, network.state_dict(), epoch, train_accuracy)

    def to_network(self) -> CapsuleNetwork:
        network = CapsuleNetwork(self.config)
        network.load_state_dict(self.state)
        return network

    def section(self) -> Dict[str, Any]:
        """Manifest entry describing the binary layout"""
        tensors = []
        offset = 0
        for name, values in self.state.items():
            tensors.append({"name": name, "shape": list(values.shape), "offset": offset, "count": int(values.size)})
            offset += int(values.size)
        return {
            "file": CHECKPOINT_FILE,
            "dtype": _WIRE_DTYPES[self.config.dtype],
            "epoch": self.epoch,
            "train_accuracy": self.train_accuracy,
            "config": self.config.to_dict(),
            "tensors": tensors,
        }


def save_checkpoint(checkpoint: Checkpoint, directory: str, manifest: Optional[Dict[str, Any]] = None) -> Path:
    """Write checkpoint.bin and put its section into manifest.json

    Args:
        checkpoint: Parameters and selection metadata
        directory: Target directory, created if missing
        manifest: Other manifest fields to keep next to the checkpoint section

    Returns:
        Path to checkpoint.bin
    """
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    wire = _WIRE_DTYPES[checkpoint.config.dtype]
    bin_path = root / CHECKPOINT_FILE
    with open(bin_path, "wb") as f:
        for values in checkpoint.state.values():
            f.write(np.ascontiguousarray(values, dtype=wire).tobytes())

    record = dict(manifest or {})
    record["checkpoint"] = checkpoint.section()
    (root / MANIFEST_FILE).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return bin_path


def load_checkpoint(directory: str) -> Checkpoint:
    """Read a checkpoint written by save_checkpoint

    Raises:
        IngestError: If files are missing, truncated or inconsistent
        ConfigurationError: If the stored config no longer validates
    """
    root = Path(directory)
    section = read_manifest(directory).get("checkpoint")
    if not isinstance(section, dict):
        raise IngestError("Manifest has no checkpoint section", path=str(root / MANIFEST_FILE))

    bin_path = root / section.get("file", CHECKPOINT_FILE)
    try:
        raw = bin_path.read_bytes()
    except OSError as e:
        raise IngestError(f"Could not read checkpoint: {e}", path=str(bin_path)) from e

    try:
        config = build_config(section["config"])
        wire = np.dtype(section["dtype"])
        flat = np.frombuffer(raw, dtype=wire)
        state: Dict[str, np.ndarray] = {}
        for entry in section["tensors"]:
            start, count = int(entry["offset"]), int(entry["count"])
            if start + count > flat.size:
                raise IngestError(
                    f"Checkpoint truncated: tensor {entry['name']} needs elements up to {start + count}, file has {flat.size}",
                    path=str(bin_path),
                    offset=flat.size * wire.itemsize,
                )
            state[entry["name"]] = flat[start:start + count].reshape(entry["shape"]).astype(config.dtype)
        return Checkpoint(config, state, int(section["epoch"]), float(section["train_accuracy"]))
    except (KeyError, TypeError, ValueError) as e:
        raise IngestError(f"Malformed checkpoint section: {e}", path=str(root / MANIFEST_FILE)) from e
