"""
IDX (MNIST format) reading and writing

    [offset] [type]          [value]
    0000     32 bit integer  0x00000803  magic (images) / 0x00000801 (labels)
    0004     32 bit integer  N           number of items
    0008     32 bit integer  rows        (images only)
    0012     32 bit integer  columns     (images only)
    ...      unsigned byte   pixels / labels, row-wise

All integers are big-endian. Paths ending in `.gz` are read and written
through gzip.
"""

import gzip
import struct
from pathlib import Path
from typing import BinaryIO, Optional, Tuple

import numpy as np

from ..errors import IngestError
from .dataset import Dataset

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _open(path: Path, mode: str) -> BinaryIO:
    if path.suffix == ".gz":
        return gzip.open(path, mode)
    return open(path, mode)


def _read_bytes(path: Path) -> bytes:
    try:
        with _open(path, "rb") as f:
            return f.read()
    except (OSError, EOFError) as e:
        raise IngestError(f"Could not read IDX file: {e}", path=str(path)) from e


def _header(raw: bytes, path: Path, magic: int, dims: int) -> Tuple[int, ...]:
    size = 4 * (1 + dims)
    if len(raw) < size:
        raise IngestError(f"Truncated IDX header: need {size} bytes, found {len(raw)}", path=str(path), offset=len(raw))
    found, *shape = struct.unpack(f">{1 + dims}I", raw[:size])
    if found != magic:
        raise IngestError(f"unexpected magic 0x{found:08X}, expected 0x{magic:08X}", path=str(path), offset=0)
    return tuple(shape)


def _payload(raw: bytes, path: Path, offset: int, count: int) -> np.ndarray:
    available = len(raw) - offset
    if available < count:
        raise IngestError(
            f"Truncated IDX payload: need {count} bytes, found {available}", path=str(path), offset=offset + available
        )
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=offset)


def load_idx(images_path: str, labels_path: str, class_count: Optional[int] = None, name: str = "idx") -> Dataset:
    """Load an IDX image/label pair with pixels scaled by 1/255

    Args:
        images_path: IDX3 image file (optionally gzipped)
        labels_path: IDX1 label file (optionally gzipped)
        class_count: Number of classes; inferred as max(label) + 1 when omitted

    Raises:
        IngestError: On bad magic, truncated data or mismatched counts
    """
    images_file, labels_file = Path(images_path), Path(labels_path)
    raw_images = _read_bytes(images_file)
    raw_labels = _read_bytes(labels_file)

    count, rows, cols = _header(raw_images, images_file, IMAGES_MAGIC, 3)
    (label_count,) = _header(raw_labels, labels_file, LABELS_MAGIC, 1)
    if count != label_count:
        raise IngestError(
            f"Image count {count} does not match label count {label_count}", path=str(labels_file), offset=4
        )

    pixels = _payload(raw_images, images_file, 16, count * rows * cols)
    labels = _payload(raw_labels, labels_file, 8, count).astype(np.int64)
    images = (pixels.reshape(count, 1, rows, cols).astype(np.float32) / np.float32(255.0))

    classes = class_count if class_count is not None else (int(labels.max()) + 1 if count else 1)
    if count and labels.max() >= classes:
        raise IngestError(f"Label {int(labels.max())} exceeds class count {classes}", path=str(labels_file), offset=8)
    return Dataset(images, labels, classes, "all", name)


def write_idx(dataset: Dataset, images_path: str, labels_path: str) -> None:
    """Write a dataset as an IDX pair; pixels are stored as round(255 * x)"""
    count = len(dataset)
    rows, cols = dataset.image_size
    pixels = np.clip(np.rint(dataset.images * 255.0), 0, 255).astype(np.uint8)
    if dataset.class_count > 256:
        raise IngestError(f"IDX labels are single bytes; cannot store {dataset.class_count} classes")

    images_file, labels_file = Path(images_path), Path(labels_path)
    try:
        with _open(images_file, "wb") as f:
            f.write(struct.pack(">4I", IMAGES_MAGIC, count, rows, cols))
            f.write(pixels.tobytes())
        with _open(labels_file, "wb") as f:
            f.write(struct.pack(">2I", LABELS_MAGIC, count))
            f.write(dataset.labels.astype(np.uint8).tobytes())
    except OSError as e:
        raise IngestError(f"Could not write IDX file: {e}", path=str(e.filename or images_file)) from e
