"""
Folder corpora described by a manifest of `relative_path,label` lines

Images are 8-bit (or 16-bit) binary PGM (P5). Each image is brought to the
configured size either by fitting it inside the frame and center-padding
("pad") or by bilinear resizing to the exact size ("resize").
"""

import csv
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import numpy as np

from ..errors import IngestError
from .dataset import Dataset

ResizePolicy = Literal["pad", "resize"]


def read_pgm(path: Path) -> np.ndarray:
    """Pixels of a binary PGM file scaled into [0, 1]

    Raises:
        IngestError: If the file is unreadable or not a P5 image
    """
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise IngestError(f"Could not read image: {e}", path=str(path)) from e

    tokens: List[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace() and raw[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise IngestError("Truncated PGM header", path=str(path), offset=pos)
        tokens.append(raw[start:pos])

    if tokens[0] != b"P5":
        raise IngestError(f"Not a binary PGM (magic {tokens[0][:2]!r})", path=str(path), offset=0)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise IngestError("Malformed PGM header", path=str(path), offset=pos) from None
    if width < 1 or height < 1 or not (0 < maxval < 65536):
        raise IngestError(f"Invalid PGM geometry {width}x{height} maxval {maxval}", path=str(path), offset=pos)

    pos += 1  # single whitespace byte ends the header
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    needed = width * height * dtype.itemsize
    if len(raw) - pos < needed:
        raise IngestError(f"Truncated PGM raster: need {needed} bytes", path=str(path), offset=len(raw))
    pixels = np.frombuffer(raw, dtype=dtype, count=width * height, offset=pos)
    return pixels.reshape(height, width).astype(np.float32) / np.float32(maxval)


def resize_bilinear(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resampling with half-pixel centers"""
    src_h, src_w = image.shape
    if (src_h, src_w) == (height, width):
        return image.astype(np.float32)

    def _coords(n_out: int, n_in: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        pos = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0, n_in - 1)
        lo = np.floor(pos).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    y0, y1, wy = _coords(height, src_h)
    x0, x1, wx = _coords(width, src_w)
    img = image.astype(np.float64)
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bottom = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    out = top * (1 - wy)[:, None] + bottom * wy[:, None]
    return out.astype(np.float32)


def fit_and_pad(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Shrink to fit (keeping aspect) when needed, then center on a zero frame"""
    src_h, src_w = image.shape
    if src_h > height or src_w > width:
        factor = min(height / src_h, width / src_w)
        image = resize_bilinear(image, max(1, round(src_h * factor)), max(1, round(src_w * factor)))
        src_h, src_w = image.shape
    frame = np.zeros((height, width), dtype=np.float32)
    top, left = (height - src_h) // 2, (width - src_w) // 2
    frame[top:top + src_h, left:left + src_w] = image
    return frame


def load_image_dir(
    root_path: str,
    manifest: str = "manifest.csv",
    size: Tuple[int, int] = (28, 28),
    resize_policy: ResizePolicy = "pad",
    class_count: Optional[int] = None,
) -> Dataset:
    """Load every image named in the manifest under `root_path`

    Raises:
        IngestError: On unreadable files or malformed lines, naming the line
    """
    root = Path(root_path)
    manifest_path = root / manifest
    try:
        with open(manifest_path, "r", newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise IngestError(f"Could not read manifest: {e}", path=str(manifest_path)) from e

    height, width = size
    images: List[np.ndarray] = []
    labels: List[int] = []
    for line_no, row in enumerate(rows, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise IngestError(f"Expected 'relative_path,label', got {len(row)} fields", path=str(manifest_path), line=line_no)
        rel_path, label_text = row[0].strip(), row[1].strip()
        if line_no == 1 and label_text.lower() == "label":
            continue
        try:
            label = int(label_text)
        except ValueError:
            raise IngestError(f"Non-integer label {label_text!r}", path=str(manifest_path), line=line_no) from None
        if label < 0:
            raise IngestError(f"Negative label {label}", path=str(manifest_path), line=line_no)
        try:
            pixels = read_pgm(root / rel_path)
        except IngestError as e:
            raise IngestError(f"{e}", path=str(manifest_path), line=line_no) from e
        if resize_policy == "resize":
            pixels = resize_bilinear(pixels, height, width)
        else:
            pixels = fit_and_pad(pixels, height, width)
        images.append(pixels)
        labels.append(label)

    if not images:
        raise IngestError("Manifest lists no images", path=str(manifest_path))
    classes = class_count if class_count is not None else max(labels) + 1
    if max(labels) >= classes:
        raise IngestError(f"Label {max(labels)} exceeds class count {classes}", path=str(manifest_path))
    stacked = np.stack(images)[:, None, :, :]
    return Dataset(stacked, np.asarray(labels, dtype=np.int64), classes, "all", root.name or "images")
