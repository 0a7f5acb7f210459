"""
IDX reader and writer (the MNIST / FashionMNIST container format).

Big-endian layout::

    images: uint32 magic 0x00000803 | uint32 n | uint32 rows | uint32 cols | n·rows·cols uint8
    labels: uint32 magic 0x00000801 | uint32 n | n uint8

Files ending in ``.gz`` are read and written through gzip.
"""

import gzip
import logging
import struct
from pathlib import Path
from typing import BinaryIO, Tuple, Union

import numpy as np

from errors import ConsistencyError, FormatError

from .dataset import Dataset, make_dataset

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

PathLike = Union[str, Path]


def _open(path: Path, mode: str) -> BinaryIO:
    if path.suffix == ".gz":
        return gzip.open(path, mode)
    return open(path, mode)


def _read_header(f: BinaryIO, path: Path, fields: int) -> Tuple[int, ...]:
    raw = f.read(4 * fields)
    if len(raw) != 4 * fields:
        raise FormatError(f"{path}: truncated header ({len(raw)} of {4 * fields} bytes)")
    return struct.unpack(">" + "I" * fields, raw)


def _read_payload(f: BinaryIO, path: Path, count: int) -> np.ndarray:
    raw = f.read()
    if len(raw) != count:
        raise FormatError(f"{path}: expected {count} data bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8)


def read_idx_images(path: PathLike) -> np.ndarray:
    """(n × rows·cols) float64 pixels scaled to [0, 1]."""
    path = Path(path)
    try:
        with _open(path, "rb") as f:
            magic, = _read_header(f, path, 1)
            if magic != IMAGE_MAGIC:
                raise FormatError(f"{path}: image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
            n, rows, cols = _read_header(f, path, 3)
            pixels = _read_payload(f, path, n * rows * cols)
    except OSError as exc:
        raise FormatError(f"{path}: cannot read IDX file: {exc}") from exc
    return pixels.reshape(n, rows * cols).astype(np.float64) / 255.0


def read_idx_labels(path: PathLike) -> np.ndarray:
    path = Path(path)
    try:
        with _open(path, "rb") as f:
            magic, = _read_header(f, path, 1)
            if magic != LABEL_MAGIC:
                raise FormatError(f"{path}: label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
            n, = _read_header(f, path, 1)
            labels = _read_payload(f, path, n)
    except OSError as exc:
        raise FormatError(f"{path}: cannot read IDX file: {exc}") from exc
    return labels.astype(np.int64)


def read_idx(images_path: PathLike, labels_path: PathLike) -> Dataset:
    """
    Load an IDX image/label pair.

    Raises:
        FormatError: Wrong magic number or truncated file.
        ConsistencyError: The two files hold different example counts.
    """
    X = read_idx_images(images_path)
    Y = read_idx_labels(labels_path)
    if len(X) != len(Y):
        raise ConsistencyError(f"{images_path} holds {len(X)} images but {labels_path} holds {len(Y)} labels")
    logger.info("read %d images of %d pixels from %s", len(X), X.shape[1], images_path)
    return make_dataset(X, Y, name=Path(images_path).name, n_classes=int(Y.max()) + 1 if len(Y) else 0)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path: PathLike, labels_path: PathLike) -> None:
    """
    Write uint8 images (n×rows×cols) and labels (n,) as an IDX pair.

    Float images are expected in [0, 1] and are scaled back by 255 and
    rounded.
    """
    images = np.asarray(images)
    labels = np.asarray(labels)
    if images.ndim != 3:
        raise FormatError(f"write_idx: images must be (n×rows×cols), got shape {images.shape}")
    if len(images) != len(labels):
        raise ConsistencyError(f"write_idx: {len(images)} images but {len(labels)} labels")
    if not np.issubdtype(images.dtype, np.integer):
        images = np.rint(images * 255.0)
    pixels = images.astype(np.uint8)
    n, rows, cols = pixels.shape
    with _open(Path(images_path), "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        f.write(pixels.tobytes())
    with _open(Path(labels_path), "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, n))
        f.write(labels.astype(np.uint8).tobytes())
