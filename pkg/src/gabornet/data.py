"""Image-cube loading, normalization, patch extraction, per-class splits and
mirror augmentation.

File formats (little-endian):

  cube:   magic "HSIC", u16 version=1, u16 bands, u32 height, u32 width,
          then bands*height*width float32 samples, band-major row-major.
  labels: magic "HSIL", u16 version=1, u32 height, u32 width, u16 n_classes,
          then height*width uint16 labels row-major (0 = unlabeled,
          1..n_classes = class ids).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

CUBE_MAGIC = b"HSIC"
LABEL_MAGIC = b"HSIL"
FORMAT_VERSION = 1


class DataFormatError(ValueError):
    """Malformed cube or label file; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass
class HsiCube:
    """A (bands, height, width) stack of float32 samples."""

    data: np.ndarray
    band_removed_mask: list[int] | None = None

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass
class GroundTruth:
    """Per-pixel integer labels, 0 = unlabeled."""

    labels: np.ndarray
    n_classes: int
    class_names: list[str] | None = None


@dataclass
class SampleSplit:
    """Disjoint train/test pixel lists; entries are (row, col, label) with
    labels in 1..n_classes."""

    train: list[tuple[int, int, int]]
    test: list[tuple[int, int, int]]
    seed: int


def load_cube(path) -> HsiCube:
    with open(path, "rb") as f:
        raw = f.read()
    header = struct.calcsize("<4sHHII")
    if len(raw) < header:
        raise DataFormatError(f"file too short for a cube header ({len(raw)} bytes)", 0)
    magic, version, bands, height, width = struct.unpack_from("<4sHHII", raw, 0)
    if magic != CUBE_MAGIC:
        raise DataFormatError(f"bad magic {magic!r}, expected {CUBE_MAGIC!r}", 0)
    if version != FORMAT_VERSION:
        raise DataFormatError(f"unsupported cube version {version}", 4)
    count = bands * height * width
    expected = header + 4 * count
    if len(raw) != expected:
        raise DataFormatError(
            f"payload holds {(len(raw) - header) // 4} float32 values, expected {count}",
            len(raw),
        )
    data = np.frombuffer(raw, dtype="<f4", count=count, offset=header)
    if not np.all(np.isfinite(data)):
        bad = int(np.flatnonzero(~np.isfinite(data))[0])
        raise DataFormatError("non-finite sample in cube payload", header + 4 * bad)
    return HsiCube(data=data.reshape(bands, height, width).copy())


def save_cube(cube: HsiCube, path) -> None:
    data = np.ascontiguousarray(cube.data, dtype="<f4")
    with open(path, "wb") as f:
        f.write(struct.pack("<4sHHII", CUBE_MAGIC, FORMAT_VERSION,
                            cube.bands, cube.height, cube.width))
        f.write(data.tobytes())


def load_labels(path) -> GroundTruth:
    with open(path, "rb") as f:
        raw = f.read()
    header = struct.calcsize("<4sHIIH")
    if len(raw) < header:
        raise DataFormatError(f"file too short for a label header ({len(raw)} bytes)", 0)
    magic, version, height, width, n_classes = struct.unpack_from("<4sHIIH", raw, 0)
    if magic != LABEL_MAGIC:
        raise DataFormatError(f"bad magic {magic!r}, expected {LABEL_MAGIC!r}", 0)
    if version != FORMAT_VERSION:
        raise DataFormatError(f"unsupported label version {version}", 4)
    count = height * width
    expected = header + 2 * count
    if len(raw) != expected:
        raise DataFormatError(
            f"payload holds {(len(raw) - header) // 2} labels, expected {count}", len(raw)
        )
    labels = np.frombuffer(raw, dtype="<u2", count=count, offset=header)
    if labels.size and labels.max() > n_classes:
        bad = int(np.flatnonzero(labels > n_classes)[0])
        raise DataFormatError(
            f"label {int(labels[bad])} exceeds declared class count {n_classes}",
            header + 2 * bad,
        )
    return GroundTruth(
        labels=labels.reshape(height, width).astype(np.int64), n_classes=int(n_classes)
    )


def save_labels(gt: GroundTruth, path) -> None:
    labels = np.ascontiguousarray(gt.labels, dtype="<u2")
    h, w = labels.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<4sHIIH", LABEL_MAGIC, FORMAT_VERSION, h, w, gt.n_classes))
        f.write(labels.tobytes())


def normalize_cube(cube: HsiCube) -> HsiCube:
    """Standardize each band to zero mean / unit variance over all pixels.
    Constant bands map to zero."""
    data = cube.data.astype(np.float32)
    mean = data.mean(axis=(1, 2), keepdims=True)
    std = data.std(axis=(1, 2), keepdims=True)
    out = np.where(std > 0, (data - mean) / np.where(std > 0, std, 1.0), 0.0)
    return HsiCube(data=out.astype(np.float32), band_removed_mask=cube.band_removed_mask)


def _reflect_index(i: np.ndarray, n: int) -> np.ndarray:
    """Map arbitrary indices into [0, n) by mirror reflection across the
    borders without repeating the edge sample (…2,1,0,1,2… at the low edge)."""
    if n == 1:
        return np.zeros_like(i)
    period = 2 * n - 2
    i = np.mod(i, period)
    return np.where(i >= n, period - i, i)


def extract_patch(cube: HsiCube, row: int, col: int, patch_size: int) -> np.ndarray:
    """Centered (1, bands, S, S) window around a pixel; coordinates falling
    outside the image are mirror-reflected across the border."""
    if patch_size % 2 == 0 or patch_size < 1:
        raise ValueError(f"patch size must be odd and positive, got {patch_size}")
    if not (0 <= row < cube.height and 0 <= col < cube.width):
        raise ValueError(f"pixel ({row}, {col}) outside image "
                         f"{cube.height}x{cube.width}")
    half = patch_size // 2
    rows = _reflect_index(np.arange(row - half, row + half + 1), cube.height)
    cols = _reflect_index(np.arange(col - half, col + half + 1), cube.width)
    return cube.data[:, rows[:, None], cols[None, :]][None, ...]


def split_per_class(
    gt: GroundTruth,
    n_per_class: int,
    cap_rule: dict[int, int] | None = None,
    seed: int = 0,
) -> SampleSplit:
    """Draw min(n_per_class, cap) training pixels per class without
    replacement; everything else labeled becomes test.

    cap_rule is None (classes smaller than n_per_class are an error) or an
    explicit {class_id: cap} table for unbalanced scenes.
    """
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    rng = np.random.default_rng(seed)
    train: list[tuple[int, int, int]] = []
    test: list[tuple[int, int, int]] = []
    for cls in range(1, gt.n_classes + 1):
        rows, cols = np.nonzero(gt.labels == cls)
        total = rows.size
        if total == 0:
            raise ValueError(f"class {cls} has no labeled pixels")
        n_train = n_per_class
        if cap_rule and cls in cap_rule:
            n_train = min(n_train, cap_rule[cls])
        if n_train > total:
            raise ValueError(
                f"cannot draw {n_train} training pixels from class {cls} "
                f"({total} available) without replacement"
            )
        order = rng.permutation(total)
        for idx in order[:n_train]:
            train.append((int(rows[idx]), int(cols[idx]), cls))
        for idx in order[n_train:]:
            test.append((int(rows[idx]), int(cols[idx]), cls))
    return SampleSplit(train=train, test=test, seed=seed)


# Mirror codes applied to (N, C, H, W) patch stacks; order matters for
# label bookkeeping: original, horizontal-axis, vertical-axis, diagonal.
_MIRRORS = (
    lambda p: p,
    lambda p: p[:, :, ::-1, :],
    lambda p: p[:, :, :, ::-1],
    lambda p: p.transpose(0, 1, 3, 2),
)


def augment_mirror(
    patches: np.ndarray, labels: np.ndarray | None = None
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Original plus mirrors across the horizontal, vertical and diagonal
    axes (4x count).  Copies are grouped per input patch, so labels repeat
    four times each; pass labels to get them tiled accordingly."""
    if patches.ndim != 4 or patches.shape[2] != patches.shape[3]:
        raise ValueError(f"expected square (N, C, S, S) patches, got shape {patches.shape}")
    n = patches.shape[0]
    out = np.empty((4 * n,) + patches.shape[1:], dtype=patches.dtype)
    for m, mirror in enumerate(_MIRRORS):
        out[m::4] = mirror(patches)
    if labels is None:
        return out
    return out, np.repeat(np.asarray(labels), 4)


@dataclass
class PatchDataset:
    """Lazy patch source: pixel entries plus the cube they are cut from.

    entries rows are (row, col, label, mirror_code); mirror_code indexes
    _MIRRORS and is 0 for unaugmented data.
    """

    cube: HsiCube
    entries: np.ndarray
    patch_size: int

    @classmethod
    def from_entries(
        cls,
        cube: HsiCube,
        entries: list[tuple[int, int, int]],
        patch_size: int,
        augment: bool = False,
    ) -> "PatchDataset":
        arr = np.asarray([(r, c, l, 0) for r, c, l in entries], dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 4)
        if augment:
            arr = np.repeat(arr, 4, axis=0)
            arr[:, 3] = np.tile(np.arange(4), len(arr) // 4)
        return cls(cube=cube, entries=arr, patch_size=patch_size)

    def __len__(self) -> int:
        return len(self.entries)

    def gather(self, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Materialize patches and zero-based labels for the given entry rows."""
        rows = self.entries[indices]
        patches = np.concatenate(
            [
                _MIRRORS[m](extract_patch(self.cube, r, c, self.patch_size))
                for r, c, _, m in rows
            ]
        )
        return patches, rows[:, 2] - 1


def batch_iterator(
    dataset: PatchDataset,
    batch_size: int,
    shuffle_seed: int | None = None,
):
    """One epoch of (patches, labels) batches; the final partial batch is
    emitted.  With a seed the entry order is shuffled reproducibly, otherwise
    entries stream in order."""
    if batch_size < 1:
        raise ValueError(f"batch size must be >= 1, got {batch_size}")
    n = len(dataset)
    order = np.arange(n)
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(n)
    for start in range(0, n, batch_size):
        yield dataset.gather(order[start : start + batch_size])
