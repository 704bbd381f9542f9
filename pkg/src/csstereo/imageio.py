"""File I/O: binary PPM/PGM images, disparity maps, cost-volume dumps, manifests.

Only the binary Netpbm formats (P5 grayscale, P6 color) at 8 bits per
sample are supported; that covers the classic stereo benchmark
distributions without pulling in an image-codec dependency.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ColorImage, CostVolume, DimensionError, DisparityMap, _frozen


class MalformedFileError(ValueError):
    """Raised when a file does not parse as its declared format."""


@dataclass(frozen=True, eq=False)
class EvalMask:
    """Boolean per-pixel mask; True marks pixels included in evaluation."""

    data: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.data, dtype=bool)
        if a.ndim != 2:
            raise DimensionError(f"mask data must be (H, W), got {a.shape}")
        object.__setattr__(self, "data", _frozen(a))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def count(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True)
class DatasetEntry:
    """One stereo pair plus its ground truth and evaluation metadata.

    gt_scale is the divisor turning stored 8-bit gray values into
    disparities (16 for Tsukuba, 8 for Venus, 4 for Teddy/Cones under the
    Middlebury 2003 conventions); the loader trusts whatever the manifest
    says.
    """

    name: str
    left_path: Path
    right_path: Path
    gt_path: Path
    nonocc_mask_path: Optional[Path]
    max_disparity: int
    gt_scale: float

    def __post_init__(self) -> None:
        if self.max_disparity < 1:
            raise ValueError("max_disparity must be >= 1")
        if not self.gt_scale > 0:
            raise ValueError("gt_scale must be > 0")

    def check_files(self) -> None:
        paths = [self.left_path, self.right_path, self.gt_path]
        if self.nonocc_mask_path is not None:
            paths.append(self.nonocc_mask_path)
        for p in paths:
            if not Path(p).is_file():
                raise FileNotFoundError(f"dataset entry '{self.name}': missing file {p}")


def _read_pnm(path) -> tuple[str, np.ndarray]:
    """Read a binary PGM (P5) or PPM (P6) file into a raw uint8 array."""
    raw = Path(path).read_bytes()
    magic = raw[:2].decode("ascii", errors="replace")
    if magic not in ("P5", "P6"):
        raise MalformedFileError(f"{path}: not a binary PGM/PPM (magic {magic!r})")

    # Header: three ASCII integers (width, height, maxval) separated by
    # whitespace, '#' comments running to end of line, then exactly one
    # whitespace byte before the pixel payload.
    pos = 2
    fields = []
    while len(fields) < 3:
        if pos >= len(raw):
            raise MalformedFileError(f"{path}: truncated header")
        c = raw[pos]
        if c == ord("#"):
            nl = raw.find(b"\n", pos)
            pos = len(raw) if nl < 0 else nl + 1
        elif c in b" \t\r\n":
            pos += 1
        elif ord("0") <= c <= ord("9"):
            start = pos
            while pos < len(raw) and ord("0") <= raw[pos] <= ord("9"):
                pos += 1
            fields.append(int(raw[start:pos]))
        else:
            raise MalformedFileError(f"{path}: unexpected byte {raw[pos:pos+1]!r} in header")
    if pos >= len(raw) or raw[pos] not in b" \t\r\n":
        raise MalformedFileError(f"{path}: missing whitespace after maxval")
    pos += 1

    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedFileError(f"{path}: bad dimensions {width}x{height}")
    if not 1 <= maxval <= 255:
        raise MalformedFileError(f"{path}: unsupported maxval {maxval} (8-bit only)")

    channels = 1 if magic == "P5" else 3
    n = width * height * channels
    payload = raw[pos : pos + n]
    if len(payload) < n:
        raise MalformedFileError(f"{path}: payload has {len(payload)} bytes, expected {n}")
    a = np.frombuffer(payload, dtype=np.uint8, count=n)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return magic, a.reshape(shape)


def load_image(path) -> ColorImage:
    """Load a P6 color or P5 grayscale file as a [0,1] ColorImage.

    Grayscale input is replicated to three identical channels.
    """
    magic, a = _read_pnm(path)
    if magic == "P5":
        a = np.repeat(a[:, :, None], 3, axis=2)
    return ColorImage(a.astype(np.float64) / 255.0)


def write_pgm(a: np.ndarray, path) -> None:
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError("write_pgm expects an (H, W) array")
    a = a.astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (a.shape[1], a.shape[0]))
        f.write(a.tobytes())


def write_ppm(a: np.ndarray, path) -> None:
    a = np.asarray(a)
    if a.ndim != 3 or a.shape[2] != 3:
        raise DimensionError("write_ppm expects an (H, W, 3) array")
    a = a.astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (a.shape[1], a.shape[0]))
        f.write(a.tobytes())


def load_gt_disparity(entry: DatasetEntry) -> tuple[DisparityMap, EvalMask]:
    """Load ground truth disparities and the evaluation mask for an entry.

    Stored gray value v maps to disparity v / gt_scale. Pixels stored as 0
    are unknown (occluded or unmeasured) and are excluded from the mask.
    If the entry names a non-occlusion mask file, evaluation is further
    restricted to its nonzero pixels.
    """
    magic, raw = _read_pnm(entry.gt_path)
    if magic != "P5":
        raise MalformedFileError(f"{entry.gt_path}: ground truth must be grayscale PGM")
    disp = raw.astype(np.float64) / entry.gt_scale
    mask = raw != 0
    if entry.nonocc_mask_path is not None:
        mmagic, mraw = _read_pnm(entry.nonocc_mask_path)
        if mmagic != "P5":
            raise MalformedFileError(f"{entry.nonocc_mask_path}: mask must be grayscale PGM")
        if mraw.shape != raw.shape:
            raise DimensionError(
                f"entry '{entry.name}': mask is {mraw.shape[1]}x{mraw.shape[0]}, "
                f"gt is {raw.shape[1]}x{raw.shape[0]}"
            )
        mask &= mraw != 0
    return DisparityMap(disp), EvalMask(mask)


def save_disparity(dmap: DisparityMap, scale: float, path) -> None:
    """Write a disparity map as 8-bit PGM with stored value = label * scale."""
    d = dmap.data
    if not np.issubdtype(d.dtype, np.integer):
        if not np.all(d == np.round(d)):
            raise ValueError("save_disparity needs integer labels")
    stored = d.astype(np.float64) * scale
    if float(stored.max()) > 255:
        raise ValueError(
            f"disparity {float(d.max()):g} * scale {scale:g} overflows the 8-bit range"
        )
    write_pgm(np.round(stored).astype(np.uint8), path)


_DUMP_HEADER = struct.Struct("<III")


def dump_cost_volume(vol: CostVolume, path) -> None:
    """Write a cost volume in the binary exchange format.

    Little-endian: three u32 dims (W, H, L), then W*H*L float32 costs with
    disparity fastest-varying.
    """
    with open(path, "wb") as f:
        f.write(_DUMP_HEADER.pack(vol.width, vol.height, vol.levels))
        f.write(vol.data.astype("<f4").tobytes())


def load_cost_volume(path) -> CostVolume:
    raw = Path(path).read_bytes()
    if len(raw) < _DUMP_HEADER.size:
        raise MalformedFileError(f"{path}: too short for a cost-volume header")
    w, h, l = _DUMP_HEADER.unpack_from(raw)
    n = w * h * l
    body = raw[_DUMP_HEADER.size :]
    if len(body) != 4 * n:
        raise MalformedFileError(
            f"{path}: header declares {n} floats, payload holds {len(body) // 4}"
        )
    a = np.frombuffer(body, dtype="<f4", count=n).reshape(h, w, l)
    return CostVolume(a.astype(np.float64))


def load_manifest(path) -> list[DatasetEntry]:
    """Parse a dataset manifest: one entry per line, whitespace-separated.

    Field order matches DatasetEntry (name, left, right, gt, mask, L,
    gt_scale) with '-' for an absent mask. Relative paths resolve against
    the manifest's directory. Blank lines and '#' comments are skipped.
    Every referenced file must exist.
    """
    path = Path(path)
    base = path.parent
    entries: list[DatasetEntry] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 7:
            raise MalformedFileError(f"{path}:{lineno}: expected 7 fields, got {len(parts)}")
        name, left, right, gt, mask, maxd, scale = parts
        try:
            entry = DatasetEntry(
                name=name,
                left_path=base / left,
                right_path=base / right,
                gt_path=base / gt,
                nonocc_mask_path=None if mask == "-" else base / mask,
                max_disparity=int(maxd),
                gt_scale=float(scale),
            )
        except ValueError as e:
            raise MalformedFileError(f"{path}:{lineno}: {e}") from e
        entry.check_files()
        entries.append(entry)
    return entries
