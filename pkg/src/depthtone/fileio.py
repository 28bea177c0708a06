"""File formats: binary PGM depth images, raw float grids, projection weights.

Depth inputs come in two flavors:

* binary PGM ("P5") with maxval 65535, samples big-endian as the format
  requires; pixel value times unit_mm gives depth (default 0.1 mm per unit),
  and one sentinel value (default 0) marks invalid pixels;
* a raw little-endian float32 grid next to a JSON sidecar
  {"width", "height", "unit_mm", "invalid_value"} for lossless 32-bit depth.

Outputs are 8-bit binary PGM. Query-projection weights are a flat
little-endian float32 blob plus a JSON sidecar listing layer shapes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import DepthGrid, LdrImage
from .errors import MalformedFile

__all__ = [
    "read_pgm",
    "write_pgm",
    "read_depth",
    "write_depth_pgm",
    "write_ldr_pgm",
    "read_attention_maps",
    "load_projection",
    "save_projection",
]


def _read_pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """First `count` whitespace/comment-delimited integer tokens after magic."""
    tokens: list[int] = []
    pos = 2  # past "P5"
    while len(tokens) < count:
        if pos >= len(data):
            raise MalformedFile("PGM header ended early")
        c = data[pos : pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise MalformedFile("unterminated PGM comment")
            pos = nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            tok = data[pos:end]
            if not tok.isdigit():
                raise MalformedFile(f"bad PGM header token {tok!r}")
            tokens.append(int(tok))
            pos = end
    return tokens, pos + 1  # skip the single whitespace after maxval


def read_pgm(path) -> np.ndarray:
    """Load a binary PGM; returns uint8 (maxval < 256) or uint16."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise MalformedFile(f"{path}: not a binary PGM (missing P5 magic)")
    (width, height, maxval), offset = _read_pgm_tokens(data, 3)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise MalformedFile(f"{path}: bad PGM dimensions {width}x{height} maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    raster = data[offset : offset + expected]
    if len(raster) != expected:
        raise MalformedFile(f"{path}: raster has {len(raster)} bytes, expected {expected}")
    return np.frombuffer(raster, dtype=dtype).reshape(height, width).astype(
        np.uint16 if maxval > 255 else np.uint8
    )


def write_pgm(path, values: np.ndarray, maxval: int | None = None) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("PGM data must be 2-D")
    if maxval is None:
        maxval = 255 if values.dtype.itemsize == 1 else 65535
    header = f"P5\n{values.shape[1]} {values.shape[0]}\n{maxval}\n".encode()
    body = (
        values.astype(">u2").tobytes() if maxval > 255 else values.astype("u1").tobytes()
    )
    Path(path).write_bytes(header + body)


def _read_raw_depth(path: Path, unit_mm: float, invalid_value) -> DepthGrid:
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        raise MalformedFile(f"{path}: raw depth needs a JSON sidecar at {sidecar}")
    try:
        meta = json.loads(sidecar.read_text())
        width, height = int(meta["width"]), int(meta["height"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"{sidecar}: bad sidecar ({exc})") from exc
    unit = float(meta.get("unit_mm", unit_mm))
    sentinel = meta.get("invalid_value", invalid_value)
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != width * height:
        raise MalformedFile(f"{path}: {raw.size} samples, sidecar says {width * height}")
    samples = raw.reshape(height, width).astype(np.float64) * unit
    mask = np.isfinite(samples)
    if sentinel is not None:
        mask &= raw.reshape(height, width) != np.float32(sentinel)
    return DepthGrid(np.where(mask, samples, 0.0), mask)


def read_depth(path, unit_mm: float = 0.1, invalid_value: float | None = 0) -> DepthGrid:
    """Load a depth grid from PGM or raw+sidecar, converting to millimeters."""
    path = Path(path)
    if not path.exists():
        raise MalformedFile(f"{path}: no such file")
    if path.suffix.lower() == ".raw":
        return _read_raw_depth(path, unit_mm, invalid_value)
    values = read_pgm(path)
    mask = np.ones(values.shape, dtype=bool)
    if invalid_value is not None:
        mask &= values != invalid_value
    samples = values.astype(np.float64) * unit_mm
    return DepthGrid(np.where(mask, samples, 0.0), mask)


def write_depth_pgm(path, grid: DepthGrid, unit_mm: float = 0.1, invalid_value: int = 0) -> None:
    """Store a depth grid as 16-bit PGM; valid pixels are kept off the sentinel."""
    values = np.rint(grid.samples / unit_mm).astype(np.int64)
    values = np.clip(values, 0, 65535)
    if invalid_value == 0:
        values = np.maximum(values, 1)
    values = np.where(grid.valid_mask, values, invalid_value)
    write_pgm(path, values.astype(np.uint16), maxval=65535)


def write_ldr_pgm(path, image: LdrImage) -> None:
    if image.K > 256:
        raise ValueError(f"cannot store K={image.K} levels in an 8-bit PGM")
    write_pgm(path, image.levels.astype(np.uint8), maxval=255)


def read_attention_maps(path) -> np.ndarray:
    """Load an N_M x H x W float stack from a .npy file."""
    try:
        maps = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise MalformedFile(f"{path}: cannot load maps ({exc})") from exc
    if maps.ndim != 3:
        raise MalformedFile(f"{path}: expected an N_M x H x W array, got shape {maps.shape}")
    return np.asarray(maps, dtype=np.float64)


def save_projection(path, layers) -> None:
    """Write affine layers [(W, b), ...] as flat f32 LE plus a shape sidecar."""
    path = Path(path)
    blobs = []
    shapes = []
    for w, b in layers:
        w = np.asarray(w, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        shapes.append({"out": int(w.shape[0]), "in": int(w.shape[1])})
        blobs.append(w.astype("<f4").tobytes())
        blobs.append(b.astype("<f4").tobytes())
    path.write_bytes(b"".join(blobs))
    path.with_suffix(".json").write_text(json.dumps({"layers": shapes}, indent=2) + "\n")


def load_projection(path) -> list[tuple[np.ndarray, np.ndarray]]:
    """Read affine layers from a flat f32 blob and its JSON shape sidecar."""
    path = Path(path)
    sidecar = path.with_suffix(".json")
    if not path.exists() or not sidecar.exists():
        raise MalformedFile(f"{path}: weights need both the blob and {sidecar}")
    try:
        shapes = json.loads(sidecar.read_text())["layers"]
        shapes = [(int(s["out"]), int(s["in"])) for s in shapes]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"{sidecar}: bad weights sidecar ({exc})") from exc
    raw = np.fromfile(path, dtype="<f4")
    need = sum(o * i + o for o, i in shapes)
    if raw.size != need:
        raise MalformedFile(f"{path}: {raw.size} floats, sidecar shapes need {need}")
    layers = []
    pos = 0
    for out_n, in_n in shapes:
        w = raw[pos : pos + out_n * in_n].reshape(out_n, in_n).astype(np.float64)
        pos += out_n * in_n
        b = raw[pos : pos + out_n].astype(np.float64)
        pos += out_n
        layers.append((w, b))
    return layers
