"""Readers and writers for the on-disk formats.

Label grids are single-channel 8-bit images holding palette indices 0..3,
lymphocyte masks are 0/255 single-channel PNGs, IHC inputs are 8-bit RGB
PNGs; each raster may carry a ``<stem>.json`` sidecar with slide metadata.
All writers go through a temp file and ``os.replace``.
"""
from __future__ import annotations

import io as _io
import json
import os
import tempfile
from pathlib import Path

_UMASK = os.umask(0)
os.umask(_UMASK)

import numpy as np
from PIL import Image

from .errors import FileNotFound, InvalidFile
from .slide_model import RegionLabel, SlideMeta

# Region crops from whole-slide scans exceed PIL's decompression-bomb guard.
Image.MAX_IMAGE_PIXELS = None


def atomic_write_bytes(path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o666 & ~_UMASK)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def _require(path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise FileNotFound(str(path))
    return path


def read_json(path):
    path = _require(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InvalidFile(f"{path}: {exc}") from None


def read_text(path) -> str:
    return _require(path).read_text(encoding="utf-8")


def sidecar_path(raster_path) -> Path:
    p = Path(raster_path)
    return p.with_suffix(".json")


def read_meta(path) -> SlideMeta:
    return SlideMeta.from_dict(read_json(path))


def write_meta(path, meta: SlideMeta) -> Path:
    return write_json(path, meta.to_dict())


def _open_image(path) -> Image.Image:
    path = _require(path)
    try:
        img = Image.open(path)
        img.load()
    except OSError as exc:
        raise InvalidFile(f"{path}: {exc}") from None
    return img


def _png_bytes(arr: np.ndarray) -> bytes:
    buf = _io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG", compress_level=6)
    return buf.getvalue()


def read_gray(path) -> np.ndarray:
    img = _open_image(path)
    if img.mode in ("L", "P"):
        arr = np.asarray(img)
    elif img.mode == "1":
        arr = np.asarray(img.convert("L"))
    elif img.mode in ("I;16", "I"):
        arr = np.asarray(img)
    else:
        raise InvalidFile(f"{path}: expected a single-channel image, got mode {img.mode}")
    img.close()
    return arr


def read_labels(path) -> np.ndarray:
    arr = read_gray(path)
    if arr.size and arr.max() > RegionLabel.IRRELEVANT:
        raise InvalidFile(f"{path}: label image holds values above {int(RegionLabel.IRRELEVANT)}")
    return arr.astype(np.uint8, copy=False)


def write_labels(path, labels: np.ndarray) -> Path:
    return atomic_write_bytes(path, _png_bytes(np.ascontiguousarray(labels, dtype=np.uint8)))


def read_mask(path) -> np.ndarray:
    return read_gray(path) > 0


def write_mask(path, mask: np.ndarray) -> Path:
    arr = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    return atomic_write_bytes(path, _png_bytes(arr))


def read_rgb(path) -> np.ndarray:
    img = _open_image(path)
    if img.mode != "RGB":
        img = img.convert("RGB")
    arr = np.asarray(img)
    img.close()
    return arr


def write_rgb(path, rgb: np.ndarray) -> Path:
    return atomic_write_bytes(path, _png_bytes(np.ascontiguousarray(rgb, dtype=np.uint8)))
