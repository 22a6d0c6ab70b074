"""Slide geometry, region labels and conversion of annotations to label grids."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidAnnotation, InvalidMeta, InvalidMode, InvalidScale, OutOfBounds, ShapeMismatch

DEFAULT_MPP = 0.454


class Stain(str, enum.Enum):
    HE = "HE"
    IHC_CD3 = "IHC_CD3"


class RegionLabel(enum.IntEnum):
    """Per-pixel tissue class; the integer value is the on-disk palette index."""

    BACKGROUND = 0
    NORMAL = 1
    NEOPLASTIC = 2
    IRRELEVANT = 3

    @classmethod
    def parse(cls, name: str) -> "RegionLabel":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise InvalidAnnotation(f"unknown region label {name!r}") from None


# Later entries win where polygons overlap.
PRECEDENCE = (RegionLabel.NORMAL, RegionLabel.NEOPLASTIC, RegionLabel.IRRELEVANT)


@dataclass(frozen=True)
class SlideMeta:
    microns_per_pixel: float
    width_px: int
    height_px: int
    stain: Stain = Stain.HE

    def __post_init__(self):
        mpp = float(self.microns_per_pixel)
        if not math.isfinite(mpp) or mpp <= 0:
            raise InvalidMeta(f"microns_per_pixel must be positive, got {self.microns_per_pixel!r}")
        if int(self.width_px) < 1 or int(self.height_px) < 1:
            raise InvalidMeta(f"grid must be at least 1x1, got {self.width_px}x{self.height_px}")
        object.__setattr__(self, "microns_per_pixel", mpp)
        object.__setattr__(self, "width_px", int(self.width_px))
        object.__setattr__(self, "height_px", int(self.height_px))
        object.__setattr__(self, "stain", Stain(self.stain))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height_px, self.width_px)

    def to_dict(self) -> dict:
        return {
            "microns_per_pixel": self.microns_per_pixel,
            "width_px": self.width_px,
            "height_px": self.height_px,
            "stain": self.stain.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SlideMeta":
        try:
            return cls(
                microns_per_pixel=d["microns_per_pixel"],
                width_px=d["width_px"],
                height_px=d["height_px"],
                stain=d.get("stain", "HE"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidMeta):
                raise
            raise InvalidMeta(f"malformed slide metadata: {exc}") from None


@dataclass(frozen=True)
class TissueLabelMask:
    meta: SlideMeta
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.shape != self.meta.shape:
            raise ShapeMismatch(f"label grid {labels.shape} does not match meta {self.meta.shape}")
        if labels.size and (labels.min() < 0 or labels.max() > RegionLabel.IRRELEVANT):
            raise InvalidAnnotation("label grid holds values outside 0..3")
        object.__setattr__(self, "labels", labels.astype(np.uint8, copy=False))

    def count(self, label: RegionLabel) -> int:
        return int(np.count_nonzero(self.labels == label))


@dataclass(frozen=True)
class Polygon:
    label: RegionLabel
    vertices: np.ndarray  # (n, 2) as (x, y) in pixels

    def __post_init__(self):
        label = RegionLabel(self.label)
        if label == RegionLabel.BACKGROUND:
            raise InvalidAnnotation("polygons cannot be labeled Background")
        verts = np.asarray(self.vertices, dtype=np.float64)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise InvalidAnnotation(f"vertices must be (x, y) pairs, got shape {verts.shape}")
        if len(verts) < 3:
            raise InvalidAnnotation(f"polygon needs at least 3 vertices, got {len(verts)}")
        if not np.isfinite(verts).all():
            raise InvalidAnnotation("polygon vertices must be finite")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "vertices", verts)


@dataclass(frozen=True)
class AnnotationSet:
    polygons: list[Polygon] = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotationSet":
        polys = []
        for entry in d.get("polygons", []):
            try:
                label = RegionLabel.parse(entry["label"])
                verts = entry["vertices"]
            except (KeyError, TypeError, AttributeError):
                raise InvalidAnnotation(f"malformed polygon entry: {entry!r}") from None
            polys.append(Polygon(label, verts))
        return cls(polys)

    def to_dict(self) -> dict:
        return {
            "polygons": [
                {"label": p.label.name.lower(), "vertices": p.vertices.tolist()}
                for p in self.polygons
            ]
        }


def rasterize_annotations(ann: AnnotationSet, meta: SlideMeta) -> TissueLabelMask:
    """Burn annotation polygons into a label grid.

    A pixel takes a polygon's label when its center lies inside the polygon
    (even-odd rule). Overlaps resolve by Irrelevant > Neoplastic > Normal,
    independent of polygon order; uncovered pixels stay Background.
    """
    w, h = meta.width_px, meta.height_px
    for poly in ann.polygons:
        v = poly.vertices
        if (v[:, 0] < 0).any() or (v[:, 0] > w).any() or (v[:, 1] < 0).any() or (v[:, 1] > h).any():
            raise OutOfBounds(f"{poly.label.name} polygon has vertices outside [0, {w}] x [0, {h}]")

    labels = np.zeros(meta.shape, dtype=np.uint8)
    for label in PRECEDENCE:
        cover = np.zeros(meta.shape, dtype=bool)
        for poly in ann.polygons:
            if poly.label == label:
                kernels.polygon_fill(
                    np.ascontiguousarray(poly.vertices[:, 0]),
                    np.ascontiguousarray(poly.vertices[:, 1]),
                    cover,
                )
        labels[cover] = label
    return TissueLabelMask(meta, labels)


class Resample(str, enum.Enum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"


def scaled_dim(dim: int, factor: float) -> int:
    # round half up, never below one pixel
    return max(1, int(math.floor(dim * factor + 0.5)))


def _source_coords(n_out: int, n_in: int) -> np.ndarray:
    return (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5


def rescale_grid(grid: np.ndarray, factor: float, mode: Resample | str = Resample.NEAREST) -> np.ndarray:
    """Resample a 2D (or H x W x C) grid by ``factor`` with half-pixel alignment.

    Nearest-neighbour keeps label and mask values discrete; bilinear is for
    intensity images only and is refused for boolean grids.
    """
    try:
        factor = float(factor)
    except (TypeError, ValueError):
        raise InvalidScale(f"scale factor must be a number, got {factor!r}") from None
    if not math.isfinite(factor) or factor <= 0:
        raise InvalidScale(f"scale factor must be finite and positive, got {factor}")
    mode = Resample(mode)
    grid = np.asarray(grid)
    if grid.ndim < 2:
        raise ShapeMismatch("rescale_grid expects a 2D grid")
    h, w = grid.shape[:2]
    oh, ow = scaled_dim(h, factor), scaled_dim(w, factor)

    if mode is Resample.NEAREST:
        ri = np.minimum(np.floor((np.arange(oh) + 0.5) * (h / oh)).astype(np.intp), h - 1)
        ci = np.minimum(np.floor((np.arange(ow) + 0.5) * (w / ow)).astype(np.intp), w - 1)
        return grid[ri[:, None], ci[None, :]]

    if grid.dtype == bool:
        raise InvalidMode("bilinear resampling is only allowed for intensity grids")
    ys = np.clip(_source_coords(oh, h), 0, h - 1)
    xs = np.clip(_source_coords(ow, w), 0, w - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    if grid.ndim == 3:
        wy = wy[..., None]
        wx = wx[..., None]
    g = grid.astype(np.float64)
    top = g[y0[:, None], x0[None, :]] * (1 - wx) + g[y0[:, None], x1[None, :]] * wx
    bot = g[y1[:, None], x0[None, :]] * (1 - wx) + g[y1[:, None], x1[None, :]] * wx
    out = top * (1 - wy) + bot * wy
    if np.issubdtype(grid.dtype, np.integer):
        info = np.iinfo(grid.dtype)
        out = np.clip(np.rint(out), info.min, info.max).astype(grid.dtype)
    return out
