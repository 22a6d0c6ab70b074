"""DAB lymphocyte masks from IHC RGB images by color deconvolution.

Pipeline: 8-bit RGB -> optical density per channel -> concentrations in a
hematoxylin / DAB / residual basis -> threshold on DAB -> 8-connected area
opening to drop speckle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidStainMatrix, InvalidValue, ShapeMismatch, SingularStainMatrix
from .slide_model import SlideMeta

BACKGROUND_INTENSITY = 255.0
INTENSITY_FLOOR = 0.5
DEFAULT_DAB_THRESHOLD = 0.095
DEFAULT_MIN_AREA_PX = 12

HEMATOXYLIN = (0.650, 0.704, 0.286)
DAB = (0.268, 0.570, 0.776)

DAB_ROW = 1
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

# optical density of each 8-bit intensity; exact same values as rgb_to_od
_OD_LUT = -np.log10(np.maximum(np.arange(256, dtype=np.float64), INTENSITY_FLOOR) / BACKGROUND_INTENSITY)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (3,) or not np.isfinite(v).all():
        raise InvalidStainMatrix(f"stain vector must be 3 finite values, got {v!r}")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise InvalidStainMatrix("stain vector has zero length")
    return v / norm


@dataclass(frozen=True)
class StainMatrix:
    """Three unit-norm stain vectors as rows: hematoxylin, DAB, residual."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.shape != (3, 3) or not np.isfinite(rows).all():
            raise InvalidStainMatrix(f"stain matrix must be 3x3 finite, got shape {rows.shape}")
        norms = np.linalg.norm(rows, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise InvalidStainMatrix(f"stain rows must have unit norm, got norms {norms}")
        if abs(np.linalg.det(rows)) <= 1e-12:
            raise SingularStainMatrix("stain matrix is singular")
        rows = rows.copy()
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_vectors(cls, hematoxylin, dab, residual=None) -> "StainMatrix":
        """Normalize the given vectors; a missing residual is completed with
        the normalized cross product of the other two."""
        h = _unit(hematoxylin)
        d = _unit(dab)
        if residual is None:
            r = np.cross(h, d)
            if np.linalg.norm(r) <= 1e-12:
                raise SingularStainMatrix("hematoxylin and DAB vectors are parallel")
            r = _unit(r)
        else:
            r = _unit(residual)
        return cls(np.stack([h, d, r]))

    @classmethod
    def default(cls) -> "StainMatrix":
        return cls.from_vectors(HEMATOXYLIN, DAB)

    @classmethod
    def from_dict(cls, d: dict) -> "StainMatrix":
        try:
            return cls.from_vectors(d["hematoxylin"], d["dab"], d.get("residual"))
        except KeyError as exc:
            raise InvalidStainMatrix(f"stain config missing key {exc}") from None

    def to_dict(self) -> dict:
        return {
            "hematoxylin": self.rows[0].tolist(),
            "dab": self.rows[1].tolist(),
            "residual": self.rows[2].tolist(),
        }

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.rows)


def rgb_to_od(rgb) -> np.ndarray:
    """Optical density of 8-bit intensities, ``-log10(max(I, 0.5) / 255)``.

    Works on a single pixel or on any array whose values lie in [0, 255].
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.size and (np.nanmin(rgb) < 0 or np.nanmax(rgb) > 255 or not np.isfinite(rgb).all()):
        raise InvalidValue("RGB intensities must lie in [0, 255]")
    return -np.log10(np.maximum(rgb, INTENSITY_FLOOR) / BACKGROUND_INTENSITY)


def deconvolve_od(od, m: StainMatrix) -> np.ndarray:
    """Express optical densities in the stain basis.

    Solves ``c @ M = od`` for c; the last axis of ``od`` holds the three
    channels. Negative concentrations are kept.
    """
    if abs(np.linalg.det(m.rows)) <= 1e-12:
        raise SingularStainMatrix("stain matrix is singular")
    od = np.asarray(od, dtype=np.float64)
    if od.shape[-1] != 3:
        raise ShapeMismatch(f"optical density must have 3 channels, got {od.shape}")
    return od @ m.inverse()


@dataclass(frozen=True)
class LymphocyteMask:
    meta: SlideMeta
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask)
        if mask.shape != self.meta.shape:
            raise ShapeMismatch(f"mask {mask.shape} does not match meta {self.meta.shape}")
        object.__setattr__(self, "mask", mask.astype(bool, copy=False))


def dab_concentration(image: np.ndarray, m: StainMatrix, rows_per_chunk: int = 2048) -> np.ndarray:
    """DAB concentration per pixel of an 8-bit RGB image (H x W x 3)."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] < 3:
        raise ShapeMismatch(f"expected an H x W x 3 RGB image, got {image.shape}")
    if image.dtype != np.uint8:
        if image.size and (image.min() < 0 or image.max() > 255):
            raise InvalidValue("RGB intensities must lie in [0, 255]")
        image = image.astype(np.uint8)
    col = m.inverse()[:, DAB_ROW]
    out = np.empty(image.shape[:2], dtype=np.float64)
    # Chunking bounds memory; the result is per-pixel so it is tiling-invariant.
    for y0 in range(0, image.shape[0], rows_per_chunk):
        tile = image[y0:y0 + rows_per_chunk, :, :3]
        od = _OD_LUT[tile]
        out[y0:y0 + rows_per_chunk] = od @ col
    return out


def remove_small_components(mask: np.ndarray, min_area_px: int) -> np.ndarray:
    """Drop 8-connected components with fewer than ``min_area_px`` pixels."""
    mask = np.asarray(mask, dtype=bool)
    if min_area_px <= 1 or not mask.any():
        return mask.copy()
    lab, n = ndimage.label(mask, structure=EIGHT_CONNECTED)
    sizes = np.bincount(lab.ravel(), minlength=n + 1)
    keep = sizes >= min_area_px
    keep[0] = False
    return keep[lab]


def dab_lymphocyte_mask(
    image: np.ndarray,
    meta: SlideMeta,
    m: StainMatrix | None = None,
    threshold: float = DEFAULT_DAB_THRESHOLD,
    min_area_px: int = DEFAULT_MIN_AREA_PX,
) -> LymphocyteMask:
    """Threshold the DAB channel and remove components smaller than
    ``min_area_px``.

    A pixel is positive when its DAB concentration is strictly above
    ``threshold``. ``threshold`` may be +/-inf; NaN is rejected.
    """
    m = StainMatrix.default() if m is None else m
    image = np.asarray(image)
    if image.shape[:2] != meta.shape:
        raise ShapeMismatch(f"image {image.shape[:2]} does not match meta {meta.shape}")
    if math.isnan(threshold):
        raise InvalidValue("threshold must not be NaN")
    if min_area_px < 0:
        raise InvalidValue("min_area_px must be non-negative")
    positive = dab_concentration(image, m) > threshold
    return LymphocyteMask(meta, remove_small_components(positive, int(min_area_px)))


def render_ihc(mask: np.ndarray, m: StainMatrix | None = None,
               positive_dab: float = 0.5, counterstain: float = 0.1) -> np.ndarray:
    """Paint a binary mask as an 8-bit H-DAB image: positive pixels carry
    ``positive_dab`` DAB plus the hematoxylin counterstain, others only the
    counterstain. Used to build synthetic IHC inputs."""
    m = StainMatrix.default() if m is None else m
    mask = np.asarray(mask, dtype=bool)
    bg_od = counterstain * m.rows[0]
    fg_od = bg_od + positive_dab * m.rows[DAB_ROW]
    bg = np.clip(np.rint(BACKGROUND_INTENSITY * 10.0 ** (-bg_od)), 0, 255).astype(np.uint8)
    fg = np.clip(np.rint(BACKGROUND_INTENSITY * 10.0 ** (-fg_od)), 0, 255).astype(np.uint8)
    out = np.empty(mask.shape + (3,), dtype=np.uint8)
    out[...] = bg
    out[mask] = fg
    return out
