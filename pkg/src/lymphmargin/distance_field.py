"""Exact signed Euclidean distance to the tumor margin."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateLabels
from .slide_model import RegionLabel, SlideMeta, TissueLabelMask


@dataclass(frozen=True)
class SignedDistanceMap:
    """Signed distance in microns; NaN marks Background and Irrelevant pixels.

    Normal pixels are positive (distance to the nearest Neoplastic pixel
    center), Neoplastic pixels negative (distance to the nearest Normal one).
    """

    meta: SlideMeta
    dist: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.dist)


def column_grid_dtype(height: int):
    """Smallest integer type that holds a column distance plus the sentinel."""
    return np.uint16 if height < np.iinfo(np.uint16).max else np.int32


def column_distances(target: np.ndarray) -> tuple[np.ndarray, int]:
    """Vertical distance (in rows) from every pixel to the nearest ``True``
    pixel of its column; returns the grid and its no-target sentinel."""
    dtype = column_grid_dtype(target.shape[0])
    inf = int(np.iinfo(dtype).max)
    out = np.empty(target.shape, dtype=dtype)
    kernels.column_distance(np.ascontiguousarray(target, dtype=bool), out, inf)
    return out, inf


def squared_edt(target: np.ndarray) -> np.ndarray:
    """Exact squared pixel distance to the nearest ``True`` pixel (-1 if none).

    Separable lower-envelope transform: a column scan followed by a
    parabola envelope along each row, all in integer arithmetic.
    """
    g, inf = column_distances(target)
    return kernels.row_envelope_sq(g, inf)


def check_labels(labels: TissueLabelMask) -> None:
    lab = labels.labels
    if not (lab == RegionLabel.NORMAL).any():
        raise DegenerateLabels("label grid has no Normal pixels")
    if not (lab == RegionLabel.NEOPLASTIC).any():
        raise DegenerateLabels("label grid has no Neoplastic pixels")


def signed_edt(labels: TissueLabelMask) -> SignedDistanceMap:
    check_labels(labels)
    lab = labels.labels
    mpp = labels.meta.microns_per_pixel
    normal = lab == RegionLabel.NORMAL
    neoplastic = lab == RegionLabel.NEOPLASTIC

    dist = np.full(lab.shape, np.nan)
    to_neo = squared_edt(neoplastic)
    dist[normal] = np.sqrt(to_neo[normal].astype(np.float64)) * mpp
    del to_neo
    to_normal = squared_edt(normal)
    dist[neoplastic] = -(np.sqrt(to_normal[neoplastic].astype(np.float64)) * mpp)
    return SignedDistanceMap(labels.meta, dist)
