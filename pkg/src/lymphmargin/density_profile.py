"""Lymphocyte density curves binned by signed distance to the margin."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .distance_field import SignedDistanceMap, check_labels, column_distances
from .errors import DegenerateLabels, InsufficientSupport, InvalidFile, InvalidValue, ShapeMismatch
from .slide_model import RegionLabel, TissueLabelMask
from .stain import LymphocyteMask

DEFAULT_BIN_WIDTH_UM = 10.0
WINDOW_HALF_UM = 2000.0
WINDOW_BINS = 400
CSV_HEADER = ("bin_start_um", "bin_end_um", "density", "tissue_px", "lymph_px")


@dataclass(frozen=True)
class InfiltrationCurve:
    """Per-bin lymphocyte pixel fraction.

    Bin ``i`` covers ``[bin_edges_um[i], bin_edges_um[i+1])``. ``tissue_px``
    is the denominator; a bin with ``tissue_px == 0`` is empty and reports
    density 0.
    """

    bin_width_um: float
    bin_edges_um: np.ndarray
    density: np.ndarray
    tissue_px: np.ndarray
    lymph_px: np.ndarray

    @classmethod
    def from_counts(cls, bin_width_um: float, kmin: int, tissue_px, lymph_px) -> "InfiltrationCurve":
        tissue_px = np.asarray(tissue_px, dtype=np.int64)
        lymph_px = np.asarray(lymph_px, dtype=np.int64)
        edges = (kmin + np.arange(len(tissue_px) + 1)) * float(bin_width_um)
        density = np.zeros(len(tissue_px))
        nz = tissue_px > 0
        density[nz] = lymph_px[nz] / tissue_px[nz]
        return cls(float(bin_width_um), edges, density, tissue_px, lymph_px)

    def __len__(self):
        return len(self.density)

    @property
    def first_bin_index(self) -> int:
        return int(round(self.bin_edges_um[0] / self.bin_width_um))

    def nonempty(self) -> np.ndarray:
        return self.tissue_px > 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i in range(len(self)):
            writer.writerow([
                repr(float(self.bin_edges_um[i])),
                repr(float(self.bin_edges_um[i + 1])),
                repr(float(self.density[i])),
                int(self.tissue_px[i]),
                int(self.lymph_px[i]),
            ])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "InfiltrationCurve":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(h.strip() for h in rows[0]) != CSV_HEADER:
            raise InvalidFile(f"curve CSV must start with header {','.join(CSV_HEADER)}")
        body = [r for r in rows[1:] if r]
        if not body:
            raise InvalidFile("curve CSV has no bins")
        try:
            starts = np.array([float(r[0]) for r in body])
            ends = np.array([float(r[1]) for r in body])
            tissue = np.array([int(r[3]) for r in body], dtype=np.int64)
            lymph = np.array([int(r[4]) for r in body], dtype=np.int64)
            density = np.array([float(r[2]) for r in body])
        except (ValueError, IndexError) as exc:
            raise InvalidFile(f"malformed curve CSV row: {exc}") from None
        if not np.array_equal(starts[1:], ends[:-1]):
            raise InvalidFile("curve CSV bins are not contiguous")
        edges = np.append(starts, ends[-1])
        return cls._checked(float(ends[0] - starts[0]), edges, density, tissue, lymph)

    def to_dict(self) -> dict:
        return {
            "bin_width_um": self.bin_width_um,
            "bin_edges_um": [float(e) for e in self.bin_edges_um],
            "density": [float(d) for d in self.density],
            "tissue_px": [int(t) for t in self.tissue_px],
            "lymph_px": [int(n) for n in self.lymph_px],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InfiltrationCurve":
        try:
            return cls._checked(
                float(d["bin_width_um"]),
                np.asarray(d["bin_edges_um"], dtype=np.float64),
                np.asarray(d["density"], dtype=np.float64),
                np.asarray(d["tissue_px"], dtype=np.int64),
                np.asarray(d["lymph_px"], dtype=np.int64),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidFile):
                raise
            raise InvalidFile(f"malformed curve JSON: {exc}") from None

    @classmethod
    def _checked(cls, width, edges, density, tissue, lymph) -> "InfiltrationCurve":
        n = len(density)
        if not (len(edges) == n + 1 and len(tissue) == n and len(lymph) == n):
            raise InvalidFile("curve arrays have inconsistent lengths")
        if width <= 0 or not np.all(np.diff(edges) > 0):
            raise InvalidFile("curve bin edges must be strictly increasing")
        if np.any(lymph < 0) or np.any(lymph > tissue):
            raise InvalidFile("curve counts violate 0 <= lymph_px <= tissue_px")
        return cls(width, edges, density, tissue, lymph)


@dataclass(frozen=True)
class FixedWindowSeries:
    """Exactly 400 densities for the 10 um bins spanning [-2000, +2000) um;
    index 0 is the deepest neoplastic bin."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (WINDOW_BINS,):
            raise ShapeMismatch(f"window series must have {WINDOW_BINS} values, got {values.shape}")
        object.__setattr__(self, "values", values)

    @staticmethod
    def bin_starts() -> np.ndarray:
        return -WINDOW_HALF_UM + DEFAULT_BIN_WIDTH_UM * np.arange(WINDOW_BINS)

    def to_csv(self) -> str:
        lines = ["bin_start_um,bin_end_um,density"]
        for start, v in zip(self.bin_starts(), self.values):
            lines.append(f"{float(start)!r},{float(start + DEFAULT_BIN_WIDTH_UM)!r},{float(v)!r}")
        return "\n".join(lines) + "\n"


def _check_bin_width(bin_width_um: float) -> float:
    bw = float(bin_width_um)
    if not math.isfinite(bw) or bw <= 0:
        raise InvalidValue(f"bin width must be positive, got {bin_width_um!r}")
    return bw


def infiltration_curve(
    dist: SignedDistanceMap, lymph: LymphocyteMask, bin_width_um: float = DEFAULT_BIN_WIDTH_UM
) -> InfiltrationCurve:
    """Bin every defined-distance pixel by ``floor(d / bin_width_um)`` and
    count lymphocyte pixels among them."""
    bw = _check_bin_width(bin_width_um)
    if dist.dist.shape != lymph.mask.shape:
        raise ShapeMismatch(f"distance map {dist.dist.shape} and mask {lymph.mask.shape} differ")
    defined = ~np.isnan(dist.dist)
    if not defined.any():
        raise DegenerateLabels("distance map has no defined pixels")
    k = np.floor(dist.dist[defined] / bw).astype(np.int64)
    kmin = int(k.min())
    k -= kmin
    n = int(k.max()) + 1
    tissue = np.bincount(k, minlength=n)
    hits = np.bincount(k[lymph.mask[defined]], minlength=n)
    return InfiltrationCurve.from_counts(bw, kmin, tissue, hits)


def _trim(bw: float, kmin: int, counts: np.ndarray) -> InfiltrationCurve:
    used = np.flatnonzero(counts[0])
    lo, hi = int(used[0]), int(used[-1]) + 1
    return InfiltrationCurve.from_counts(bw, kmin + lo, counts[0, lo:hi], counts[1, lo:hi])


def profile_labels(
    labels: TissueLabelMask, lymph: LymphocyteMask, bin_width_um: float = DEFAULT_BIN_WIDTH_UM
) -> InfiltrationCurve:
    """Same result as ``infiltration_curve(signed_edt(labels), lymph)``
    without allocating the floating-point distance map.

    Peak memory is two integer column-distance grids on top of the inputs,
    which is what makes whole-slide regions tractable.
    """
    bw = _check_bin_width(bin_width_um)
    if labels.labels.shape != lymph.mask.shape:
        raise ShapeMismatch(f"label grid {labels.labels.shape} and mask {lymph.mask.shape} differ")
    check_labels(labels)
    lab = labels.labels
    mpp = labels.meta.microns_per_pixel
    g_pos, inf = column_distances(lab == RegionLabel.NEOPLASTIC)
    g_neg, _ = column_distances(lab == RegionLabel.NORMAL)
    h, w = lab.shape
    reach = math.sqrt(float((h - 1) ** 2 + (w - 1) ** 2)) * mpp
    kmin = int(math.floor(-reach / bw)) - 1
    kmax = int(math.floor(reach / bw)) + 1
    counts = kernels.signed_bin_histogram(
        lab, np.ascontiguousarray(lymph.mask), g_pos, g_neg, inf, mpp, bw,
        kmin, kmax - kmin + 1, int(RegionLabel.NORMAL), int(RegionLabel.NEOPLASTIC),
    )
    return _trim(bw, kmin, counts)


def to_fixed_window(curve: InfiltrationCurve) -> FixedWindowSeries:
    """Place the curve on the fixed [-2000, +2000) um grid of 400 bins.

    Bins outside the window are dropped. Missing bins at either end are
    filled by mirror reflection about the outermost available bin without
    repeating it (``[a, b, c]`` padded left by 2 gives ``[c, b, a, b, c]``).
    """
    if not math.isclose(curve.bin_width_um, DEFAULT_BIN_WIDTH_UM, rel_tol=1e-12):
        raise InvalidValue(f"window needs {DEFAULT_BIN_WIDTH_UM} um bins, got {curve.bin_width_um}")
    if int(np.count_nonzero(curve.tissue_px)) < 2:
        raise InsufficientSupport("curve needs at least two non-empty bins")
    half = WINDOW_BINS // 2
    k0 = curve.first_bin_index
    lo = max(k0, -half)
    hi = min(k0 + len(curve), half)
    if hi <= lo:
        raise InsufficientSupport("curve does not overlap the [-2000, 2000) um window")
    core = curve.density[lo - k0:hi - k0]
    pad_left = lo + half
    pad_right = half - hi
    n = len(core)
    if pad_left >= n or pad_right >= n:
        raise InsufficientSupport(
            f"window needs {max(pad_left, pad_right)} reflected bins but only {n} are available"
        )
    return FixedWindowSeries(np.pad(core, (pad_left, pad_right), mode="reflect"))
