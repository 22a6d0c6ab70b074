"""Synthetic slides with a known infiltration profile, and the exact
expected curve for them.

Lymphocyte masks are per-pixel Bernoulli draws whose probability is read
off a piecewise-constant profile at each pixel's signed margin distance.
Draws come from a counter-based generator keyed by (seed, pixel index,
realization), so output never depends on evaluation order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .density_profile import DEFAULT_BIN_WIDTH_UM, WINDOW_BINS, WINDOW_HALF_UM, FixedWindowSeries
from .distance_field import signed_edt
from .errors import GeometryTooSmall, InvalidProfile, InvalidValue
from .slide_model import RegionLabel, SlideMeta, TissueLabelMask
from .stain import LymphocyteMask

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ProfileSpec:
    """Piecewise-constant density over [-2000, +2000] um.

    Each piece is ``(d_start, d_end, density)`` on ``[d_start, d_end)``;
    distances beyond the covered range take the nearest end piece.
    """

    pieces: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        pieces = tuple((float(a), float(b), float(p)) for a, b, p in self.pieces)
        if not pieces:
            raise InvalidProfile("profile needs at least one piece")
        for a, b, p in pieces:
            if not (a < b):
                raise InvalidProfile(f"piece [{a}, {b}) is empty or reversed")
            if not 0.0 <= p <= 1.0:
                raise InvalidProfile(f"density {p} outside [0, 1]")
        for (_, b, _), (a, _, _) in zip(pieces, pieces[1:]):
            if a != b:
                raise InvalidProfile(f"pieces must be contiguous, gap or overlap at {b} / {a}")
        if pieces[0][0] > -WINDOW_HALF_UM or pieces[-1][1] < WINDOW_HALF_UM:
            raise InvalidProfile("pieces must cover [-2000, 2000] um")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def from_dict(cls, d: dict) -> "ProfileSpec":
        try:
            return cls(tuple(tuple(p) for p in d["pieces"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidProfile):
                raise
            raise InvalidProfile(f"malformed profile spec: {exc}") from None

    def to_dict(self) -> dict:
        return {"pieces": [list(p) for p in self.pieces]}

    @classmethod
    def constant(cls, density: float) -> "ProfileSpec":
        return cls(((-WINDOW_HALF_UM, WINDOW_HALF_UM, density),))

    @classmethod
    def peak(cls, neoplastic: float, peak: float, normal: float,
             center_um: float = 0.0, half_width_um: float = 100.0) -> "ProfileSpec":
        """Neoplastic level, a peak band around ``center_um``, normal level."""
        lo, hi = center_um - half_width_um, center_um + half_width_um
        pieces = []
        if lo > -WINDOW_HALF_UM:
            pieces.append((-WINDOW_HALF_UM, lo, neoplastic))
        pieces.append((max(lo, -WINDOW_HALF_UM), min(hi, WINDOW_HALF_UM), peak))
        if hi < WINDOW_HALF_UM:
            pieces.append((hi, WINDOW_HALF_UM, normal))
        return cls(tuple(pieces))

    def density_at(self, d) -> np.ndarray:
        starts = np.array([a for a, _, _ in self.pieces])
        dens = np.array([p for _, _, p in self.pieces])
        idx = np.clip(np.searchsorted(starts, d, side="right") - 1, 0, len(dens) - 1)
        return dens[idx]


@dataclass(frozen=True)
class StraightMargin:
    """Vertical margin through the grid center; neoplastic on the left."""

    def margin_x(self, meta: SlideMeta) -> np.ndarray:
        return np.full(meta.height_px, meta.width_px / 2.0)


@dataclass(frozen=True)
class SineMargin:
    amplitude_um: float
    period_um: float

    def __post_init__(self):
        if not (self.period_um > 0 and self.amplitude_um >= 0):
            raise GeometryTooSmall("sine margin needs amplitude >= 0 and period > 0")

    def margin_x(self, meta: SlideMeta) -> np.ndarray:
        mpp = meta.microns_per_pixel
        y_um = (np.arange(meta.height_px) + 0.5) * mpp
        return meta.width_px / 2.0 + (self.amplitude_um / mpp) * np.sin(2 * np.pi * y_um / self.period_um)


@dataclass(frozen=True)
class SyntheticCase:
    labels: TissueLabelMask
    lymph_a: LymphocyteMask
    lymph_b: LymphocyteMask
    seed: int
    spec: ProfileSpec


def _splitmix(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stream_keys(seed: int) -> tuple[np.uint64, np.uint64]:
    k0 = _splitmix(seed & _MASK64)
    k1 = _splitmix(k0 ^ 0xD1B54A32D192ED03)
    return np.uint64(k0), np.uint64(k1)


def pixel_uniforms(seed: int, n: int, realization: int) -> np.ndarray:
    """Uniform [0, 1) draw per flat pixel index for realization 0 or 1."""
    if realization not in (0, 1):
        raise ValueError("realization must be 0 or 1")
    k0, k1 = stream_keys(seed)
    return kernels.counter_uniform(k0, k1, int(n), int(realization))


def synth_labels(geometry, meta: SlideMeta) -> TissueLabelMask:
    edge = geometry.margin_x(meta)
    xc = np.arange(meta.width_px) + 0.5
    neo = xc[None, :] < edge[:, None]
    labels = np.where(neo, RegionLabel.NEOPLASTIC, RegionLabel.NORMAL).astype(np.uint8)
    return TissueLabelMask(meta, labels)


def _check_fits(geometry, meta: SlideMeta) -> None:
    edge = geometry.margin_x(meta)
    mpp = meta.microns_per_pixel
    neo_reach = float(edge.min()) * mpp
    normal_reach = (meta.width_px - float(edge.max())) * mpp
    if min(neo_reach, normal_reach) < WINDOW_HALF_UM:
        raise GeometryTooSmall(
            f"margin leaves {neo_reach:.1f} um neoplastic / {normal_reach:.1f} um normal; "
            f"need {WINDOW_HALF_UM:.0f} um on each side"
        )


def generate_case(spec: ProfileSpec, geometry, meta: SlideMeta, seed: int) -> SyntheticCase:
    _check_fits(geometry, meta)
    labels = synth_labels(geometry, meta)
    dist = signed_edt(labels).dist
    tissue = ~np.isnan(dist)
    prob = np.zeros(dist.shape)
    prob[tissue] = spec.density_at(dist[tissue])
    n = dist.size
    masks = []
    for realization in (0, 1):
        u = pixel_uniforms(seed, n, realization).reshape(dist.shape)
        masks.append(LymphocyteMask(meta, tissue & (u < prob)))
    return SyntheticCase(labels, masks[0], masks[1], int(seed) & _MASK64, spec)


def oracle_curve(spec: ProfileSpec) -> FixedWindowSeries:
    """Expected density per 10 um window bin: the length-weighted mean of
    the profile over the bin, i.e. the tissue-weighted mean when tissue is
    uniform in distance as for a straight margin."""
    starts = FixedWindowSeries.bin_starts()
    values = np.zeros(WINDOW_BINS)
    bw = DEFAULT_BIN_WIDTH_UM
    for i, s in enumerate(starts):
        e = s + bw
        acc = 0.0
        for a, b, p in spec.pieces:
            overlap = min(b, e) - max(a, s)
            if overlap > 0:
                acc += overlap * p
        values[i] = acc / bw
    return FixedWindowSeries(values)


def binomial_envelope(p: np.ndarray, n: np.ndarray, z: float = 4.0) -> np.ndarray:
    """``z * sqrt(p (1 - p) / n)`` per bin."""
    p = np.asarray(p, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return z * np.sqrt(p * (1 - p) / np.maximum(n, 1))


def geometry_from_name(name: str, amplitude_um: float = 0.0, period_um: float = 1000.0):
    name = name.strip().lower()
    if name in ("straight", "straightmargin"):
        return StraightMargin()
    if name in ("sine", "sinemargin"):
        return SineMargin(amplitude_um, period_um)
    raise InvalidValue(f"unknown geometry {name!r}; expected straight or sine")


def window_fits(meta: SlideMeta, geometry) -> bool:
    try:
        _check_fits(geometry, meta)
    except GeometryTooSmall:
        return False
    return True


__all__ = [
    "ProfileSpec",
    "StraightMargin",
    "SineMargin",
    "SyntheticCase",
    "generate_case",
    "oracle_curve",
    "pixel_uniforms",
    "synth_labels",
    "binomial_envelope",
    "geometry_from_name",
]
