"""Curve similarity by band-constrained DTW and top-k retrieval scoring."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .density_profile import DEFAULT_BIN_WIDTH_UM, FixedWindowSeries
from .errors import BandInfeasible, EmptySeries, InvalidPairing, InvalidValue

SHIFT_TOLERANCE_UM = 10.0
DEFAULT_BAND_RADIUS = int(round(SHIFT_TOLERANCE_UM / DEFAULT_BIN_WIDTH_UM))
TOP_K = (1, 2, 3)


def znorm(series) -> np.ndarray:
    """Z-score with the population standard deviation; constant input maps
    to all zeros."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise EmptySeries("cannot normalize an empty series")
    if not np.isfinite(x).all():
        raise InvalidValue("series contains non-finite values")
    if np.ptp(x) == 0:
        return np.zeros_like(x)
    return (x - x.mean()) / x.std()


def _check_pair(a: np.ndarray, b: np.ndarray, radius: int) -> None:
    if a.size == 0 or b.size == 0:
        raise EmptySeries("cDTW needs non-empty series")
    if radius < 0:
        raise BandInfeasible(f"band radius must be >= 0, got {radius}")
    if abs(a.size - b.size) > radius:
        raise BandInfeasible(f"lengths {a.size} and {b.size} cannot be aligned within radius {radius}")


def cdtw_distance(a, b, band_radius_bins: int = DEFAULT_BAND_RADIUS) -> float:
    """DTW cost under a Sakoe-Chiba band.

    Local cost is ``|a_i - b_j|``, summed along the cheapest warping path
    with ``|i - j| <= band_radius_bins``; no path-length normalization.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    radius = int(band_radius_bins)
    _check_pair(a, b, radius)
    return float(kernels.cdtw_batch(a[None, :], b[None, :], radius)[0])


def cdtw_matrix(queries: np.ndarray, targets: np.ndarray, band_radius_bins: int = DEFAULT_BAND_RADIUS) -> np.ndarray:
    """All pairwise cDTW costs, shape (n_queries, n_targets)."""
    q = np.ascontiguousarray(queries, dtype=np.float64)
    t = np.ascontiguousarray(targets, dtype=np.float64)
    radius = int(band_radius_bins)
    _check_pair(q[0], t[0], radius)
    nq, nt = len(q), len(t)
    a = np.repeat(q, nt, axis=0)
    b = np.tile(t, (nq, 1))
    return kernels.cdtw_batch(a, b, radius).reshape(nq, nt)


@dataclass
class MatchReport:
    queries: list[str]
    ranking: dict[str, list[tuple[str, float]]]
    pairs: dict[str, str]
    topk_hits: dict[int, int] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.queries)

    def rank_of_truth(self, qid: str) -> int:
        """1-based rank of the paired target for ``qid``."""
        truth = self.pairs[qid]
        return 1 + [tid for tid, _ in self.ranking[qid]].index(truth)

    def to_dict(self) -> dict:
        return {
            "ranking": {q: [[t, d] for t, d in self.ranking[q]] for q in self.queries},
            "topk": {str(k): self.topk_hits[k] for k in sorted(self.topk_hits)},
            "n": self.n,
        }

    def table(self) -> str:
        lines = [f"{'query':<24} {'truth':<24} {'rank':>4}  best (distance)"]
        for q in self.queries:
            best, dist = self.ranking[q][0]
            lines.append(f"{q:<24} {self.pairs[q]:<24} {self.rank_of_truth(q):>4}  {best} ({dist:.4f})")
        for k in sorted(self.topk_hits):
            lines.append(f"top-{k}: {self.topk_hits[k]}/{self.n}")
        return "\n".join(lines)


def _values(series) -> np.ndarray:
    if isinstance(series, FixedWindowSeries):
        return series.values
    return np.asarray(series, dtype=np.float64)


def rank_matches(queries, targets, pair_map: dict, band_radius_bins: int = DEFAULT_BAND_RADIUS) -> MatchReport:
    """Rank every target for every query by cDTW on z-normalized series.

    ``queries`` and ``targets`` are sequences of ``(id, series)``. Ranked
    lists are sorted by distance, ties broken by target id.
    """
    queries = list(queries)
    targets = list(targets)
    if not queries or not targets:
        raise EmptySeries("rank_matches needs at least one query and one target")
    target_ids = [str(tid) for tid, _ in targets]
    query_ids = [str(qid) for qid, _ in queries]
    pairs = {str(k): str(v) for k, v in pair_map.items()}
    for qid in query_ids:
        if qid not in pairs:
            raise InvalidPairing(f"query {qid!r} has no paired target")
        if pairs[qid] not in target_ids:
            raise InvalidPairing(f"query {qid!r} is paired with unknown target {pairs[qid]!r}")

    qz = np.stack([znorm(_values(s)) for _, s in queries])
    tz = np.stack([znorm(_values(s)) for _, s in targets])
    dist = cdtw_matrix(qz, tz, band_radius_bins)

    ranking = {}
    hits = {k: 0 for k in TOP_K}
    for i, qid in enumerate(query_ids):
        order = sorted(range(len(target_ids)), key=lambda j: (dist[i, j], target_ids[j]))
        ranking[qid] = [(target_ids[j], float(dist[i, j])) for j in order]
        rank = 1 + [target_ids[j] for j in order].index(pairs[qid])
        for k in TOP_K:
            hits[k] += rank <= k
    return MatchReport(query_ids, ranking, {q: pairs[q] for q in query_ids}, hits)
