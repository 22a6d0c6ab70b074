"""Vectorized numpy twins of the numba kernels in ``_nb``.

Loops run along one axis in Python while the other axis is vectorized, so
these stay usable on moderate grids without a compiler.
"""
import numpy as np

ROW_BLOCK = 512


def column_distance(target, out, inf):
    h, _ = target.shape
    inf = np.int64(inf)
    prev = np.where(target[0], 0, inf).astype(np.int64)
    out[0] = prev
    rows = np.empty(target.shape, dtype=np.int64)
    rows[0] = prev
    for y in range(1, h):
        step = np.where(prev == inf, inf, prev + 1)
        prev = np.where(target[y], 0, step)
        rows[y] = prev
    for y in range(h - 2, -1, -1):
        below = rows[y + 1]
        cand = np.where(below == inf, inf, below + 1)
        np.minimum(rows[y], cand, out=rows[y])
    out[...] = rows


def _envelope_block(g, inf):
    """Row-wise lower envelope for a block of rows, vectorized across rows."""
    g = g.astype(np.int64)
    h, w = g.shape
    inf = np.int64(inf)
    v = np.zeros((h, w + 1), dtype=np.int64)
    zn = np.zeros((h, w + 1), dtype=np.int64)
    zd = np.ones((h, w + 1), dtype=np.int64)
    k = np.full(h, -1, dtype=np.int64)
    g2 = g * g
    for q in range(w):
        rows = np.flatnonzero(g[:, q] != inf)
        if rows.size == 0:
            continue
        fq = g2[rows, q] + q * q
        fresh = k[rows] < 0
        if fresh.any():
            r0 = rows[fresh]
            k[r0] = 0
            v[r0, 0] = q
            rows = rows[~fresh]
            fq = fq[~fresh]
        if rows.size == 0:
            continue
        cand = np.arange(rows.size)
        while cand.size:
            r = rows[cand]
            kr = k[r]
            p = v[r, kr]
            num = fq[cand] - (g2[r, p] + p * p)
            den = 2 * (q - p)
            pop = (kr > 0) & (num * zd[r, kr] <= zn[r, kr] * den)
            k[r[pop]] -= 1
            cand = cand[pop]
        kr = k[rows]
        p = v[rows, kr]
        num = fq - (g2[rows, p] + p * p)
        den = 2 * (q - p)
        k[rows] = kr + 1
        v[rows, kr + 1] = q
        zn[rows, kr + 1] = num
        zd[rows, kr + 1] = den
    out = np.full((h, w), -1, dtype=np.int64)
    live = np.flatnonzero(k >= 0)
    if live.size == 0:
        return out
    j = np.zeros(live.size, dtype=np.int64)
    kl = k[live]
    for q in range(w):
        while True:
            nxt = np.minimum(j + 1, w)
            adv = (j < kl) & (zn[live, nxt] < q * zd[live, nxt])
            if not adv.any():
                break
            j[adv] += 1
        p = v[live, j]
        out[live, q] = (q - p) * (q - p) + g2[live, p]
    return out


def row_envelope_sq(g, inf):
    h, w = g.shape
    out = np.empty((h, w), dtype=np.int64)
    for y0 in range(0, h, ROW_BLOCK):
        out[y0:y0 + ROW_BLOCK] = _envelope_block(g[y0:y0 + ROW_BLOCK], inf)
    return out


def signed_bin_histogram(labels, lymph, g_pos, g_neg, inf, mpp, bin_width,
                         kmin, nbins, pos_code, neg_code):
    total = np.zeros((2, nbins), dtype=np.int64)
    h = labels.shape[0]
    for y0 in range(0, h, ROW_BLOCK):
        lab = labels[y0:y0 + ROW_BLOCK]
        pos = lab == pos_code
        neg = lab == neg_code
        if not (pos.any() or neg.any()):
            continue
        d = np.zeros(lab.shape, dtype=np.float64)
        if pos.any():
            sq = _envelope_block(g_pos[y0:y0 + ROW_BLOCK], inf)
            d[pos] = np.sqrt(sq[pos].astype(np.float64)) * mpp
        if neg.any():
            sq = _envelope_block(g_neg[y0:y0 + ROW_BLOCK], inf)
            d[neg] = -(np.sqrt(sq[neg].astype(np.float64)) * mpp)
        tissue = pos | neg
        k = np.floor(d[tissue] / bin_width).astype(np.int64) - kmin
        total[0] += np.bincount(k, minlength=nbins)
        hit = lymph[y0:y0 + ROW_BLOCK][tissue].astype(bool)
        total[1] += np.bincount(k[hit], minlength=nbins)
    return total


def cdtw_batch(a, b, radius):
    npairs, n = a.shape
    m = b.shape[1]
    prev = np.full((npairs, m + 1), np.inf)
    prev[:, 0] = 0.0
    for i in range(1, n + 1):
        cur = np.full((npairs, m + 1), np.inf)
        for j in range(max(1, i - radius), min(m, i + radius) + 1):
            best = np.minimum(np.minimum(prev[:, j], cur[:, j - 1]), prev[:, j - 1])
            cur[:, j] = np.abs(a[:, i - 1] - b[:, j - 1]) + best
        prev = cur
    return prev[:, m].copy()


def polygon_fill(xs, ys, out):
    h, w = out.shape
    y0 = max(0, int(np.floor(ys.min() - 0.5)))
    y1 = min(h, int(np.ceil(ys.max() + 0.5)))
    x0 = max(0, int(np.floor(xs.min() - 0.5)))
    x1 = min(w, int(np.ceil(xs.max() + 0.5)))
    if y1 <= y0 or x1 <= x0:
        return
    yc = (np.arange(y0, y1) + 0.5)[:, None]
    xc = (np.arange(x0, x1) + 0.5)[None, :]
    inside = np.zeros((y1 - y0, x1 - x0), dtype=bool)
    n = xs.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n):
            j = i - 1 if i > 0 else n - 1
            xi, yi, xj, yj = xs[i], ys[i], xs[j], ys[j]
            straddle = (yi > yc) != (yj > yc)
            if not straddle.any():
                continue
            cross = (xj - xi) * (yc - yi) / (yj - yi) + xi
            inside ^= straddle & (xc < cross)
    out[y0:y1, x0:x1] |= inside


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def counter_uniform(key0, key1, n, stream):
    c = np.arange(n, dtype=np.uint64) * np.uint64(2) + np.uint64(stream)
    z = _mix64(c * _GOLDEN + key0)
    z = _mix64(z ^ key1)
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
