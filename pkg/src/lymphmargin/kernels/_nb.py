"""numba implementations of the hot loops.

Every function here has a twin in ``_np`` with the same signature and
bit-identical output. Parallel loops only write disjoint slices or
per-chunk integer histograms, so thread count never changes a result.
"""
import numpy as np
from numba import config, njit, prange

# Skip the TBB probe: an outdated system TBB only produces a warning.
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

COL_CHUNK = 256
ROW_CHUNK = 256


@njit(cache=True, parallel=True)
def column_distance(target, out, inf):
    h, w = target.shape
    nchunks = (w + COL_CHUNK - 1) // COL_CHUNK
    for c in prange(nchunks):
        x0 = c * COL_CHUNK
        x1 = min(w, x0 + COL_CHUNK)
        for x in range(x0, x1):
            out[0, x] = 0 if target[0, x] else inf
        for y in range(1, h):
            for x in range(x0, x1):
                if target[y, x]:
                    out[y, x] = 0
                else:
                    p = out[y - 1, x]
                    out[y, x] = inf if p == inf else p + 1
        for y in range(h - 2, -1, -1):
            for x in range(x0, x1):
                p = out[y + 1, x]
                if p != inf and p + 1 < out[y, x]:
                    out[y, x] = p + 1


@njit(cache=True)
def _envelope_row(g, inf, v, zn, zd, out_row):
    # Lower envelope of parabolas f(q) = g[q]^2 + (x - q)^2. Intersections are
    # kept as exact integer fractions zn/zd (zd > 0) so comparisons never round.
    n = g.shape[0]
    k = -1
    for q in range(n):
        gq = np.int64(g[q])
        if gq == inf:
            continue
        fq = gq * gq + q * q
        if k < 0:
            k = 0
            v[0] = q
            continue
        num = np.int64(0)
        den = np.int64(1)
        while True:
            p = v[k]
            gp = np.int64(g[p])
            num = fq - (gp * gp + p * p)
            den = 2 * (q - p)
            if k > 0 and num * zd[k] <= zn[k] * den:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        zn[k] = num
        zd[k] = den
    if k < 0:
        for q in range(n):
            out_row[q] = -1
        return
    j = 0
    for q in range(n):
        while j < k and zn[j + 1] < q * zd[j + 1]:
            j += 1
        p = v[j]
        gp = np.int64(g[p])
        out_row[q] = (q - p) * (q - p) + gp * gp


@njit(cache=True, parallel=True)
def row_envelope_sq(g, inf):
    h, w = g.shape
    out = np.empty((h, w), dtype=np.int64)
    nchunks = (h + ROW_CHUNK - 1) // ROW_CHUNK
    for c in prange(nchunks):
        v = np.empty(w + 1, dtype=np.int64)
        zn = np.empty(w + 1, dtype=np.int64)
        zd = np.empty(w + 1, dtype=np.int64)
        for y in range(c * ROW_CHUNK, min(h, (c + 1) * ROW_CHUNK)):
            _envelope_row(g[y], inf, v, zn, zd, out[y])
    return out


@njit(cache=True, parallel=True)
def signed_bin_histogram(labels, lymph, g_pos, g_neg, inf, mpp, bin_width,
                         kmin, nbins, pos_code, neg_code):
    """Histogram of signed-distance bins without materializing the map.

    Row pass of the EDT fused with binning: only the two column-distance
    grids are held in memory. Returns int64 array (2, nbins) with tissue
    counts in row 0 and lymphocyte counts in row 1.
    """
    h, w = labels.shape
    nchunks = (h + ROW_CHUNK - 1) // ROW_CHUNK
    hist = np.zeros((nchunks, 2, nbins), dtype=np.int64)
    for c in prange(nchunks):
        v = np.empty(w + 1, dtype=np.int64)
        zn = np.empty(w + 1, dtype=np.int64)
        zd = np.empty(w + 1, dtype=np.int64)
        sq_pos = np.empty(w, dtype=np.int64)
        sq_neg = np.empty(w, dtype=np.int64)
        for y in range(c * ROW_CHUNK, min(h, (c + 1) * ROW_CHUNK)):
            has_pos = False
            has_neg = False
            for x in range(w):
                lab = labels[y, x]
                if lab == pos_code:
                    has_pos = True
                elif lab == neg_code:
                    has_neg = True
            if has_pos:
                _envelope_row(g_pos[y], inf, v, zn, zd, sq_pos)
            if has_neg:
                _envelope_row(g_neg[y], inf, v, zn, zd, sq_neg)
            if not (has_pos or has_neg):
                continue
            for x in range(w):
                lab = labels[y, x]
                if lab == pos_code:
                    d = np.sqrt(np.float64(sq_pos[x])) * mpp
                elif lab == neg_code:
                    d = -(np.sqrt(np.float64(sq_neg[x])) * mpp)
                else:
                    continue
                k = np.int64(np.floor(d / bin_width)) - kmin
                hist[c, 0, k] += 1
                if lymph[y, x]:
                    hist[c, 1, k] += 1
    total = np.zeros((2, nbins), dtype=np.int64)
    for c in range(nchunks):
        for r in range(2):
            for k in range(nbins):
                total[r, k] += hist[c, r, k]
    return total


@njit(cache=True)
def _cdtw_pair(a, b, radius, prev, cur):
    n = a.shape[0]
    m = b.shape[0]
    for j in range(m + 1):
        prev[j] = np.inf
    prev[0] = 0.0
    for i in range(1, n + 1):
        for j in range(m + 1):
            cur[j] = np.inf
        lo = max(1, i - radius)
        hi = min(m, i + radius)
        for j in range(lo, hi + 1):
            best = min(prev[j], cur[j - 1], prev[j - 1])
            cur[j] = abs(a[i - 1] - b[j - 1]) + best
        for j in range(m + 1):
            prev[j] = cur[j]
    return prev[m]


@njit(cache=True, parallel=True)
def cdtw_batch(a, b, radius):
    npairs = a.shape[0]
    m = b.shape[1]
    out = np.empty(npairs, dtype=np.float64)
    for p in prange(npairs):
        prev = np.empty(m + 1, dtype=np.float64)
        cur = np.empty(m + 1, dtype=np.float64)
        out[p] = _cdtw_pair(a[p], b[p], radius, prev, cur)
    return out


@njit(cache=True)
def polygon_fill(xs, ys, out):
    # Even-odd rule on pixel centers; crossing test written exactly as the
    # classic per-point crossing-number test so both agree bit for bit.
    h, w = out.shape
    n = xs.shape[0]
    cross = np.empty(n, dtype=np.float64)
    y0 = max(0, int(np.floor(ys.min() - 0.5)))
    y1 = min(h, int(np.ceil(ys.max() + 0.5)))
    for y in range(y0, y1):
        yc = y + 0.5
        cnt = 0
        for i in range(n):
            j = i - 1 if i > 0 else n - 1
            xi = xs[i]
            yi = ys[i]
            xj = xs[j]
            yj = ys[j]
            if (yi > yc) != (yj > yc):
                cross[cnt] = (xj - xi) * (yc - yi) / (yj - yi) + xi
                cnt += 1
        if cnt == 0:
            continue
        c = np.sort(cross[:cnt])
        for t in range(0, cnt - 1, 2):
            lo = c[t]
            hi = c[t + 1]
            x = max(0, int(np.floor(lo - 0.5)))
            while x < w and x + 0.5 < lo:
                x += 1
            while x < w and x + 0.5 < hi:
                out[y, x] = True
                x += 1


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO = np.uint64(2)


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, parallel=True)
def counter_uniform(key0, key1, n, stream):
    out = np.empty(n, dtype=np.float64)
    s = np.uint64(stream)
    for i in prange(n):
        c = np.uint64(i) * _TWO + s
        z = _mix64(c * _GOLDEN + key0)
        z = _mix64(z ^ key1)
        out[i] = np.float64(z >> _S11) * (1.0 / 9007199254740992.0)
    return out
