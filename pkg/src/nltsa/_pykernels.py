"""Numpy implementations of the compiled kernels, used when the extension is absent."""
import numpy as np

_BLOCK = 1024


def pair_counts(pts, tidx, eps2, theiler, nthreads=1):
    pts = np.ascontiguousarray(pts, dtype=float)
    tidx = np.asarray(tidx, dtype=np.int64)
    eps2 = np.asarray(eps2, dtype=float)
    n = pts.shape[0]
    K = eps2.size
    hist = np.zeros(K + 1, dtype=np.int64)
    eligible = 0
    top = eps2[-1]
    for start in range(0, n, _BLOCK):
        stop = min(n, start + _BLOCK)
        a = pts[start:stop]
        # only j > i: columns from start onwards
        b = pts[start:]
        d2 = np.zeros((stop - start, n - start))
        for c in range(pts.shape[1]):
            diff = a[:, c, None] - b[None, :, c]
            d2 += diff * diff
        ii = np.arange(start, stop)[:, None]
        jj = np.arange(start, n)[None, :]
        mask = (jj > ii) & (np.abs(tidx[start:n][None, :] - tidx[start:stop][:, None]) > theiler)
        eligible += int(mask.sum())
        vals = d2[mask & (d2 < top)]
        # bin k holds distances with eps2[k-1] <= d2 < eps2[k]
        hist[: K] += np.bincount(np.searchsorted(eps2, vals, side="right"), minlength=K + 1)[:K]
    return np.cumsum(hist[:K]), eligible


def nearest_neighbors(pts, tidx, theiler):
    pts = np.ascontiguousarray(pts, dtype=float)
    tidx = np.asarray(tidx, dtype=np.int64)
    n = pts.shape[0]
    idx = np.full(n, -1, dtype=np.int64)
    dist = np.full(n, np.inf)
    for start in range(0, n, _BLOCK):
        stop = min(n, start + _BLOCK)
        d2 = np.zeros((stop - start, n))
        for c in range(pts.shape[1]):
            diff = pts[start:stop, c, None] - pts[None, :, c]
            d2 += diff * diff
        excluded = np.abs(tidx[None, :] - tidx[start:stop, None]) <= theiler
        d2[excluded] = np.inf
        best = np.argmin(d2, axis=1)
        bd = d2[np.arange(stop - start), best]
        ok = np.isfinite(bd)
        idx[start:stop][ok] = best[ok]
        dist[start:stop][ok] = bd[ok]
    return idx, dist


def _run_lengths(lines_bool, T):
    """Histogram of maximal True runs along the last axis of a 2-d bool array."""
    hist = np.zeros(T + 1, dtype=np.int64)
    if lines_bool.size == 0:
        return hist
    x = lines_bool.astype(np.int8)
    pad = np.zeros((x.shape[0], 1), dtype=np.int8)
    d = np.diff(np.concatenate([pad, x, pad], axis=1), axis=1)
    starts = np.nonzero(d == 1)
    ends = np.nonzero(d == -1)
    lengths = ends[1] - starts[1]
    np.add.at(hist, lengths, 1)
    return hist


def diagonal_lines(R):
    R = np.asarray(R, dtype=bool)
    T = R.shape[0]
    hist = np.zeros(T + 1, dtype=np.int64)
    for k in range(1, T):
        both = np.vstack([np.diagonal(R, k), np.diagonal(R, -k)])
        hist += _run_lengths(both, T)
    return hist


def vertical_lines(R):
    R = np.asarray(R, dtype=bool)
    return _run_lengths(R.T, R.shape[0])


def recurrence_times(R):
    R = np.asarray(R, dtype=bool)
    T = R.shape[0]
    hist = np.zeros(T + 1, dtype=np.int64)
    cols, rows = np.nonzero(R.T)
    # within each column, rows come out sorted
    same_col = cols[1:] == cols[:-1]
    gaps = (rows[1:] - rows[:-1])[same_col]
    gaps = gaps[gaps > 1]
    np.add.at(hist, gaps, 1)
    return hist
