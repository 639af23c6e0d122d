"""Compiled inner loops: prefix-sum diameters and symmetric partial sums.

Everything here works on plain arrays; the public wrappers live in
``trigpoly``.
"""

import numpy as np
from numba import njit

# Below this many hull vertices the all-pairs scan is cheaper than calipers.
_PAIRS_CUTOFF = 128
_RESYNC = 256


@njit(cache=True)
def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


@njit(cache=True)
def _octagon_filter(xs, ys, n):
    """Indices of points not strictly inside the extreme-point octagon."""
    # Extremes in counter-clockwise direction order: E, NE, N, NW, W, SW, S, SE.
    ext = np.zeros(8, np.int64)
    b0 = xs[0]
    b1 = xs[0] + ys[0]
    b2 = ys[0]
    b3 = ys[0] - xs[0]
    b4 = -xs[0]
    b5 = -xs[0] - ys[0]
    b6 = -ys[0]
    b7 = xs[0] - ys[0]
    for i in range(1, n):
        x = xs[i]
        y = ys[i]
        if x > b0:
            b0 = x
            ext[0] = i
        if x + y > b1:
            b1 = x + y
            ext[1] = i
        if y > b2:
            b2 = y
            ext[2] = i
        if y - x > b3:
            b3 = y - x
            ext[3] = i
        if -x > b4:
            b4 = -x
            ext[4] = i
        if -x - y > b5:
            b5 = -x - y
            ext[5] = i
        if -y > b6:
            b6 = -y
            ext[6] = i
        if x - y > b7:
            b7 = x - y
            ext[7] = i
    px = np.empty(8)
    py = np.empty(8)
    ex = np.empty(8)
    ey = np.empty(8)
    m = 0
    for k in range(8):
        a = ext[k]
        b = ext[(k + 1) % 8]
        if xs[a] == xs[b] and ys[a] == ys[b]:
            continue
        px[m] = xs[a]
        py[m] = ys[a]
        ex[m] = xs[b] - xs[a]
        ey[m] = ys[b] - ys[a]
        m += 1
    if m < 3:
        return np.arange(n)
    scale = max(b0 + b4, b2 + b6) + 1e-300
    tol = 1e-9 * scale * scale
    keep = np.empty(n, np.int64)
    count = 0
    for i in range(n):
        x = xs[i]
        y = ys[i]
        for k in range(m):
            if ex[k] * (y - py[k]) - ey[k] * (x - px[k]) <= tol:
                keep[count] = i
                count += 1
                break
    return keep[:count]


@njit(cache=True)
def _hull(xs, ys):
    """Andrew's monotone chain; returns hull vertex coordinates (ccw)."""
    n = xs.shape[0]
    # Lexicographic order via two stable sorts.
    o1 = np.argsort(ys, kind="mergesort")
    o2 = np.argsort(xs[o1], kind="mergesort")
    order = o1[o2]
    hx = np.empty(2 * n + 1)
    hy = np.empty(2 * n + 1)
    k = 0
    for idx in range(n):
        i = order[idx]
        while k >= 2 and _cross(hx[k - 2], hy[k - 2], hx[k - 1], hy[k - 1], xs[i], ys[i]) <= 0.0:
            k -= 1
        hx[k] = xs[i]
        hy[k] = ys[i]
        k += 1
    lower = k + 1
    for idx in range(n - 2, -1, -1):
        i = order[idx]
        while k >= lower and _cross(hx[k - 2], hy[k - 2], hx[k - 1], hy[k - 1], xs[i], ys[i]) <= 0.0:
            k -= 1
        hx[k] = xs[i]
        hy[k] = ys[i]
        k += 1
    if k > 1:
        k -= 1
    return hx[:k], hy[:k]


@njit(cache=True)
def _all_pairs(xs, ys):
    n = xs.shape[0]
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            d = dx * dx + dy * dy
            best = max(best, d)
    return np.sqrt(best)


@njit(cache=True)
def _calipers(hx, hy):
    m = hx.shape[0]
    best = 0.0
    j = 1
    for i in range(m):
        ni = (i + 1) % m
        while True:
            nj = (j + 1) % m
            a_next = abs(_cross(hx[i], hy[i], hx[ni], hy[ni], hx[nj], hy[nj]))
            a_cur = abs(_cross(hx[i], hy[i], hx[ni], hy[ni], hx[j], hy[j]))
            if a_next > a_cur:
                j = nj
            else:
                break
        for p in (i, ni):
            dx = hx[p] - hx[j]
            dy = hy[p] - hy[j]
            d = dx * dx + dy * dy
            best = max(best, d)
    return np.sqrt(best)


@njit(cache=True)
def diameter(xs, ys):
    """Diameter of a planar point set (hull + calipers, exact scan when small)."""
    n = xs.shape[0]
    if n <= 16:
        return _all_pairs(xs, ys)
    keep = _octagon_filter(xs, ys, n)
    hx, hy = _hull(xs[keep], ys[keep])
    if hx.shape[0] <= _PAIRS_CUTOFF:
        return _all_pairs(hx, hy)
    return _calipers(hx, hy)


@njit(cache=True)
def prefix_diameters_grid(freqs, coeffs, G, js):
    """P* at grid angles 2*pi*j/G (G a power of two), phases read from a root table."""
    K = freqs.shape[0]
    table = np.exp(2j * np.pi * np.arange(G) / G)
    mask = G - 1
    out = np.empty(js.shape[0])
    xs = np.empty(K + 1)
    ys = np.empty(K + 1)
    for p in range(js.shape[0]):
        j = js[p]
        s = 0.0 + 0.0j
        xs[0] = 0.0
        ys[0] = 0.0
        for k in range(K):
            s += coeffs[k] * table[(freqs[k] * j) & mask]
            xs[k + 1] = s.real
            ys[k + 1] = s.imag
        out[p] = diameter(xs, ys)
    return out


@njit(cache=True)
def product_prefix_diameters_grid(gf, gc, hf, hc, r, G, js):
    """P* of g * h_[r] at grid angles from the factored form.

    Every prefix sum of the product is A_m + B_m * S_k with S_k a prefix sum of
    g, so only the hull vertices of {S_k} need to be mapped into each block.
    """
    Kg = gf.shape[0]
    Kh = hf.shape[0]
    table = np.exp(2j * np.pi * np.arange(G) / G)
    mask = G - 1
    out = np.empty(js.shape[0])
    sx = np.empty(Kg + 1)
    sy = np.empty(Kg + 1)
    for p in range(js.shape[0]):
        j = js[p]
        s = 0.0 + 0.0j
        sx[0] = 0.0
        sy[0] = 0.0
        for k in range(Kg):
            s += gc[k] * table[(gf[k] * j) & mask]
            sx[k + 1] = s.real
            sy[k + 1] = s.imag
        if Kg + 1 <= 16:
            vx, vy = sx, sy
        else:
            keep = _octagon_filter(sx, sy, Kg + 1)
            vx, vy = _hull(sx[keep], sy[keep])
        nv = vx.shape[0]
        xs = np.empty(Kh * nv + 1)
        ys = np.empty(Kh * nv + 1)
        a = 0.0 + 0.0j
        q = 0
        for m in range(Kh):
            b = hc[m] * table[(hf[m] * r * j) & mask]
            for v in range(nv):
                z = a + b * (vx[v] + 1j * vy[v])
                xs[q] = z.real
                ys[q] = z.imag
                q += 1
            a += b * s
        xs[q] = a.real
        ys[q] = a.imag
        out[p] = diameter(xs, ys)
    return out


@njit(cache=True)
def prefix_diameters(freqs, coeffs, ts):
    """P* at arbitrary angles; the running phase is resynchronised often."""
    K = freqs.shape[0]
    out = np.empty(ts.shape[0])
    xs = np.empty(K + 1)
    ys = np.empty(K + 1)
    for p in range(ts.shape[0]):
        t = ts[p]
        z = np.exp(1j * t)
        s = 0.0 + 0.0j
        cur = 1.0 + 0.0j
        xs[0] = 0.0
        ys[0] = 0.0
        for k in range(K):
            if k > 0 and freqs[k] - freqs[k - 1] == 1 and k % _RESYNC != 0:
                cur = cur * z
            else:
                cur = np.exp(1j * (freqs[k] * t))
            s += coeffs[k] * cur
            xs[k + 1] = s.real
            ys[k + 1] = s.imag
        out[p] = diameter(xs, ys)
    return out


@njit(cache=True)
def eval_points(freqs, coeffs, ts):
    K = freqs.shape[0]
    out = np.empty(ts.shape[0], np.complex128)
    for p in range(ts.shape[0]):
        t = ts[p]
        z = np.exp(1j * t)
        s = 0.0 + 0.0j
        cur = 1.0 + 0.0j
        for k in range(K):
            if k > 0 and freqs[k] - freqs[k - 1] == 1 and k % _RESYNC != 0:
                cur = cur * z
            else:
                cur = np.exp(1j * (freqs[k] * t))
            s += coeffs[k] * cur
        out[p] = s
    return out


@njit(cache=True)
def symmetric_partial_sup(dense, lo, G):
    """max over N and grid points of |S_N P| where S_N keeps |n| <= N.

    ``dense`` holds coefficients for frequencies lo..lo+len-1.
    """
    hi = lo + dense.shape[0] - 1
    deg = max(abs(lo), abs(hi))
    table = np.exp(2j * np.pi * np.arange(G) / G)
    best = 0.0
    for j in range(G):
        s = 0.0 + 0.0j
        for N in range(deg + 1):
            if N == 0:
                if lo <= 0 <= hi:
                    s += dense[-lo]
            else:
                if lo <= N <= hi:
                    s += dense[N - lo] * table[(N * j) % G]
                if lo <= -N <= hi:
                    s += dense[-N - lo] * table[((-N * j) % G + G) % G]
            a = abs(s)
            best = max(best, a)
    return best


@njit(cache=True)
def horner(coeffs, w):
    """sum_k coeffs[k] * w**k at every point of ``w``."""
    out = np.empty(w.shape[0], np.complex128)
    K = coeffs.shape[0]
    for p in range(w.shape[0]):
        z = w[p]
        s = coeffs[K - 1]
        for k in range(K - 2, -1, -1):
            s = s * z + coeffs[k]
        out[p] = s
    return out
