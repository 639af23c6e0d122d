"""Independent reference computations used by the tests.

Nothing here calls into plalab: each oracle works from plain coefficient
dictionaries or arrays with the most direct formula available.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2 * np.pi


def direct_eval(coeffs: dict[int, complex], t: float) -> complex:
    """sum c(n) e^{int}, one term at a time with math-free Python complex arithmetic."""
    total = 0j
    for n in sorted(coeffs):
        total += complex(coeffs[n]) * complex(np.cos(n * t), np.sin(n * t))
    return total


def brute_maximal(coeffs: dict[int, complex], t: float) -> float:
    """max over frequency segments [l, m] of |sum_{l<=n<=m} c(n) e^{int}| by enumerating every pair."""
    freqs = sorted(coeffs)
    terms = [complex(coeffs[n]) * np.exp(1j * n * t) for n in freqs]
    best = 0.0
    for i in range(len(terms)):
        acc = 0j
        for j in range(i, len(terms)):
            acc += terms[j]
            best = max(best, abs(acc))
    return best


def brute_u_norm(coeffs: dict[int, complex], G: int) -> float:
    """max_N max_j |sum_{|n|<=N} c(n) e^{i n t_j}| with an explicit exponential matrix."""
    t = TWO_PI * np.arange(G) / G
    deg = max(abs(n) for n in coeffs)
    partial = np.zeros(G, dtype=complex)
    best = 0.0
    for N in range(deg + 1):
        for n in {N, -N}:
            if n in coeffs:
                partial = partial + coeffs[n] * np.exp(1j * n * t)
        best = max(best, float(np.abs(partial).max()))
    return best


def brute_rho(d: np.ndarray) -> float:
    """Scan eps over j/(4G) and return the first eps with m{|d| > eps} < eps."""
    d = np.abs(np.asarray(d))
    G = d.size
    top = float(d.max()) if d.size else 0.0
    for j in range(int(4 * G * max(top, 1.0)) + 2):
        eps = j / (4 * G)
        if np.count_nonzero(d > eps) / G < eps:
            return eps
    return float("inf")


def direct_modulated(coeffs: dict[int, complex], s: int, N: int, ts) -> np.ndarray:
    """(1/N) sum_j f(t - 2 pi j/N) e^{2 pi i s j/N} evaluated term by term."""
    ts = np.asarray(ts, dtype=float)
    out = np.zeros(ts.shape, dtype=complex)
    for j in range(N):
        shift = TWO_PI * j / N
        f_shift = sum(c * np.exp(1j * n * (ts - shift)) for n, c in coeffs.items())
        out += f_shift * np.exp(1j * s * shift)
    return out / N


def random_coeffs(rng: np.random.Generator, lo: int, hi: int, density: float = 1.0) -> dict[int, complex]:
    out = {}
    for n in range(lo, hi + 1):
        if rng.random() < density:
            out[n] = complex(rng.normal(), rng.normal())
    if not out:
        out[lo] = 1.0 + 0j
    return out


def brute_maximal_points(coeffs: dict[int, complex], ts) -> np.ndarray:
    """P* at the given angles from every segment sum |S_m - S_l| (l < m), vectorised over angles."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    freqs = np.array(sorted(coeffs))
    c = np.array([coeffs[n] for n in freqs], dtype=complex)
    terms = c[None, :] * np.exp(1j * np.outer(ts, freqs))
    prefix = np.concatenate([np.zeros((ts.size, 1), dtype=complex), np.cumsum(terms, axis=1)], axis=1)
    best = np.zeros(ts.size)
    for m in range(1, prefix.shape[1]):
        seg = np.abs(prefix[:, m : m + 1] - prefix[:, :m]).max(axis=1)
        best = np.maximum(best, seg)
    return best


def brute_maximal_grid(coeffs: dict[int, complex], G: int) -> np.ndarray:
    return brute_maximal_points(coeffs, TWO_PI * np.arange(G) / G)
