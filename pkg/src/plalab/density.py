"""Discrete modulated averages of translates.

F_{N,s}(t) = (1/N) sum_{j<N} f(t - 2 pi j / N) e^{2 pi i s j / N}

Averaging the N translates against the character e^{2 pi i s j/N} keeps
exactly the frequencies n = s (mod N), so F_{N,s} tends to f^(s) e^{ist}
as N grows whenever the coefficients of f are summable.
"""

from __future__ import annotations

import numpy as np

from .trigpoly import TWO_PI, TrigPoly, eval_at


def modulated_average(f: TrigPoly, s: int, N: int) -> TrigPoly:
    """F_{N,s} computed as the congruence filter n = s (mod N)."""
    if N < 2:
        raise ValueError("N must be at least 2")
    keep = (f.freqs - s) % N == 0
    return TrigPoly(f.freqs[keep], f.coeffs[keep])


def modulated_average_direct(f: TrigPoly, s: int, N: int, ts) -> np.ndarray:
    """F_{N,s} at the angles ``ts`` by summing the N translates."""
    ts = np.asarray(ts, dtype=float)
    out = np.zeros(ts.shape, dtype=np.complex128)
    for j in range(N):
        shift = TWO_PI * j / N
        out += eval_at(f, np.mod(ts - shift, TWO_PI)) * np.exp(1j * s * shift)
    return out / N


def tail_bound(f: TrigPoly, s: int, N: int) -> float:
    """sum of |f^(n)| over n = s (mod N), n != s: bounds sup |F_{N,s} - f^(s) e^{ist}|."""
    keep = ((f.freqs - s) % N == 0) & (f.freqs != s)
    return float(np.abs(f.coeffs[keep]).sum())


def approximation_error(f: TrigPoly, s: int, N: int, G: int | None = None) -> float:
    """Grid estimate of sup |F_{N,s} - f^(s) e^{ist}|."""
    err = modulated_average(f, s, N) - TrigPoly.monomial(s, f.coeff(s))
    if err.is_zero:
        return 0.0
    G = G or max(64, 1 << int(np.ceil(np.log2(8 * err.degree + 2))))
    return float(np.abs(err.sample(G)).max())
