"""Sampled functions, step functions, the convergence-in-measure metric and trapezoids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, InfeasibleRamp, TargetUnreachable
from .trigpoly import (
    TWO_PI,
    Certificate,
    TrigPoly,
    grid_angles,
    is_power_of_two,
    maximal_on_grid,
)

# ----------------------------------------------------------------------
# sampled functions


class SampledFunction:
    """Complex values at t_j = 2*pi*j/G on a dyadic grid (G >= 8)."""

    __slots__ = ("G", "values")

    def __init__(self, G: int, values):
        G = int(G)
        if not is_power_of_two(G) or G < 8:
            raise ValueError(f"grid size must be a power of two >= 8, got {G}")
        v = np.array(values, dtype=np.complex128).reshape(-1)
        if v.size != G:
            raise ValueError(f"expected {G} values, got {v.size}")
        v.setflags(write=False)
        self.G = G
        self.values = v

    @classmethod
    def from_callable(cls, func, G: int) -> SampledFunction:
        return cls(G, func(grid_angles(G)))

    @classmethod
    def constant(cls, c: complex, G: int) -> SampledFunction:
        return cls(G, np.full(G, c, dtype=np.complex128))

    @property
    def angles(self) -> np.ndarray:
        return grid_angles(self.G)

    def _check(self, other):
        if isinstance(other, SampledFunction):
            if other.G != self.G:
                raise GridMismatch(f"grid sizes differ: {self.G} vs {other.G}")
            return other.values
        return other

    def __add__(self, other):
        return SampledFunction(self.G, self.values + self._check(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SampledFunction(self.G, self.values - self._check(other))

    def __rsub__(self, other):
        return SampledFunction(self.G, self._check(other) - self.values)

    def __mul__(self, other):
        return SampledFunction(self.G, self.values * self._check(other))

    __rmul__ = __mul__

    def __neg__(self):
        return SampledFunction(self.G, -self.values)

    def __abs__(self):
        return SampledFunction(self.G, np.abs(self.values))

    def __eq__(self, other):
        if not isinstance(other, SampledFunction):
            return NotImplemented
        return self.G == other.G and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"SampledFunction(G={self.G})"

    def masked(self, mask) -> SampledFunction:
        return SampledFunction(self.G, np.where(mask, self.values, 0))


# ----------------------------------------------------------------------
# arcs and step functions


@dataclass(frozen=True)
class Arc:
    """The half-open arc [start, start + length) on the circle."""

    start: float
    length: float

    def __post_init__(self):
        if not 0 <= self.length <= TWO_PI:
            raise ValueError(f"arc length must lie in [0, 2pi], got {self.length}")
        object.__setattr__(self, "start", float(self.start) % TWO_PI)

    @classmethod
    def between(cls, a: float, b: float) -> Arc:
        """The arc running counter-clockwise from a to b (a == b gives the empty arc)."""
        return cls(a, (b - a) % TWO_PI)

    @property
    def end(self) -> float:
        return self.start + self.length

    @property
    def is_empty(self) -> bool:
        return self.length == 0

    @property
    def measure(self) -> float:
        return self.length / TWO_PI

    def contains(self, t) -> np.ndarray:
        return np.mod(np.asarray(t, dtype=float) - self.start, TWO_PI) < self.length

    def grid_mask(self, G: int) -> np.ndarray:
        """Membership of the grid points 2*pi*j/G."""
        return self.contains(grid_angles(G))

    def neighborhood(self, delta: float) -> Arc:
        return Arc(self.start - delta, min(TWO_PI, self.length + 2 * delta))


class StepFunction:
    """Piecewise-constant function on arcs [b_k, b_{k+1}); the last arc wraps around."""

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints, values):
        b = np.asarray(breakpoints, dtype=float).reshape(-1)
        v = np.asarray(values, dtype=np.complex128).reshape(-1)
        if b.size == 0 or b.size != v.size:
            raise ValueError("need one value per breakpoint")
        if np.any(b < 0) or np.any(b >= TWO_PI) or np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing in [0, 2pi)")
        b.setflags(write=False)
        v.setflags(write=False)
        self.breakpoints = b
        self.values = v

    @classmethod
    def constant(cls, c: complex = 0.0) -> StepFunction:
        return cls([0.0], [c])

    @classmethod
    def indicator(cls, arc: Arc, value: complex = 1.0) -> StepFunction:
        if arc.is_empty:
            return cls.constant(0.0)
        if arc.length >= TWO_PI:
            return cls.constant(value)
        a, b = arc.start, arc.end % TWO_PI
        if a < b:
            pts, vals = [a, b], [value, 0]
            if a > 0:
                pts, vals = [0.0] + pts, [0] + vals
            return cls(pts, vals)
        # wraps through zero
        pts, vals = [b, a], [0, value]
        if b > 0:
            pts, vals = [0.0] + pts, [value] + vals
        return cls(pts, vals)

    @classmethod
    def from_arcs(cls, arcs) -> StepFunction:
        """Build from (start, end, value) triples whose arcs partition the circle."""
        arcs = sorted(arcs, key=lambda a: a[0] % TWO_PI)
        return cls([a[0] % TWO_PI for a in arcs], [a[2] for a in arcs])

    @property
    def n_arcs(self) -> int:
        return self.breakpoints.size

    def ends(self) -> np.ndarray:
        return np.append(self.breakpoints[1:], self.breakpoints[0] + TWO_PI)

    def arcs(self):
        """(start, end, value) per arc; ``end`` may exceed 2pi for the wrapping arc."""
        return list(zip(self.breakpoints.tolist(), self.ends().tolist(), self.values.tolist()))

    def __call__(self, t):
        t = np.mod(np.asarray(t, dtype=float), TWO_PI)
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return self.values[idx]  # idx == -1 selects the wrapping last arc

    def sample(self, G: int) -> SampledFunction:
        return SampledFunction(G, self(grid_angles(G)))

    def fourier(self, N: int) -> TrigPoly:
        """Exact coefficients for |n| <= N."""
        n = np.arange(-N, N + 1)
        c = np.zeros(n.size, dtype=np.complex128)
        nz = n != 0
        for a, b, v in self.arcs():
            if v == 0:
                continue
            c[~nz] += v * (b - a) / TWO_PI
            m = n[nz]
            c[nz] += v * (np.exp(-1j * m * a) - np.exp(-1j * m * b)) / (1j * TWO_PI * m)
        return TrigPoly(n, c)

    def fejer_mean(self, N: int) -> TrigPoly:
        """sigma_N: Fourier coefficients damped by (1 - |n|/(N+1))."""
        F = self.fourier(N)
        return TrigPoly(F.freqs, F.coeffs * (1.0 - np.abs(F.freqs) / (N + 1.0)))

    def clipped(self, bound: float) -> StepFunction:
        mag = np.abs(self.values)
        scale = np.where(mag > bound, bound / np.where(mag > 0, mag, 1.0), 1.0)
        return StepFunction(self.breakpoints, self.values * scale)

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(
            self.values, other.values
        )

    def __repr__(self):
        return f"StepFunction(n_arcs={self.n_arcs})"


def mask_runs(mask) -> list[tuple[int, int]]:
    """Maximal runs [j0, j1) of True in a cyclic boolean grid mask."""
    mask = np.asarray(mask, dtype=bool)
    G = mask.size
    if mask.all():
        return [(0, G)]
    if not mask.any():
        return []
    shift = int(np.argmin(mask))  # a False position; runs never straddle it
    rolled = np.roll(mask, -shift)
    edges = np.diff(np.concatenate([[0], rolled.astype(np.int8), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return [((s + shift) % G, (s + shift) % G + (e - s)) for s, e in zip(starts, stops)]


# ----------------------------------------------------------------------
# metric and level sets


def rho_values(d) -> float:
    """rho of a function with moduli ``d`` against 0 under the counting measure."""
    d = np.sort(np.abs(np.asarray(d)).reshape(-1))[::-1]
    G = d.size
    k = np.arange(G + 1)
    tail = np.append(d, 0.0)
    return float(np.min(np.maximum(tail, k / G)))


def rho(f: SampledFunction, g: SampledFunction) -> float:
    """inf{eps : m{|f - g| > eps} < eps} on the grid."""
    if f.G != g.G:
        raise GridMismatch(f"grid sizes differ: {f.G} vs {g.G}")
    return rho_values(f.values - g.values)


def rho_on(f: SampledFunction, g: SampledFunction, mask) -> float:
    """Restricted metric rho((f - g) * 1_U, 0)."""
    if f.G != g.G:
        raise GridMismatch(f"grid sizes differ: {f.G} vs {g.G}")
    return rho_values(np.where(mask, f.values - g.values, 0))


def measure_above(f: SampledFunction, eps: float) -> float:
    if eps < 0:
        raise ValueError("level must be nonnegative")
    return float(np.count_nonzero(np.abs(f.values) > eps)) / f.G


def equal_arc_step(f: SampledFunction, K: int) -> StepFunction:
    """K equal arcs, each taking the sample at its midpoint."""
    G = f.G
    width = G // K
    mids = (np.arange(K) * width + width // 2) % G
    return StepFunction(TWO_PI * np.arange(K) / K, f.values[mids])


def step_approximate(f: SampledFunction, target: float) -> StepFunction:
    """Step function on K = 1, 2, 4, ... equal arcs with rho(S, f) < target."""
    if target <= 0:
        raise ValueError("target must be positive")
    K = 1
    while K <= f.G // 4:
        S = equal_arc_step(f, K)
        if rho(S.sample(f.G), f) < target:
            return S
        K *= 2
    raise TargetUnreachable(f"no step function on at most {f.G // 4} arcs reaches rho < {target}")


# ----------------------------------------------------------------------
# trapezoids


def trapezoid_coefficients(arc: Arc, ramp: float, N: int) -> TrigPoly:
    """Fourier partial sum of the trapezoid 1_I convolved with the normalised box of width ``ramp``.

    The ramps straddle the arc's endpoints, so the support is I widened by ramp/2
    on each side.
    """
    if arc.is_empty:
        return TrigPoly.zero()
    a, b = arc.start, arc.start + arc.length
    n = np.arange(-N, N + 1)
    c = np.empty(n.size, dtype=np.complex128)
    nz = n != 0
    c[~nz] = arc.length / TWO_PI
    m = n[nz].astype(float)
    x = m * ramp / 2
    c[nz] = (np.exp(-1j * m * a) - np.exp(-1j * m * b)) / (1j * TWO_PI * m) * np.sin(x) / x
    return TrigPoly(n, c)


def trapezoid_tail_bound(ramp: float, N: int) -> float:
    """Rigorous bound on the sum of |coefficients| beyond |n| = N."""
    return 4.0 / (np.pi * ramp * N) if N > 0 else np.inf


def truncation_degree(ramp: float, tail: float) -> int:
    return int(np.ceil(4.0 / (np.pi * ramp * tail)))


def triangle_min_coefficient(half_width: float, N: int) -> float:
    """Smallest real coefficient of a centred triangle of the given half-width (>= 0 in theory)."""
    n = np.arange(1, N + 1, dtype=float)
    x = n * half_width / 2
    c = (half_width**2 / TWO_PI) * (np.sin(x) / x) ** 2
    return float(min(c.min(initial=np.inf), half_width**2 / TWO_PI))


def trapezoid_indicator(
    I: Arc,
    delta: float,
    hstar_bound: float,
    *,
    ramp: float | None = None,
    off_target: float | None = None,
    grid: int = 8192,
):
    """Partial Fourier sum g of a trapezoid interpolating 1_I.

    ``off_target`` overrides the bound required of |g| outside I_delta (the
    default is delta / (2 hstar_bound)).  Returns ``(g, certificate)``; the
    certificate checks that bound, rho(g, 1_I) < delta/3 and ||g*|| < 6/delta
    through ||g^||_1.  The truncation degree is the smallest N whose rigorous
    tail bound is below half the tighter of the two pointwise targets.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    ramp = delta / 4 if ramp is None else ramp
    if not 0 < ramp < delta / 2:
        raise ValueError("ramp width must lie in (0, delta/2)")
    off_bound = delta / (2 * max(hstar_bound, 1e-300)) if off_target is None else off_target
    cert = Certificate(grid_size=grid, title="trapezoid indicator")
    if I.is_empty:
        g = TrigPoly.zero()
        cert.add("|g| off I_delta", off_bound, 0.0, strict=True)
        cert.add("rho(g, 1_I)", delta / 3, 0.0, strict=True)
        cert.add("||g*||_inf", 6 / delta, 0.0, strict=True)
        return g, cert
    if I.length + ramp > TWO_PI:
        raise InfeasibleRamp("arc plus ramps covers more than the circle")
    tail_target = 0.5 * min(off_bound, delta / 6)
    N = truncation_degree(ramp, tail_target)
    g = trapezoid_coefficients(I, ramp, N)
    tail = trapezoid_tail_bound(ramp, N)

    G = grid
    vals = g.sample(G)
    off = ~I.neighborhood(delta).grid_mask(G)
    off_sup = float(np.abs(vals[off]).max(initial=0.0))
    ind = SampledFunction(G, I.grid_mask(G).astype(float))
    cert.add("|g| off I_delta", off_bound, off_sup, strict=True, note=f"rigorous tail {tail!r}")
    cert.add("rho(g, 1_I)", delta / 3, rho(SampledFunction(G, vals), ind), strict=True)
    cert.add("||g*||_inf", 6 / delta, float(np.abs(g.coeffs).sum()), strict=True,
             note="via ||g^||_1")
    s1 = (I.length + ramp) / 2
    s2 = (I.length - ramp) / 2
    pos = min(triangle_min_coefficient(s1, N), triangle_min_coefficient(s2, N) if s2 > 0 else 0.0)
    cert.add("triangle coefficients >= 0", 0.0, -pos)
    return g, cert


def gstar_off(g: TrigPoly, G: int, mask) -> np.ndarray:
    """g* at the grid points selected by ``mask``."""
    js = np.flatnonzero(mask)
    return maximal_on_grid(g, G, js)

