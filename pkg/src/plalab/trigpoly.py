"""Trigonometric polynomials, the maximal partial-sum function and special products.

A :class:`TrigPoly` stores its nonzero coefficients as two parallel arrays
(sorted integer frequencies, complex values).  Products ``g * h(r t)`` with a
large dilation ``r`` are kept in factored form by :class:`SpecialProduct`,
since their expanded coefficient tables can be far too large to store.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DilationTooSmall, GridTooCoarse

TWO_PI = 2.0 * np.pi


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def grid_angles(G: int) -> np.ndarray:
    return TWO_PI * np.arange(G) / G


def oversampled_size(degree: int) -> int:
    """Grid size used for sup-norm estimates: 8x the degree, rounded up to 2^k."""
    return max(8, next_power_of_two(8 * max(int(degree), 1)))


class TrigPoly:
    """A finite sum ``sum c(n) e^{int}`` in canonical form (no stored zeros)."""

    __slots__ = ("coeffs", "freqs")

    def __init__(self, freqs=(), coeffs=()):
        f = np.asarray(freqs, dtype=np.int64).reshape(-1)
        c = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if f.shape != c.shape:
            raise ValueError("frequency and coefficient arrays differ in length")
        if f.size and np.any(np.diff(f) <= 0):
            order = np.argsort(f, kind="stable")
            f, c = f[order], c[order]
            if np.any(np.diff(f) == 0):
                raise ValueError("duplicate frequency")
        nz = c != 0
        f, c = f[nz], c[nz]
        f.setflags(write=False)
        c.setflags(write=False)
        self.freqs = f
        self.coeffs = c

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls) -> TrigPoly:
        return cls()

    @classmethod
    def monomial(cls, n: int, c: complex = 1.0) -> TrigPoly:
        return cls([n], [c])

    @classmethod
    def from_dense(cls, lo: int, dense) -> TrigPoly:
        dense = np.asarray(dense, dtype=np.complex128)
        return cls(lo + np.arange(dense.size), dense)

    @classmethod
    def from_mapping(cls, table: Mapping[int, complex]) -> TrigPoly:
        keys = sorted(table)
        return cls(keys, [table[k] for k in keys])

    @classmethod
    def from_grid_values(cls, values, lo: int, hi: int) -> TrigPoly:
        """Coefficients lo..hi read off from samples on a uniform grid."""
        values = np.asarray(values, dtype=np.complex128)
        G = values.size
        if hi - lo + 1 > G:
            raise GridTooCoarse(f"grid of {G} points cannot resolve {hi - lo + 1} frequencies")
        spectrum = np.fft.fft(values) / G
        n = np.arange(lo, hi + 1)
        return cls(n, spectrum[n % G])

    # basic properties -------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.freqs.size == 0

    @property
    def lo(self) -> int:
        if self.is_zero:
            raise ValueError("the zero polynomial has no lowest frequency")
        return int(self.freqs[0])

    @property
    def hi(self) -> int:
        if self.is_zero:
            raise ValueError("the zero polynomial has no highest frequency")
        return int(self.freqs[-1])

    @property
    def degree(self) -> int:
        if self.is_zero:
            return 0
        return max(abs(self.lo), abs(self.hi))

    @property
    def spec(self) -> np.ndarray:
        return self.freqs

    @property
    def nnz(self) -> int:
        return int(self.freqs.size)

    def coeff(self, n: int) -> complex:
        i = np.searchsorted(self.freqs, n)
        if i < self.freqs.size and self.freqs[i] == n:
            return complex(self.coeffs[i])
        return 0j

    def dense(self, lo: int | None = None, hi: int | None = None) -> np.ndarray:
        if self.is_zero and (lo is None or hi is None):
            return np.zeros(1 if lo is None else 0, dtype=np.complex128)
        lo = self.lo if lo is None else lo
        hi = self.hi if hi is None else hi
        out = np.zeros(hi - lo + 1, dtype=np.complex128)
        sel = (self.freqs >= lo) & (self.freqs <= hi)
        out[self.freqs[sel] - lo] = self.coeffs[sel]
        return out

    def items(self) -> Iterable[tuple[int, complex]]:
        return zip(self.freqs.tolist(), self.coeffs.tolist())

    def is_analytic(self) -> bool:
        """spec(P) contained in [0, inf)."""
        return self.is_zero or self.lo >= 0

    # algebra ----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.monomial(0, complex(other))
        f = np.union1d(self.freqs, other.freqs)
        c = np.zeros(f.size, dtype=np.complex128)
        c[np.searchsorted(f, self.freqs)] += self.coeffs
        c[np.searchsorted(f, other.freqs)] += other.coeffs
        return TrigPoly(f, c)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly(self.freqs, -self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TrigPoly) else -complex(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return multiply(self, other)
        return TrigPoly(self.freqs, self.coeffs * complex(other))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return np.array_equal(self.freqs, other.freqs) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.freqs.tobytes(), self.coeffs.tobytes()))

    def __repr__(self):
        if self.is_zero:
            return "TrigPoly(0)"
        return f"TrigPoly(nnz={self.nnz}, lo={self.lo}, hi={self.hi})"

    def restrict(self, lo: int, hi: int) -> TrigPoly:
        sel = (self.freqs >= lo) & (self.freqs <= hi)
        return TrigPoly(self.freqs[sel], self.coeffs[sel])

    # evaluation -------------------------------------------------------
    def __call__(self, t):
        return eval_at(self, t)

    def sample(self, G: int) -> np.ndarray:
        """Exact values on the grid 2*pi*j/G for any degree (frequencies folded mod G)."""
        if self.is_zero:
            return np.zeros(G, dtype=np.complex128)
        idx = self.freqs % G
        folded = np.bincount(idx, weights=self.coeffs.real, minlength=G) + 1j * np.bincount(
            idx, weights=self.coeffs.imag, minlength=G
        )
        return np.fft.ifft(folded) * G


# ----------------------------------------------------------------------
# evaluation and algebra


def eval(P: TrigPoly, t: float) -> complex:
    """Direct summation of ``sum c(n) e^{int}`` at one angle."""
    if P.is_zero:
        return 0j
    return complex(np.sum(P.coeffs * np.exp(1j * P.freqs * float(t))))


def eval_at(P: TrigPoly, ts) -> np.ndarray | complex:
    ts_arr = np.asarray(ts, dtype=float)
    if ts_arr.ndim == 0:
        return eval(P, float(ts_arr))
    if P.is_zero:
        return np.zeros(ts_arr.shape, dtype=np.complex128)
    flat = _kernels.eval_points(P.freqs, P.coeffs, ts_arr.reshape(-1))
    return flat.reshape(ts_arr.shape)


def eval_grid(P: TrigPoly, G: int):
    """Values on the dyadic grid of size ``G`` as a :class:`SampledFunction`."""
    from .sampling import SampledFunction

    if G < 2 * P.degree + 2:
        raise GridTooCoarse(f"grid {G} is below 2*degree+2 = {2 * P.degree + 2}")
    return SampledFunction(G, P.sample(G))


def dilate(P: TrigPoly, r: int) -> TrigPoly:
    r = int(r)
    if r < 1:
        raise ValueError("dilation factor must be a positive integer")
    return TrigPoly(P.freqs * r, P.coeffs)


def multiply(g: TrigPoly, h: TrigPoly) -> TrigPoly:
    """Exact coefficient convolution."""
    if g.is_zero or h.is_zero:
        return TrigPoly.zero()
    span_g = g.hi - g.lo + 1
    span_h = h.hi - h.lo + 1
    if g.nnz * h.nnz <= 4 * (span_g + span_h) or span_g * span_h > 5e7:
        f = (g.freqs[:, None] + h.freqs[None, :]).reshape(-1)
        c = (g.coeffs[:, None] * h.coeffs[None, :]).reshape(-1)
        uniq, inv = np.unique(f, return_inverse=True)
        acc = np.zeros(uniq.size, dtype=np.complex128)
        np.add.at(acc, inv, c)
        return TrigPoly(uniq, acc)
    dense = np.convolve(g.dense(), h.dense())
    return TrigPoly.from_dense(g.lo + h.lo, dense)


# ----------------------------------------------------------------------
# maximal partial-sum function


def maximal_at(P: TrigPoly, ts) -> np.ndarray:
    """P*(t) at arbitrary angles: diameter of the prefix-sum point set."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if P.is_zero:
        return np.zeros(ts.shape)
    return _kernels.prefix_diameters(P.freqs, P.coeffs, ts)


def maximal_on_grid(P: TrigPoly, G: int, js=None) -> np.ndarray:
    """P* at grid points 2*pi*j/G with exact root-of-unity phases (no degree limit)."""
    js = np.arange(G, dtype=np.int64) if js is None else np.asarray(js, dtype=np.int64)
    if P.is_zero:
        return np.zeros(js.shape)
    return _kernels.prefix_diameters_grid(P.freqs, P.coeffs, int(G), js)


def maximal(P: TrigPoly, G: int):
    from .sampling import SampledFunction

    if G < 2 * P.degree + 2:
        raise GridTooCoarse(f"grid {G} is below 2*degree+2 = {2 * P.degree + 2}")
    return SampledFunction(G, maximal_on_grid(P, G).astype(np.complex128))


def maximal_sup(P: TrigPoly, G: int | None = None) -> float:
    """Grid estimate of ||P*||_inf (8x oversampling unless a grid is given)."""
    if P.is_zero:
        return 0.0
    G = oversampled_size(P.degree) if G is None else G
    return float(maximal_on_grid(P, G).max())


# ----------------------------------------------------------------------
# norms


def sup_norm(P: TrigPoly) -> float:
    if P.is_zero:
        return 0.0
    return float(np.abs(P.sample(oversampled_size(P.degree))).max())


def l2_norm(P: TrigPoly) -> float:
    return float(np.sqrt(np.sum(np.abs(P.coeffs) ** 2)))


def coeff_sup(P: TrigPoly) -> float:
    return float(np.abs(P.coeffs).max()) if P.nnz else 0.0


def u_norm(P: TrigPoly, G: int | None = None) -> float:
    """max over N = 0..degree of the sup-norm of the symmetric partial sum S_N P."""
    if P.is_zero:
        return 0.0
    if P.nnz == 1:
        # Every nonzero partial sum is c e^{int}, of modulus |c| everywhere.
        return float(abs(P.coeffs[0]))
    G = oversampled_size(P.degree) if G is None else G
    return float(_kernels.symmetric_partial_sup(P.dense(), P.lo, int(G)))


# ----------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class Clause:
    name: str
    bound: float
    measured: float
    strict: bool = False
    note: str = ""

    def passed(self, slack: float) -> bool:
        limit = self.bound * (1.0 + slack) if self.bound >= 0 else self.bound * (1.0 - slack)
        if self.strict:
            return bool(self.measured < limit)
        return bool(self.measured <= limit)

    def slack_used(self, slack: float) -> float:
        """Fraction of the relative tolerance consumed (0 when within the bare bound)."""
        excess = self.measured - self.bound
        if excess <= 0:
            return 0.0
        room = abs(self.bound) * slack
        return float("inf") if room == 0 else excess / room


@dataclass
class Certificate:
    """Machine-checkable record of which claimed bounds were met."""

    clauses: list[Clause] = field(default_factory=list)
    grid_size: int = 0
    slack: float = 0.0
    title: str = ""

    def add(self, name, bound, measured, strict=False, note="") -> Clause:
        clause = Clause(name, float(bound), float(measured), strict, note)
        self.clauses.append(clause)
        return clause

    def extend(self, other: Certificate, prefix: str = "") -> None:
        for c in other.clauses:
            self.clauses.append(Clause(prefix + c.name, c.bound, c.measured, c.strict, c.note))

    @property
    def passed(self) -> bool:
        return all(c.passed(self.slack) for c in self.clauses)

    def failing(self) -> list[Clause]:
        return [c for c in self.clauses if not c.passed(self.slack)]

    def clause(self, name: str) -> Clause:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)

    def max_slack_used(self) -> float:
        return max((c.slack_used(self.slack) for c in self.clauses), default=0.0)

    def to_text(self) -> str:
        lines = [
            f"certificate: {self.title}",
            f"grid_size: {self.grid_size}",
            f"slack: {self.slack!r}",
            f"verdict: {'PASS' if self.passed else 'FAIL'}",
            "clauses:",
        ]
        for c in self.clauses:
            rel = "<" if c.strict else "<="
            verdict = "pass" if c.passed(self.slack) else "FAIL"
            note = f" | {c.note}" if c.note else ""
            lines.append(f"  {c.name} | {c.measured!r} {rel} {c.bound!r} | {verdict}{note}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Certificate:
        cert = cls()
        for line in text.splitlines():
            if line.startswith("certificate:"):
                cert.title = line.split(":", 1)[1].strip()
            elif line.startswith("grid_size:"):
                cert.grid_size = int(line.split(":", 1)[1])
            elif line.startswith("slack:"):
                cert.slack = float(line.split(":", 1)[1])
            elif line.startswith("  "):
                parts = [p.strip() for p in line.strip().split(" | ")]
                name, relation = parts[0], parts[1]
                strict = " < " in relation
                measured, bound = relation.split(" < " if strict else " <= ")
                note = parts[3] if len(parts) > 3 else ""
                cert.clauses.append(Clause(name, float(bound), float(measured), strict, note))
        return cert


# ----------------------------------------------------------------------
# special products


def smallest_dilation(g_degree: int) -> int:
    """Smallest odd r > 3*deg(g).

    Odd r keeps j -> r*j a permutation of every dyadic grid, so h(r t) sampled
    on a grid is a rearrangement of h's own samples rather than an alias.
    """
    r = 3 * int(g_degree) + 1
    return r if r % 2 else r + 1


class SpecialProduct:
    """The product P = g * h_[r] kept in factored form.

    With r > 2 deg(g) the blocks a + r*b never overlap, so
    ``spec(P) = spec(g) + r*spec(h)`` and every coefficient is ``g(a) h(b)``.
    """

    __slots__ = ("_gstar", "g", "h", "r")

    def __init__(self, g: TrigPoly, h: TrigPoly, r: int, check: bool = True):
        r = int(r)
        if check and r <= 3 * g.degree:
            raise DilationTooSmall(f"r = {r} must exceed 3*deg(g) = {3 * g.degree}")
        self.g, self.h, self.r = g, h, r
        self._gstar = {}

    @property
    def is_zero(self) -> bool:
        return self.g.is_zero or self.h.is_zero

    @property
    def lo(self) -> int:
        return self.g.lo + self.r * self.h.lo

    @property
    def hi(self) -> int:
        return self.g.hi + self.r * self.h.hi

    @property
    def degree(self) -> int:
        return 0 if self.is_zero else max(abs(self.lo), abs(self.hi))

    @property
    def nnz(self) -> int:
        return 0 if self.is_zero else self.g.nnz * self.h.nnz

    def is_analytic(self) -> bool:
        """Integer bookkeeping: min spec = lo(g) + r*lo(h) >= 0."""
        return self.is_zero or self.lo >= 0

    def coeff_sup(self) -> float:
        return coeff_sup(self.g) * coeff_sup(self.h)

    def expand(self) -> TrigPoly:
        if self.is_zero:
            return TrigPoly.zero()
        f = (self.g.freqs[None, :] + self.r * self.h.freqs[:, None]).reshape(-1)
        c = (self.g.coeffs[None, :] * self.h.coeffs[:, None]).reshape(-1)
        return TrigPoly(f, c)

    def sample(self, G: int) -> np.ndarray:
        if self.is_zero:
            return np.zeros(G, dtype=np.complex128)
        j = np.arange(G, dtype=np.int64)
        return self.g.sample(G) * self.h.sample(G)[(self.r * j) % G]

    def __call__(self, ts):
        ts = np.asarray(ts, dtype=float)
        return eval_at(self.g, ts) * eval_at(self.h, np.mod(self.r * ts, TWO_PI))

    def scaled(self, c: complex) -> SpecialProduct:
        return SpecialProduct(self.g * c, self.h, self.r, check=False)

    def maximal_on_grid(self, G: int, js=None) -> np.ndarray:
        """P* at grid points without expanding; agrees with ``maximal_on_grid(expand())``."""
        js = np.arange(G, dtype=np.int64) if js is None else np.asarray(js, dtype=np.int64)
        if self.is_zero:
            return np.zeros(js.shape)
        return _kernels.product_prefix_diameters_grid(
            self.g.freqs, self.g.coeffs, self.h.freqs, self.h.coeffs, self.r, int(G), js
        )

    def gstar_on_grid(self, G: int, js) -> np.ndarray:
        """g* at grid points; values are kept per grid so repeated certificates reuse them."""
        js = np.asarray(js, dtype=np.int64)
        known = self._gstar.setdefault(G, np.full(G, np.nan))
        missing = js[np.isnan(known[js])]
        if missing.size:
            missing = np.unique(missing)
            known[missing] = maximal_on_grid(self.g, G, missing)
        return known[js]

    def envelope_on_grid(self, G: int, js, hstar_sup: float, gstar=None) -> np.ndarray:
        """Right side of the special-product bound |g| ||h*|| + 2 g* ||h^|| at grid points."""
        js = np.asarray(js, dtype=np.int64)
        gv = np.abs(self.g.sample(G)[js])
        if gstar is None:
            gstar = self.gstar_on_grid(G, js)
        return gv * hstar_sup + 2.0 * gstar * coeff_sup(self.h)

    def __repr__(self):
        return f"SpecialProduct(deg g={self.g.degree}, deg h={self.h.degree}, r={self.r})"


def hstar_sup_for(h: TrigPoly, G: int, r: int | None = None, cap: int = 1 << 13) -> float:
    """Estimate of ||h*||_inf covering every point h is sampled at by h_[r] on the G-grid.

    For integer r the points r*t_j mod 2pi are themselves G-grid points, so the
    G-grid is included; an oversampled grid (capped in size) is added on top.
    """
    if h.is_zero:
        return 0.0
    over = min(oversampled_size(h.degree), cap)
    values = [maximal_on_grid(h, over).max()]
    if over % G:
        # The G-grid is not contained in the oversampled one.
        values.append(maximal_on_grid(h, G).max())
    return float(max(values))


def special_product(g: TrigPoly, h: TrigPoly, r: int, grid: int = 4096, slack: float = 1e-9):
    """Expanded product g * h_[r] plus a pointwise certificate of the maximal bound.

    The certificate compares P*(t_j) with |g(t_j)| ||h*|| + 2 g*(t_j) ||h^|| at
    every grid point; the measured value is the worst ratio of the two sides.
    """
    sp = SpecialProduct(g, h, r)
    P = sp.expand()
    cert = Certificate(grid_size=grid, slack=slack, title="special product maximal bound")
    lhs = sp.maximal_on_grid(grid)
    hstar = hstar_sup_for(h, grid, r)
    rhs = sp.envelope_on_grid(grid, np.arange(grid), hstar)
    tiny = 1e-13 * (1.0 + float(rhs.max(initial=0.0)))
    ratio = np.where(rhs > tiny, lhs / np.maximum(rhs, tiny), np.where(lhs <= tiny, 0.0, np.inf))
    cert.add("P* <= |g| ||h*|| + 2 g* ||h^||", 1.0, float(ratio.max(initial=0.0)),
             note=f"max lhs {float(lhs.max(initial=0.0))!r}, max rhs {float(rhs.max(initial=0.0))!r}")
    cert.add("spec(P) = spec(g) + r spec(h)", 0.0, 0.0 if P.nnz == sp.nnz else 1.0)
    return P, cert
