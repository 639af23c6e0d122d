"""Synthesis of flat correction polynomials with independent verification.

Analytic contract: spec(h) in [1, D], |h - 1| <= tau off a set of measure
below mu, and every coefficient below eta.  The classical flat contract is the
diagonal case tau = mu = eta = eps.

Two synthesizers are provided.

``compose`` (default) starts from the outer function F0 = exp(u + i u~) whose
modulus is tau' off an arc and large on it, with F0(0) = 1.  It then composes
F0 with an iterated inner map B (B(0) = 0, built from a rotation and a few
Blaschke factors).  Since B preserves arc-length measure and F0(B(0)) = 1,
h = 1 - F0(B) keeps the level-set profile of 1 - F0 and a vanishing mean,
while each composition spreads the coefficient energy over a wider band and
lowers the largest coefficient.  The h returned is the truncation to [1, D].
When a truncation is close to the contract but not inside it, the
coefficients are flattened by :func:`polish` before being offered.

``pocs`` alternates projections between the coefficient box
{supp in [1, D], |c(n)| <= 0.9 eta} and the value set
{|h - 1| <= 0.9 tau off E}, doubling D from 64.

Every result passes through :func:`verify_flat_contract` on a grid four times
finer than the synthesis grid, and nothing is returned unless it passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .errors import Infeasible, InvalidEpsilon, InvalidParams
from .sampling import rho_values
from .trigpoly import (
    TWO_PI,
    Certificate,
    TrigPoly,
    coeff_sup,
    grid_angles,
    is_power_of_two,
    next_power_of_two,
    u_norm,
)

MIN_DEGREE = 64


@dataclass(frozen=True)
class FlatContract:
    """|h - 1| <= tau off a set of measure < mu, and max |h^(n)| < eta."""

    tau: float
    mu: float
    eta: float

    @classmethod
    def flat(cls, eps: float) -> FlatContract:
        return cls(eps, eps, eps)

    @property
    def is_flat(self) -> bool:
        return self.tau == self.mu == self.eta


@dataclass(frozen=True)
class SynthesisProblem:
    kind: str = "analytic"
    eps: float | None = None
    gamma: float | None = None
    delta: float | None = None
    C_target: float = 4.0
    budget: int = 4096
    seed: int = 0
    method: str = "compose"
    exceptional: str = "arc"
    max_iters: int = 2000
    contract: FlatContract | None = None

    def resolved_contract(self) -> FlatContract:
        if self.contract is not None:
            return self.contract
        if self.kind == "analytic":
            return FlatContract.flat(self.eps)
        return FlatContract(self.delta, self.C_target * self.gamma, self.delta)


@dataclass
class SynthesisResult:
    h: TrigPoly
    certificate: Certificate
    degree: int
    details: dict = field(default_factory=dict)

    def __iter__(self):  # allows ``h, cert = synth_...(...)``
        yield self.h
        yield self.certificate


def synthesis_grid(D: int) -> int:
    return max(MIN_DEGREE, next_power_of_two(4 * D))


def _degrees(budget: int):
    D = MIN_DEGREE
    while D < budget:
        yield D
        D *= 2
    yield budget


# ----------------------------------------------------------------------
# verification


def _analytic_clauses(cert, h, contract, budget, values):
    cert.add("spec(h) in [1, D]", 0.0, 0.0 if h.is_zero or (h.lo >= 1 and h.hi <= budget) else 1.0)
    cert.add("h^(0) = 0", 0.0, abs(h.coeff(0)))
    dev = np.abs(values - 1.0)
    if contract.is_flat:
        cert.add("rho(h, 1)", contract.tau, rho_values(dev), strict=True)
    else:
        cert.add(f"m{{|h-1| > {contract.tau!r}}}", contract.mu,
                 float(np.count_nonzero(dev > contract.tau)) / dev.size, strict=True)
    cert.add("max |h^(n)|", contract.eta, coeff_sup(h), strict=True)


def _energy_clause(cert, h, values):
    energy = float(np.sum(np.abs(h.coeffs) ** 2))
    mean_sq = float(np.mean(np.abs(values) ** 2))
    cert.add("energy identity (relative)", 1e-8, abs(energy - mean_sq) / max(energy, 1e-300))


def verify_flat_contract(h: TrigPoly, problem: SynthesisProblem, grid: int | None = None) -> Certificate:
    """Check every clause of the problem's contract on a fresh, finer grid.

    The default grid is four times the synthesis grid for the larger of the
    budget and deg(h).
    """
    D = max(problem.budget, h.degree, 1)
    G = 4 * synthesis_grid(D) if grid is None else grid
    values = h.sample(G)
    cert = Certificate(grid_size=G, title=f"flat {problem.kind} contract")
    if problem.kind == "analytic":
        _analytic_clauses(cert, h, problem.resolved_contract(), problem.budget, values)
    else:
        gamma, delta = problem.gamma, problem.delta
        cert.add("h^(0) = 0", 0.0, abs(h.coeff(0)))
        cert.add("spec(h) in [-D, D]", 0.0, 0.0 if h.degree <= problem.budget else 1.0)
        cert.add("max |h^(n)|", delta, coeff_sup(h), strict=True)
        bad = float(np.count_nonzero(np.abs(values - 1.0) > delta)) / G
        cert.add("m{|h-1| > delta}", problem.C_target * gamma, bad, strict=True,
                 note=f"achieved C = {bad / gamma!r}")
        cert.add("||h||_U", 1.0 / gamma, u_norm(h))
    _energy_clause(cert, h, values)
    return cert


# ----------------------------------------------------------------------
# outer-inner composition


def outer_coefficients(tau: float, mu: float, smooth: float = 0.03, M: int = 1 << 15,
                       tol: float = 1e-14) -> np.ndarray:
    """Taylor coefficients of F0 = exp(u + i u~), |F0| = tau off an arc of measure mu.

    u is a tanh-smoothed step, log(tau) off the arc centred at 0 and a constant
    on it chosen so that mean(u) = 0, which makes F0(0) = 1.
    """
    t = grid_angles(M)
    d = np.minimum(t, TWO_PI - t)
    s = 0.5 * (1.0 + np.tanh((np.pi * mu - d) / smooth))
    low = np.log(tau)
    u = low * (1.0 - s) + (-low * np.sum(1.0 - s) / np.sum(s)) * s
    U = np.fft.fft(u) / M
    analytic = np.zeros(M, dtype=np.complex128)
    analytic[0] = U[0]
    analytic[1 : M // 2] = 2.0 * U[1 : M // 2]
    F0 = np.exp(np.fft.ifft(analytic) * M)
    C = np.fft.fft(F0)[: M // 2] / M
    keep = np.flatnonzero(np.abs(C) > tol * np.abs(C).max())
    C = C[: keep[-1] + 1].copy()
    C[0] = 1.0
    return C


def inner_parameters(seed: int, n_zeros: int = 3):
    rng = np.random.default_rng(seed)
    radii = rng.uniform(0.4, 0.65, n_zeros)
    angles = rng.uniform(0.0, TWO_PI, n_zeros)
    rotation = rng.uniform(0.3, 3.0)
    return radii * np.exp(1j * angles), float(rotation)


def _inner_step(w, zeros, rotation):
    out = np.exp(1j * rotation) * w
    for a in zeros:
        out = out * (w - a) / (1.0 - np.conj(a) * w)
    return out


def outer_table(C: np.ndarray, M: int | None = None) -> np.ndarray:
    """Boundary values of F0 and its first three angular derivatives on an M-grid."""
    M = M or max(1 << 18, next_power_of_two(4 * C.size))
    n = np.arange(C.size)
    table = np.empty((4, M), dtype=np.complex128)
    for k in range(4):
        spectrum = np.zeros(M, dtype=np.complex128)
        spectrum[: C.size] = C * (1j * n) ** k
        table[k] = np.fft.ifft(spectrum) * M
    return table


def outer_on_circle(table: np.ndarray, w: np.ndarray) -> np.ndarray:
    """F0(w) for |w| = 1 by a cubic Taylor step from the nearest table angle."""
    M = table.shape[1]
    step = TWO_PI / M
    theta = np.mod(np.angle(w), TWO_PI)
    k = np.rint(theta / step).astype(np.int64)
    d = theta - k * step
    k %= M
    return table[0, k] + d * (table[1, k] + d / 2 * (table[2, k] + d / 3 * table[3, k]))


def _contract_holds(coeffs_1D, contract: FlatContract, G: int) -> bool:
    if np.abs(coeffs_1D).max(initial=0.0) >= contract.eta:
        return False
    spectrum = np.zeros(G, dtype=np.complex128)
    spectrum[1 : coeffs_1D.size + 1] = coeffs_1D
    values = np.fft.ifft(spectrum) * G
    dev = np.abs(values - 1.0)
    if contract.is_flat:
        return rho_values(dev) < contract.tau
    return np.count_nonzero(dev > contract.tau) / G < contract.mu


def _bad_measure(coeffs_1D, tau: float, G: int) -> float:
    spectrum = np.zeros(G, dtype=np.complex128)
    spectrum[1 : coeffs_1D.size + 1] = coeffs_1D
    return float(np.count_nonzero(np.abs(np.fft.ifft(spectrum) * G - 1.0) > tau)) / G


def polish(coeffs: np.ndarray, contract: FlatContract, margin: float = 0.95,
           weights=(1e2, 1e3, 1e4), iters: int = 600) -> np.ndarray:
    """Flatten the coefficients of a near-feasible h with the exceptional set frozen.

    E is the set carrying the largest margin*mu share of |h - 1| on an 8D grid.
    With E fixed the constraints |h - 1| <= margin*tau off E and
    |c(n)| <= margin*eta are convex, and the squared-hinge penalty below is
    minimised by L-BFGS while the weight on the value constraints grows.
    """
    D = coeffs.size
    G = 8 * D
    spectrum = np.zeros(G, dtype=np.complex128)
    spectrum[1 : D + 1] = coeffs
    dev = np.abs(np.fft.ifft(spectrum) * G - 1.0)
    k = int(margin * contract.mu * G)
    off = np.ones(G, dtype=bool)
    off[np.argpartition(dev, -k)[-k:]] = False
    t2 = (margin * contract.tau) ** 2
    e2 = (margin * contract.eta) ** 2

    def objective(x, weight):
        c = x[:D] + 1j * x[D:]
        spectrum = np.zeros(G, dtype=np.complex128)
        spectrum[1 : D + 1] = c
        d = np.fft.ifft(spectrum) * G - 1.0
        q = np.where(off, np.maximum(np.abs(d) ** 2 - t2, 0.0), 0.0)
        p = np.maximum(np.abs(c) ** 2 - e2, 0.0)
        value = weight * np.sum(q * q) / G + 10.0 * np.sum(p * p)
        grad = np.fft.fft(4.0 * weight * q * d / G)[1 : D + 1] + 40.0 * p * c
        return value, np.concatenate([grad.real, grad.imag])

    x = np.concatenate([coeffs.real, coeffs.imag])
    for weight in weights:
        x = minimize(objective, x, args=(weight,), jac=True, method="L-BFGS-B",
                     options={"maxiter": iters, "maxcor": 20}).x
        c = x[:D] + 1j * x[D:]
        if _contract_holds(c, contract, 16 * D):
            break
    return x[:D] + 1j * x[D:]


def _compose_levels(table, zeros, rotation, M: int, max_levels: int):
    w = np.exp(1j * grid_angles(M))
    for level in range(1, max_levels + 1):
        w = _inner_step(w, zeros, rotation)
        yield level, np.fft.fft(outer_on_circle(table, w)) / M


def _compose(contract: FlatContract, budget: int, seed: int, max_levels: int = 8,
             use_polish: bool = True, polish_limit: int = 1 << 17):
    """Truncations of F0 o B^L, smallest degree first within each level.

    Plain truncations are tried for every level first.  Near misses are then
    polished in order of their largest coefficient (the constraint that
    polishing fixes least readily), smaller degrees first on ties.
    """
    M = max(1 << 14, next_power_of_two(4 * budget))
    table = outer_table(outer_coefficients(0.9 * contract.tau, 0.9 * contract.mu))
    zeros, rotation = inner_parameters(seed)
    near = []
    for level, spectrum in _compose_levels(table, zeros, rotation, M, max_levels):
        details = {"levels": level, "zeros": zeros, "rotation": rotation, "polished": False}
        for D in _degrees(budget):
            coeffs = -spectrum[1 : D + 1]
            G = synthesis_grid(D)
            if _contract_holds(coeffs, contract, G):
                yield TrigPoly(np.arange(1, D + 1), coeffs), D, details
                continue
            top = float(np.abs(coeffs).max())
            if (use_polish and 1024 <= D <= polish_limit and top < 4 * contract.eta
                    and _bad_measure(coeffs, contract.tau, G) < contract.mu + 0.25):
                near.append((top, D, level, coeffs.copy(), details))
    near.sort(key=lambda item: item[:3])
    for _, D, _, coeffs, details in near:
        c = polish(coeffs, contract)
        if _contract_holds(c, contract, synthesis_grid(D)):
            yield TrigPoly(np.arange(1, D + 1), c), D, {**details, "polished": True}


# ----------------------------------------------------------------------
# alternating projections


def exceptional_mask(G: int, measure: float, kind: str, seed: int) -> np.ndarray:
    """Exceptional set E: one arc centred at 0, or 16 seeded arcs ("scattered")."""
    count = max(1, int(round(measure * G)))
    mask = np.zeros(G, dtype=bool)
    if kind == "arc":
        idx = (np.arange(count) - count // 2) % G
        mask[idx] = True
        return mask
    if kind == "scattered":
        rng = np.random.default_rng(seed)
        pieces = 16
        starts = np.sort(rng.choice(G, pieces, replace=False))
        width = max(1, count // pieces)
        for s in starts:
            mask[(s + np.arange(width)) % G] = True
        return mask
    raise InvalidParams(f"unknown exceptional set kind {kind!r}")


class _Projections:
    def __init__(self, G, lo, hi, eta, tau, mask):
        self.G, self.lo, self.hi = G, lo, hi
        self.eta, self.tau, self.free = eta, tau, mask
        n = np.fft.fftfreq(G, 1.0 / G).astype(np.int64)
        self.support = (n >= lo) & (n <= hi) & (n != 0)

    def coefficients(self, x):
        c = np.fft.fft(x) / self.G
        c[~self.support] = 0.0
        mag = np.abs(c)
        over = mag > self.eta
        c[over] *= self.eta / mag[over]
        return np.fft.ifft(c) * self.G, c

    def values(self, x):
        y = x.copy()
        fixed = ~self.free
        dev = y[fixed] - 1.0
        mag = np.abs(dev)
        over = mag > self.tau
        dev[over] *= self.tau / mag[over]
        y[fixed] = 1.0 + dev
        return y


def _pocs_run(proj: _Projections, x, max_iters, check, check_every=25):
    """Alternate projections; returns (coefficients, gap history, monotone flag)."""
    gaps = []
    monotone = True
    c = None
    for it in range(max_iters):
        a, c = proj.coefficients(x)
        b = proj.values(a)
        gap = float(np.linalg.norm(a - b) / np.sqrt(proj.G))
        if gaps and gap > gaps[-1] * (1 + 1e-9) + 1e-15:
            monotone = False
        gaps.append(gap)
        if it % check_every == 0 and check(c):
            return c, gaps, monotone
        x = b
    return c, gaps, monotone


def _initial_iterate(proj: _Projections, seed: int):
    rng = np.random.default_rng(seed)
    noise = rng.normal(size=proj.G) + 1j * rng.normal(size=proj.G)
    x0, _ = proj.coefficients(1.0 + 0.1 * noise)
    return x0


def _pocs(contract, budget, seed, max_iters, exceptional, two_sided=False):
    for D in _degrees(budget):
        G = synthesis_grid(D)
        mask = exceptional_mask(G, 0.9 * contract.mu, exceptional, seed)
        lo = -D if two_sided else 1
        proj = _Projections(G, lo, D, 0.9 * contract.eta, 0.9 * contract.tau, mask)
        n = np.fft.fftfreq(G, 1.0 / G).astype(np.int64)

        def to_poly(c):
            sel = proj.support
            return TrigPoly(n[sel], c[sel])

        def check(c):
            h = to_poly(c)
            vals = h.sample(G)
            dev = np.abs(vals - 1.0)
            if coeff_sup(h) >= contract.eta:
                return False
            if contract.is_flat and not two_sided:
                return rho_values(dev) < contract.tau
            return np.count_nonzero(dev > contract.tau) / G < contract.mu

        c, gaps, monotone = _pocs_run(proj, _initial_iterate(proj, seed), max_iters, check)
        yield to_poly(c), D, {"iterations": len(gaps), "final_gap": gaps[-1],
                              "gap_monotone": monotone}


# ----------------------------------------------------------------------
# public entry points


def _check_budget(budget):
    if not is_power_of_two(budget) or budget < 1:
        raise InvalidParams(f"degree budget must be a power of two, got {budget}")


def synth_flat_analytic(eps: float | None = None, budget: int = 4096, seed: int = 0, *,
                        contract: FlatContract | None = None, method: str = "compose",
                        exceptional: str = "arc", max_iters: int = 2000) -> SynthesisResult:
    """Analytic flat polynomial meeting ``contract`` (default: the flat contract at eps).

    Returns a :class:`SynthesisResult`, which also unpacks as ``(h, certificate)``.
    """
    if contract is None:
        if eps is None or not 0 < eps < 2:
            raise InvalidEpsilon(f"eps must lie in (0, 2), got {eps}")
        contract = FlatContract.flat(eps)
    elif min(contract.tau, contract.mu, contract.eta) <= 0:
        raise InvalidParams("contract parameters must be positive")
    _check_budget(budget)
    problem = SynthesisProblem("analytic", eps=eps, budget=budget, seed=seed, method=method,
                               exceptional=exceptional, max_iters=max_iters, contract=contract)
    if method == "compose":
        candidates = _compose(contract, budget, seed)
    elif method == "pocs":
        candidates = _pocs(contract, budget, seed, max_iters, exceptional)
    else:
        raise InvalidParams(f"unknown synthesis method {method!r}")
    for h, D, details in candidates:
        cert = verify_flat_contract(h, replace(problem, budget=D))
        if cert.passed:
            cert.title += f" (method {method}, degree {D})"
            return SynthesisResult(h, cert, D, {"method": method, **details})
    raise Infeasible(f"no polynomial of degree <= {budget} met the contract {contract}",
                     largest_degree=budget)


def synth_flat_bilateral(gamma: float, delta: float, C_target: float = 4.0, budget: int = 1024,
                         seed: int = 0, *, max_iters: int = 2000,
                         exceptional: str = "scattered") -> SynthesisResult:
    """Two-sided flat polynomial: h^(0) = 0, ||h^|| < delta, m{|h-1| > delta} < C gamma, ||h||_U <= 1/gamma.

    The exceptional set starts at measure min(gamma, 0.9) and is enlarged while
    the U-norm clause fails (a larger set lowers the spike height that the
    partial sums have to carry).
    """
    if not (0 < gamma < 1 and 0 < delta < 1 and C_target > 0):
        raise InvalidParams("need 0 < gamma, delta < 1 and C_target > 0")
    _check_budget(budget)
    problem = SynthesisProblem("bilateral", gamma=gamma, delta=delta, C_target=C_target,
                               budget=budget, seed=seed, exceptional=exceptional,
                               max_iters=max_iters)
    target = min(C_target * gamma, 1.0)
    for frac in (0.4, 0.55, 0.7, 0.85):
        measure = frac * target
        contract = FlatContract(delta, measure / 0.9, delta)
        for h, D, details in _pocs(contract, budget, seed, max_iters, exceptional, two_sided=True):
            cert = verify_flat_contract(h, replace(problem, budget=D))
            if cert.passed:
                cert.title += f" (degree {D})"
                return SynthesisResult(h, cert, D, {"exceptional_measure": measure, **details})
    raise Infeasible("bilateral synthesis exhausted its budget", largest_degree=budget)
