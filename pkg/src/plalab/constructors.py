"""Indicator polynomials, step polynomials and (P, Q) pairs.

Every constructor builds P as one special product g * h_[r]: g is a smoothed
step (a partial Fourier sum of the step convolved with a narrow box), h is a
flat analytic polynomial and r is odd and exceeds 3 deg(g).  The contract
handed to the synthesizer is derived from the clauses the certificate must
establish, and the certificate then checks those clauses on the final object:
values and measures on the grid, and maximal-function clauses through the
special-product envelope |g| ||h*|| + 2 g* ||h^||.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ClippingInfeasible, Infeasible, InvalidDelta, TargetUnreachable
from .sampling import (
    Arc,
    SampledFunction,
    StepFunction,
    mask_runs,
    rho,
    rho_on,
    rho_values,
    trapezoid_indicator,
    trapezoid_tail_bound,
    truncation_degree,
)
from .synth import (
    FlatContract,
    SynthesisResult,
    synth_flat_analytic,
    synth_flat_bilateral,
)
from .trigpoly import (
    TWO_PI,
    Certificate,
    SpecialProduct,
    TrigPoly,
    coeff_sup,
    hstar_sup_for,
    maximal_on_grid,
    maximal_sup,
    smallest_dilation,
    sup_norm,
    u_norm,
)

PROVISIONAL_DEGREE = 256
# Tail bound (per unit of step height) of the partial sum used to size eta.
PROVISIONAL_TAIL = 0.02
# Fraction of a measure budget kept back for grid effects.
MEASURE_MARGIN = 0.04
# Largest partial-sum degree a smoothed step may need before the
# construction is reported infeasible instead of attempted.
MAX_STEP_DEGREE = 1 << 22


@dataclass
class Construction:
    """A constructed analytic polynomial in factored form with its certificate."""

    P: SpecialProduct | None
    certificate: Certificate
    flat: SynthesisResult | None = None
    hstar: float = 0.0
    details: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.P
        yield self.certificate

    def sample(self, G: int) -> np.ndarray:
        return np.zeros(G, dtype=np.complex128) if self.P is None else self.P.sample(G)

    def is_analytic(self) -> bool:
        return self.P is None or self.P.is_analytic()


@dataclass
class PQPair:
    P: Construction
    Q: TrigPoly | SpecialProduct
    certificate: Certificate
    details: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.P
        yield self.Q
        yield self.certificate

    def sample_Q(self, G: int) -> np.ndarray:
        return self.Q.sample(G)


def _spec_clause(cert: Certificate, P: SpecialProduct | None) -> None:
    lowest = 0 if P is None or P.is_zero else P.lo
    cert.add("(1) spec(P) in [0, inf)", 0.0, float(max(0, -lowest)),
             note=f"lowest frequency {lowest}")


def _smoothed_step(step: StepFunction, ramp: float, N: int) -> TrigPoly:
    """Partial sum of step * box_ramp; for one arc this is the trapezoid."""
    F = step.fourier(N)
    x = F.freqs * ramp / 2.0
    damp = np.where(x == 0, 1.0, np.sin(x) / np.where(x == 0, 1.0, x))
    return TrigPoly(F.freqs, F.coeffs * damp)


def _flat_factor(contract: FlatContract, budget: int, seed: int, grid: int):
    result = synth_flat_analytic(contract=contract, budget=budget, seed=seed)
    return result, hstar_sup_for(result.h, grid)


def _zero_construction(title: str, grid: int, clause_names) -> Construction:
    cert = Certificate(grid_size=grid, title=title)
    _spec_clause(cert, None)
    for name, bound in clause_names:
        cert.add(name, bound, 0.0, strict=True)
    return Construction(None, cert)


def _hstar(P: SpecialProduct, G: int, hstar: float | None) -> float:
    return hstar_sup_for(P.h, G) if hstar is None else hstar


def certify_indicator(P: SpecialProduct | None, I: Arc, delta: float, grid: int,
                      hstar: float | None = None) -> Certificate:
    """Clauses (1)-(3) for an indicator polynomial, recomputed from P alone."""
    cert = Certificate(grid_size=grid, title="indicator polynomial")
    _spec_clause(cert, P)
    target = SampledFunction(grid, I.grid_mask(grid).astype(float))
    values = np.zeros(grid, dtype=np.complex128) if P is None else P.sample(grid)
    cert.add("(2) rho(P, 1_I)", delta, rho(SampledFunction(grid, values), target), strict=True)
    off = np.flatnonzero(~I.neighborhood(delta).grid_mask(grid))
    env = 0.0
    if P is not None and not P.is_zero:
        env = float(P.envelope_on_grid(grid, off, _hstar(P, grid, hstar)).max(initial=0.0))
    cert.add("(3) P* off I_delta", delta, env, strict=True,
             note="bounded by |g| ||h*|| + 2 g* ||h^||")
    return cert


def _pstar_on(P: SpecialProduct | None, U, G: int, hstar: float | None) -> float:
    """Envelope bound for rho(P* 1_U, 0)."""
    js = np.flatnonzero(U)
    if P is None or P.is_zero or js.size == 0:
        return 0.0
    env = np.zeros(G)
    env[js] = P.envelope_on_grid(G, js, _hstar(P, G, hstar))
    return rho_values(env)


def certify_step(P: SpecialProduct | None, phi: StepFunction, U, delta: float, grid: int,
                 hstar: float | None = None) -> Certificate:
    """Clauses (1), (4), (5) for a step polynomial."""
    cert = Certificate(grid_size=grid, title="step polynomial")
    _spec_clause(cert, P)
    values = np.zeros(grid, dtype=np.complex128) if P is None else P.sample(grid)
    cert.add("(4) rho(P, phi)", delta, rho(SampledFunction(grid, values), phi.sample(grid)),
             strict=True)
    cert.add("(5) rho(P* 1_U, 0)", delta, _pstar_on(P, U, grid, hstar), strict=True,
             note="P* bounded by |g| ||h*|| + 2 g* ||h^|| on U")
    return cert


def certify_pq(P: SpecialProduct | None, Q: TrigPoly, psi: StepFunction, U, a: float,
               delta: float, grid: int, hstar: float | None = None) -> Certificate:
    """Clauses (1), (5), (6), (7) for a (P, Q) pair."""
    cert = Certificate(grid_size=grid, title="PQ pair")
    _spec_clause(cert, P)
    cert.add("(5) rho(P* 1_U, 0)", delta, _pstar_on(P, U, grid, hstar), strict=True)
    values = Q.sample(grid) + (0.0 if P is None else P.sample(grid))
    cert.add("(6) rho(P + Q, psi)", delta, rho(SampledFunction(grid, values), psi.sample(grid)),
             strict=True)
    cert.add("(7) ||Q||_inf", a, sup_norm(Q), strict=True)
    return cert


# ----------------------------------------------------------------------
# indicator polynomial


def indicator_polynomial(I: Arc, delta: float, *, seed: int = 0, budget: int = 1 << 16,
                         grid: int = 8192, ramp: float | None = None) -> Construction:
    """Analytic P with rho(P, 1_I) < delta and P* < delta outside the delta-neighbourhood of I."""
    if not 0 < delta < 1:
        raise InvalidDelta(f"delta must lie in (0, 1), got {delta}")
    title = "indicator polynomial"
    names = [("(2) rho(P, 1_I)", delta), ("(3) P* off I_delta", delta)]
    if I.is_empty:
        return _zero_construction(title, grid, names)
    ramp = delta / 4 if ramp is None else ramp
    off = ~I.neighborhood(delta).grid_mask(grid)
    js = np.flatnonzero(off)

    # Size the coefficient bound from a provisional partial sum:
    # g*_N <= g*_N0 + tail(N0) pointwise for N >= N0.
    step = StepFunction.indicator(I)
    g0 = _smoothed_step(step, ramp, PROVISIONAL_DEGREE)
    g0star = float(maximal_on_grid(g0, grid, js).max(initial=0.0))
    gstar_bound = g0star + trapezoid_tail_bound(ramp, PROVISIONAL_DEGREE)

    level = (1 - MEASURE_MARGIN) * delta
    ramp_measure = 1.5 * ramp / np.pi
    mu = min(0.9, (level - ramp_measure - 4.0 / grid) / I.measure)
    if mu <= 0.02:
        raise Infeasible(f"arc too long for delta = {delta}: no measure left for the flat factor")
    contract = FlatContract(tau=0.9 * level, mu=mu, eta=0.85 * delta / (2 * gstar_bound))
    flat, hstar = _flat_factor(contract, budget, seed, grid)
    h = flat.h

    g, g_cert = trapezoid_indicator(I, delta, hstar, ramp=ramp, off_target=0.1 * delta / hstar,
                                    grid=grid)
    r = smallest_dilation(g.degree)
    P = SpecialProduct(g, h, r)

    cert = certify_indicator(P, I, delta, grid, hstar)
    cert.extend(g_cert, "g: ")
    cert.extend(flat.certificate, "h: ")
    details = {"r": r, "deg_g": g.degree, "deg_h": h.degree, "hstar": hstar,
               "contract": contract, "ramp": ramp}
    return Construction(P, cert, flat, hstar, details)


# ----------------------------------------------------------------------
# step polynomial


def _endpoint_count(step: StepFunction) -> int:
    vals = step.values
    if vals.size == 1:
        return 0
    return int(np.count_nonzero(vals != np.roll(vals, 1)))


def step_polynomial(phi: StepFunction, U, delta: float, *, seed: int = 0,
                    budget: int = 1 << 16, grid: int | None = None,
                    ramp: float | None = None) -> Construction:
    """Analytic P with rho(P, phi) < delta and rho(P* 1_U, 0) < delta, where phi = 0 on U.

    All arcs share one flat factor and one dilation, so P = (sum v_j g_j) h_[r]
    is a single special product.
    """
    if not 0 < delta < 1:
        raise InvalidDelta(f"delta must lie in (0, 1), got {delta}")
    U = np.asarray(U, dtype=bool)
    G = U.size if grid is None else grid
    if U.size != G:
        raise ValueError("U must be a mask on the construction grid")
    phi_s = phi.sample(G)
    if np.any(phi_s.values[U] != 0):
        raise ValueError("phi must vanish on U")
    title = "step polynomial"
    names = [("(4) rho(P, phi)", delta), ("(5) rho(P* 1_U, 0)", delta)]
    if not np.any(phi_s.values != 0):
        return _zero_construction(title, G, names)

    ends = max(_endpoint_count(phi), 1)
    ramp = min(delta / 16, TWO_PI * delta / (32 * ends)) if ramp is None else ramp
    support = float(np.count_nonzero(phi_s.values)) / G
    vmax = float(np.abs(phi.values).max())
    js = np.flatnonzero(U)

    level = (1 - MEASURE_MARGIN) * delta
    ramp_measure = 1.2 * ends * ramp / TWO_PI
    mu = min(0.9, (level - ramp_measure - 4.0 / G) / support)
    if mu <= 0.02:
        raise Infeasible(f"support of phi too large for delta = {delta}")

    # On U the clause is a measure clause, so the coefficient bound is sized
    # from a quantile of g* rather than its maximum.
    total = float(np.abs(phi.values).sum())
    # ||h*|| >= 1 for any admissible h, which bounds the final degree from below.
    if truncation_degree(ramp, 0.05 * level / max(total, 1.0)) > MAX_STEP_DEGREE:
        raise Infeasible(f"smoothed step would need degree > {MAX_STEP_DEGREE}",
                         largest_degree=MAX_STEP_DEGREE)
    N0 = max(PROVISIONAL_DEGREE, truncation_degree(ramp, PROVISIONAL_TAIL))
    g0 = _smoothed_step(phi, ramp, N0)
    tail0 = trapezoid_tail_bound(ramp, N0) * total
    if js.size:
        g0star = maximal_on_grid(g0, G, js)
        allowed = int(0.5 * level * G)
        ranked = np.sort(g0star)[::-1]
        gstar_bound = float(ranked[min(allowed, ranked.size - 1)]) + tail0
    else:
        gstar_bound = vmax
    contract = FlatContract(tau=0.9 * level / vmax, mu=mu,
                            eta=0.85 * level / (2 * max(gstar_bound, 1e-12)))
    flat, hstar = _flat_factor(contract, budget, seed, G)
    h = flat.h

    tail_target = 0.05 * level / (hstar * max(total, 1.0))
    N = max(N0, truncation_degree(ramp, tail_target))
    if N > MAX_STEP_DEGREE:
        raise Infeasible(f"smoothed step would need degree {N} > {MAX_STEP_DEGREE}",
                         largest_degree=MAX_STEP_DEGREE)
    g = _smoothed_step(phi, ramp, N)
    r = smallest_dilation(g.degree)
    P = SpecialProduct(g, h, r)

    cert = certify_step(P, phi, U, delta, G, hstar)
    cert.extend(flat.certificate, "h: ")
    details = {"r": r, "deg_g": g.degree, "deg_h": h.degree, "hstar": hstar,
               "contract": contract, "ramp": ramp, "arcs": phi.n_arcs}
    return Construction(P, cert, flat, hstar, details)


# ----------------------------------------------------------------------
# (P, Q) pairs


def _fejer_corrector(psi: StepFunction, a: float, U, G: int, target: float, max_degree: int):
    """Fejer mean of psi clipped to 0.99a, with rho((Q - psi) 1_U, 0) < target.

    Degrees 0, 1, 2, 4, ... are tried.  The first degree that meets the target
    is accepted only if it also reaches target/8; otherwise doubling continues
    (up to ``max_degree``) and the best degree that met the target is kept.
    Whatever Q leaves on U is lost from the accuracy handed to P.
    """
    clipped = psi.clipped(0.99 * a)
    psi_s = psi.sample(G)
    best = None
    N = 0
    while N <= max_degree:
        Q = clipped.fejer_mean(N)
        err = rho_on(SampledFunction(G, Q.sample(G)), psi_s, U)
        if err < target and (best is None or err < best[2]):
            best = (Q, N, err)
        if err < target / 8:
            break
        N = 1 if N == 0 else 2 * N
    if best is None:
        raise TargetUnreachable(f"no Fejer mean of degree <= {max_degree} is within {target} on U")
    return best


def vanishing_step(residual: SampledFunction, U, K: int) -> StepFunction:
    """Step function on K equal arcs refined by the runs of U, zero on U.

    Off U each piece takes the residual at the grid point in its middle.
    """
    G = residual.G
    U = np.asarray(U, dtype=bool)
    cuts = set(range(0, G, G // K))
    for start, stop in mask_runs(U):
        cuts.add(start % G)
        cuts.add(stop % G)
    cuts = sorted(cuts)
    values = []
    for i, b in enumerate(cuts):
        e = cuts[i + 1] if i + 1 < len(cuts) else cuts[0] + G
        mid = ((b + e - 1) // 2) % G
        values.append(0.0 if U[b % G] else residual.values[mid])
    return StepFunction(TWO_PI * np.asarray(cuts) / G, values)


def pq_pair(psi: StepFunction, U, a: float, delta: float, *, seed: int = 0,
            budget: int = 1 << 16, grid: int | None = None) -> PQPair:
    """Analytic P and small Q with rho(P + Q, psi) < delta, ||Q|| < a, rho(P* 1_U, 0) < delta."""
    if not 0 < delta < 1:
        raise InvalidDelta(f"delta must lie in (0, 1), got {delta}")
    U = np.asarray(U, dtype=bool)
    G = U.size if grid is None else grid
    psi_s = psi.sample(G)
    if np.any(np.abs(psi_s.values[U]) >= a):
        raise ClippingInfeasible(f"|psi| >= a = {a} on part of U")

    Q, fejer_degree, q_rho = _fejer_corrector(psi, a, U, G, delta / 3, min(G // 2, 4096))
    Q_s = SampledFunction(G, Q.sample(G))
    residual = psi_s - Q_s

    if U.all():
        phi = StepFunction.constant(0.0)
        phi_rho = rho(phi.sample(G), residual)
    else:
        # Refine until phi is within delta/24 of the floor set by Q on U.
        best = None
        K = 1
        while K <= G // 4:
            phi = vanishing_step(residual, U, K)
            phi_rho = rho(phi.sample(G), residual)
            if phi_rho < 2 * delta / 3 and (best is None or phi_rho < best[1]):
                best = (phi, phi_rho)
            if phi_rho < q_rho + delta / 24:
                break
            K *= 2
        if best is None:
            raise TargetUnreachable("no vanishing step function reaches 2 delta / 3")
        phi, phi_rho = best
    inner_delta = 0.98 * (delta - phi_rho)
    P = step_polynomial(phi, U, inner_delta, seed=seed, budget=budget, grid=G)

    cert = certify_pq(P.P, Q, psi, U, a, delta, G, P.hstar)
    q_sup = cert.clause("(7) ||Q||_inf").measured
    # Fejer means of a function bounded by 0.99a stay below 0.99a; the factor
    # absorbs rounding in the sampled maximum.
    cert.add("Fejer bound ||Q|| <= 0.99 a", 0.99 * a * (1 + 1e-12), q_sup)
    cert.add("rho((Q - psi) 1_U, 0)", delta / 3, q_rho, strict=True)
    cert.add("rho(phi, psi - Q)", 2 * delta / 3, phi_rho, strict=True)
    cert.extend(P.certificate, "P: ")
    details = {"fejer_degree": fejer_degree, "phi_arcs": phi.n_arcs, "inner_delta": inner_delta}
    return PQPair(P, Q, cert, details)


def pq_pair_u(psi: StepFunction, U, a: float, gamma: float, delta: float, C_target: float = 4.0,
              *, inner_delta: float | None = None, flat_delta: float | None = None,
              seed: int = 0, budget: int = 1 << 16, flat_budget: int = 1024,
              grid: int | None = None, direct_limit: int = 8192) -> PQPair:
    """(P, Q') with Q' = Q h_[r] for a bilateral flat h: measure-type residual, U-norm bound on Q'.

    ``inner_delta`` is the delta handed to :func:`pq_pair` (default delta/2)
    and ``flat_delta`` the coefficient level of the bilateral factor (default
    delta/2).  ||Q'||_U is computed exactly when deg Q' <= ``direct_limit`` and
    otherwise bounded by ||Q|| ||h*|| + 2 ||Q*|| ||h^||.
    """
    if not 0 < gamma < 1:
        raise InvalidDelta(f"gamma must lie in (0, 1), got {gamma}")
    U = np.asarray(U, dtype=bool)
    G = U.size if grid is None else grid
    inner_delta = delta / 2 if inner_delta is None else inner_delta
    flat_delta = delta / 2 if flat_delta is None else flat_delta
    base = pq_pair(psi, U, a, inner_delta, seed=seed, budget=budget, grid=G)
    Q = base.Q
    cert = Certificate(grid_size=G, title="PQ pair, U-norm variant")
    _spec_clause(cert, base.P.P)
    cert.add("(5) rho(P* 1_U, 0)", delta,
             base.certificate.clause("(5) rho(P* 1_U, 0)").measured, strict=True)
    psi_s = psi.sample(G).values
    if Q.is_zero:
        Qp = SpecialProduct(Q, TrigPoly.monomial(0), 1, check=False)
        flat = None
        u_value = 0.0
        method = "zero"
    else:
        flat = synth_flat_bilateral(gamma, flat_delta, C_target, budget=flat_budget, seed=seed)
        r = smallest_dilation(Q.degree)
        Qp = SpecialProduct(Q, flat.h, r)
        if Qp.degree <= direct_limit:
            u_value = u_norm(Qp.expand())
            method = "direct"
        else:
            u_value = sup_norm(Q) * maximal_sup(flat.h) + 2 * maximal_sup(Q) * coeff_sup(flat.h)
            method = "envelope"
    residual = np.abs(base.P.sample(G) + Qp.sample(G) - psi_s)
    bad = float(np.count_nonzero(residual > delta)) / G
    cert.add("(6') m{|P + Q' - psi| > delta} / gamma", C_target, bad / gamma, strict=True,
             note=f"achieved C = {bad / gamma!r}")
    cert.add("(7') ||Q'||_U", a / gamma, u_value, strict=True, note=f"computed {method}")
    if flat is not None:
        cert.extend(flat.certificate, "h: ")
    details = {"achieved_C": bad / gamma, "u_norm": u_value, "u_method": method, **base.details}
    return PQPair(base.P, Qp, cert, details)
