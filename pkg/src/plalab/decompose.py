"""Inductive decomposition f ~ sum (P_k + Q_k) with analytic P_k and small Q_k.

Round n works on the residual f_n = f - sum_{k<n} (P_k + Q_k):

* S_n is a step function on equal arcs with rho(S_n, f_n) < 4^-n / 2,
* U_n = {|S_n| < a_n} on the grid, where a_n = eps 2^-n,
* (P_n, Q_n) is a PQ pair for psi = S_n at level a_n and accuracy
  0.98 (4^-n - rho(S_n, f_n)).

The pair receives whatever S_n leaves of the round budget, so
rho(f, sum_{k<=n}) < 4^-n follows from the triangle inequality for rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constructors import Construction, PQPair, pq_pair, pq_pair_u
from .errors import ClippingInfeasible, Infeasible, RoundInfeasible, TargetUnreachable
from .sampling import SampledFunction, StepFunction, rho, rho_values, step_approximate
from .trigpoly import Certificate, SpecialProduct, TrigPoly, sup_norm, u_norm


@dataclass
class RoundRecord:
    n: int
    S: StepFunction
    U: np.ndarray
    P: Construction
    Q: TrigPoly | SpecialProduct
    residual_rho: float
    q_norm: float
    pstar_u_rho: float
    u_complement: float
    certificate: Certificate
    diagnostics: dict = field(default_factory=dict)

    def sample(self, G: int) -> np.ndarray:
        return self.P.sample(G) + self.Q.sample(G)


@dataclass
class DecompositionReport:
    f: SampledFunction
    eps: float
    kind: str = "pla"
    gamma: float | None = None
    rounds: list[RoundRecord] = field(default_factory=list)
    certificate: Certificate = field(default_factory=Certificate)
    failure: str | None = None

    @property
    def G(self) -> int:
        return self.f.G

    @property
    def complete(self) -> bool:
        return self.failure is None

    def partial_sum(self, n: int | None = None) -> np.ndarray:
        """Grid samples of sum_{k<=n} (P_k + Q_k)."""
        total = np.zeros(self.G, dtype=np.complex128)
        for rec in self.rounds[: len(self.rounds) if n is None else n]:
            total += rec.sample(self.G)
        return total

    def q_sum(self) -> TrigPoly:
        """h = sum of the correctors (expanded; each one is a low-degree polynomial)."""
        total = TrigPoly.zero()
        for rec in self.rounds:
            Q = rec.Q.expand() if isinstance(rec.Q, SpecialProduct) else rec.Q
            total = total + Q
        return total

    def analytic_factors(self) -> list[SpecialProduct]:
        """The analytic prefix sum_k P_k, kept as a list of special products."""
        return [rec.P.P for rec in self.rounds if rec.P.P is not None]


def _level(eps: float, n: int) -> float:
    return eps * 2.0**-n


def _round_certificate(report: DecompositionReport, rec_n: int, P: Construction, Q, U,
                       total: np.ndarray) -> tuple[Certificate, dict]:
    eps, G = report.eps, report.G
    delta = 4.0**-rec_n
    a = _level(eps, rec_n)
    cert = Certificate(grid_size=G, title=f"round {rec_n}")
    cert.add("(i) rho(f, sum_{k<=n} (P_k + Q_k))", delta,
             rho(report.f, SampledFunction(G, total)), strict=True)
    lowest = 0 if P.P is None or P.P.is_zero else P.P.lo
    cert.add("(ii) spec(P_n) in [0, inf)", 0.0, float(max(0, -lowest)),
             note=f"lowest frequency {lowest}")
    if report.kind == "pla":
        cert.add("(iii) ||Q_n||_inf", a, sup_norm(Q), strict=True)
    u_meas = 1.0 - float(np.count_nonzero(U)) / G
    if a < 4.0 ** (-rec_n + 1):
        cert.add("m(U_n^c)", 4.0 ** (-rec_n + 2), u_meas, strict=True)
    return cert, {"u_complement": u_meas}


def _pstar_diagnostics(P: Construction, U: np.ndarray, G: int, n: int) -> dict:
    """Envelope bounds for rho(P_n* 1_U, 0) and for rho(P_n*, 0) over the whole circle.

    Off U the envelope uses g* <= ||g^||_1, which avoids a second maximal
    function pass over the support of the step.
    """
    if P.P is None or P.P.is_zero:
        return {"pstar_u_rho": 0.0, "pstar_rho": 0.0, "pstar_rho_target": 2.0**-n}
    js = np.flatnonzero(U)
    env = np.zeros(G)
    if js.size:
        env[js] = P.P.envelope_on_grid(G, js, P.hstar)
    pstar_u = rho_values(env)
    off = np.flatnonzero(~U)
    if off.size:
        l1 = np.full(off.size, float(np.abs(P.P.g.coeffs).sum()))
        env[off] = P.P.envelope_on_grid(G, off, P.hstar, gstar=l1)
    return {"pstar_u_rho": pstar_u, "pstar_rho": rho_values(env), "pstar_rho_target": 2.0**-n}


def _run(f: SampledFunction, eps: float, rounds: int, kind: str, gamma: float | None,
         seed: int, budget: int, flat_budget: int, C_target: float) -> DecompositionReport:
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not 1 <= rounds <= 8:
        raise ValueError("rounds must lie in 1..8")
    G = f.G
    report = DecompositionReport(f=f, eps=eps, kind=kind, gamma=gamma)
    report.certificate = Certificate(grid_size=G, title=f"{kind} decomposition")
    total = np.zeros(G, dtype=np.complex128)
    for n in range(1, rounds + 1):
        delta = 4.0**-n
        a = _level(eps, n)
        residual = SampledFunction(G, f.values - total)
        stage = "S_n"
        try:
            S = step_approximate(residual, delta / 2)
            S_s = S.sample(G)
            U = np.abs(S_s.values) < a
            pair_delta = 0.98 * (delta - rho(S_s, residual))
            stage = "PQ pair"
            if kind == "pla":
                pair: PQPair = pq_pair(S, U, a, pair_delta, seed=seed + n, budget=budget, grid=G)
            else:
                pair = pq_pair_u(S, U, a, gamma, pair_delta, C_target, seed=seed + n,
                                 budget=budget, flat_budget=flat_budget, grid=G)
        except (TargetUnreachable, Infeasible, ClippingInfeasible) as exc:
            report.failure = f"round {n}: {stage}: {exc}"
            report.certificate.add(f"round {n} constructed", 0.0, 1.0, note=str(exc))
            raise RoundInfeasible(report.failure, n, stage, report) from exc
        P, Q = pair.P, pair.Q
        total = total + P.sample(G) + Q.sample(G)
        cert, diag = _round_certificate(report, n, P, Q, U, total)
        diag.update(_pstar_diagnostics(P, U, G, n))
        cert.add("rho(P_n* 1_U, 0)", delta, diag["pstar_u_rho"], strict=True,
                 note="envelope bound")
        if kind == "pla":
            q_norm = cert.clause("(iii) ||Q_n||_inf").measured
        else:
            q_norm = pair.certificate.clause("(7') ||Q'||_U").measured
            cert.add("(iii') ||Q_n||_U", a / gamma, q_norm, strict=True)
            bad = float(np.count_nonzero(np.abs(f.values - total) > delta)) / G
            cert.add("m{|f - sum_{k<=n}| > 4^-n} / gamma", C_target, bad / gamma, strict=True,
                     note=f"achieved C = {bad / gamma!r}")
            diag["achieved_C"] = pair.details["achieved_C"]
        cert.extend(pair.certificate, "pair: ")
        rec = RoundRecord(n, S, U, P, Q, cert.clauses[0].measured, q_norm, diag["pstar_u_rho"],
                          diag["u_complement"], cert, diag)
        report.rounds.append(rec)
        report.certificate.extend(cert, f"round {n}: ")
        if not cert.passed:
            report.failure = f"round {n}: " + ", ".join(c.name for c in cert.failing())
            raise RoundInfeasible(report.failure, n, cert.failing()[0].name, report)
    _final_clauses(report)
    return report


def _final_clauses(report: DecompositionReport) -> None:
    h = report.q_sum()
    if report.kind == "pla":
        report.certificate.add("||sum Q_k||_inf", report.eps, sup_norm(h), strict=True)
    else:
        bound = report.eps / report.gamma
        measured = u_norm(h) if h.degree <= 8192 else sum(r.q_norm for r in report.rounds)
        report.certificate.add("||sum Q_k||_U", bound, measured, strict=True)


def pla_decompose(f: SampledFunction, eps: float, rounds: int, *, seed: int = 0,
                  budget: int = 1 << 18) -> DecompositionReport:
    """Run ``rounds`` rounds; raises RoundInfeasible (with the partial report) on failure."""
    return _run(f, eps, rounds, "pla", None, seed, budget, 0, 4.0)


def menshov_decompose(f: SampledFunction, eps: float, gamma: float, rounds: int, *,
                      C_target: float = 4.0, seed: int = 0, budget: int = 1 << 18,
                      flat_budget: int = 1024) -> DecompositionReport:
    """Variant whose correctors are bounded in U-norm (a_n / gamma per round)."""
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    return _run(f, eps, rounds, "menshov", gamma, seed, budget, flat_budget, C_target)


def verify_round(report: DecompositionReport, n: int) -> Certificate:
    """Re-check clauses (i)-(iii) of round n from the stored polynomials alone."""
    if not 1 <= n <= len(report.rounds):
        raise IndexError(f"report has {len(report.rounds)} rounds")
    rec = report.rounds[n - 1]
    G = report.G
    total = np.zeros(G, dtype=np.complex128)
    for r in report.rounds[:n]:
        total += r.sample(G)
    cert = Certificate(grid_size=G, title=f"re-verified round {n}")
    cert.add("(i) rho(f, sum_{k<=n} (P_k + Q_k))", 4.0**-n,
             rho(report.f, SampledFunction(G, total)), strict=True)
    P = rec.P.P
    lowest = 0 if P is None or P.is_zero else P.lo
    cert.add("(ii) spec(P_n) in [0, inf)", 0.0, float(max(0, -lowest)))
    a = _level(report.eps, n)
    if report.kind == "pla":
        cert.add("(iii) ||Q_n||_inf", a, sup_norm(rec.Q), strict=True)
    else:
        Q = rec.Q
        value = u_norm(Q.expand()) if isinstance(Q, SpecialProduct) and Q.degree <= 8192 else rec.q_norm
        cert.add("(iii') ||Q_n||_U", a / report.gamma, value, strict=True)
    return cert

