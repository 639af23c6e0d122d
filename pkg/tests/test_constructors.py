import numpy as np
import pytest

from plalab.constructors import (
    certify_indicator,
    certify_pq,
    certify_step,
    indicator_polynomial,
    pq_pair,
    pq_pair_u,
    step_polynomial,
)
from plalab.errors import ClippingInfeasible, InvalidDelta
from plalab.sampling import Arc, StepFunction
from plalab.trigpoly import maximal_on_grid, u_norm

TWO_PI = 2 * np.pi
G = 4096


def collar_complement(arc: Arc, delta: float, G: int) -> np.ndarray:
    return ~arc.neighborhood(delta).grid_mask(G)


@pytest.fixture(scope="module")
def quarter_indicator():
    return indicator_polynomial(Arc(0.0, np.pi / 2), 0.25, seed=0)


def test_indicator_clauses(quarter_indicator):
    P, cert = quarter_indicator
    assert cert.passed
    assert P.is_analytic() and P.lo >= 0
    assert cert.clause("(2) rho(P, 1_I)").measured < 0.25
    assert cert.clause("(3) P* off I_delta").measured < 0.25


def test_indicator_wiring(quarter_indicator):
    c = quarter_indicator
    P, delta = c.P, 0.25
    # Off I_delta the two terms |g| ||h*|| and 2 g* ||h^|| each stay below delta/2.
    off = np.flatnonzero(~Arc(0.0, np.pi / 2).neighborhood(delta).grid_mask(8192))
    g_abs = np.abs(P.g.sample(8192))[off]
    g_star = maximal_on_grid(P.g, 8192, off)
    assert (g_abs * c.hstar).max() < delta / 2
    assert (2 * g_star * np.abs(P.h.coeffs).max()).max() < delta / 2
    assert P.envelope_on_grid(8192, off, c.hstar).max() < delta


def test_indicator_recertifies(quarter_indicator):
    P = quarter_indicator.P
    again = certify_indicator(P, Arc(0.0, np.pi / 2), 0.25, 8192)
    assert again.passed


def test_indicator_empty_and_bad_delta():
    P, cert = indicator_polynomial(Arc(0.3, 0.0), 0.25)
    assert P is None and cert.passed
    with pytest.raises(InvalidDelta):
        indicator_polynomial(Arc(0.0, 1.0), 1.5)


def test_step_polynomial_zero():
    c = step_polynomial(StepFunction.constant(0.0), np.ones(G, dtype=bool), 0.3)
    assert c.P is None and c.certificate.passed


@pytest.fixture(scope="module")
def half_step():
    arc = Arc(0.0, np.pi)
    U = collar_complement(arc, 0.3, G)
    phi = StepFunction.indicator(arc)
    return phi, U, step_polynomial(phi, U, 0.3, seed=0, grid=G)


def test_step_polynomial_half(half_step):
    phi, U, c = half_step
    assert c.certificate.passed
    assert c.P.is_analytic()
    assert certify_step(c.P, phi, U, 0.3, G).passed


def test_step_polynomial_two_values():
    phi = StepFunction([0.0, 1.0, 2.5, 4.0], [1.0, 0.0, -1.0, 0.0])
    U = np.zeros(G, dtype=bool)
    U[int(1.2 / TWO_PI * G):int(2.3 / TWO_PI * G)] = True
    U[int(4.2 / TWO_PI * G):] = True
    c = step_polynomial(phi, U, 0.3, seed=2, grid=G)
    assert c.certificate.clause("(4) rho(P, phi)").passed(0.0)
    assert c.certificate.passed


def test_pq_pair_zero():
    pair = pq_pair(StepFunction.constant(0.0), np.ones(G, dtype=bool), 0.5, 0.3, grid=G)
    assert pair.P.P is None and pair.Q.is_zero and pair.certificate.passed


@pytest.fixture(scope="module")
def small_bump():
    arc = Arc(1.0, 1.5)
    psi = StepFunction.indicator(arc, 0.2)
    U = np.ones(G, dtype=bool)
    return psi, U, pq_pair(psi, U, 0.5, 0.3, seed=0, grid=G)


def test_pq_pair_small_bump(small_bump):
    psi, U, pair = small_bump
    cert = pair.certificate
    assert cert.passed
    for name in ("(1) spec(P) in [0, inf)", "(5) rho(P* 1_U, 0)", "(6) rho(P + Q, psi)",
                 "(7) ||Q||_inf"):
        assert cert.clause(name).passed(0.0)
    assert certify_pq(pair.P.P, pair.Q, psi, U, 0.5, 0.3, G).passed


def test_pq_pair_fejer_clipping(small_bump):
    _, _, pair = small_bump
    assert np.abs(pair.Q.sample(G)).max() <= 0.99 * 0.5 * (1 + 1e-12)


def test_pq_pair_clipping_infeasible():
    psi = StepFunction.indicator(Arc(1.0, 1.5), 0.6)
    with pytest.raises(ClippingInfeasible):
        pq_pair(psi, np.ones(G, dtype=bool), 0.5, 0.3, grid=G)


def test_pq_pair_u_zero():
    pair = pq_pair_u(StepFunction.constant(0.0), np.ones(G, dtype=bool), 0.5, 0.5, 0.3, grid=G)
    assert pair.certificate.passed


def test_pq_pair_u_small_bump():
    psi = StepFunction.indicator(Arc(1.0, 1.5), 0.2)
    U = np.ones(G, dtype=bool)
    pair = pq_pair_u(psi, U, 0.5, 0.5, 0.3, 4.0, seed=0, grid=G)
    cert = pair.certificate
    assert cert.passed
    assert pair.details["achieved_C"] <= 4.0
    if pair.details["u_method"] == "direct":
        assert u_norm(pair.Q.expand()) < 0.5 / 0.5
