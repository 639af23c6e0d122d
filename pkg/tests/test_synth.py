import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plalab.errors import InvalidEpsilon, InvalidParams
from plalab.synth import (
    FlatContract,
    SynthesisProblem,
    outer_coefficients,
    outer_on_circle,
    outer_table,
    synth_flat_analytic,
    synth_flat_bilateral,
    verify_flat_contract,
)
from plalab.trigpoly import TrigPoly, u_norm


def analytic_problem(eps, budget):
    return SynthesisProblem("analytic", eps=eps, budget=budget)


def test_exponential_meets_contract_above_one():
    cert = verify_flat_contract(TrigPoly.monomial(1), analytic_problem(1.01, 64))
    assert cert.passed


def test_zero_fails_rho_clause():
    cert = verify_flat_contract(TrigPoly.zero(), analytic_problem(0.5, 64))
    assert not cert.passed
    assert cert.clause("rho(h, 1)").measured == pytest.approx(1.0)


def test_synth_above_one():
    h, cert = synth_flat_analytic(1.01, 64, seed=0)
    assert cert.passed and h.is_analytic()


def test_synth_half():
    result = synth_flat_analytic(0.5, 4096, seed=0)
    assert result.certificate.passed
    assert result.h.nnz >= 8
    # The contract forces energy: |h - 1| <= eps off a set of measure < eps.
    energy = float(np.sum(np.abs(result.h.coeffs) ** 2))
    assert energy >= (1 - 0.5) ** 2 * (1 - 0.5)


def test_synth_rejects_bad_eps_and_budget():
    with pytest.raises(InvalidEpsilon):
        synth_flat_analytic(2.5, 4096)
    with pytest.raises(InvalidParams):
        synth_flat_analytic(0.5, 1000)


def test_verdict_stable_under_refinement():
    result = synth_flat_analytic(0.5, 4096, seed=3)
    problem = analytic_problem(0.5, result.degree)
    fine = verify_flat_contract(result.h, problem, grid=2 * result.certificate.grid_size)
    assert fine.passed == result.certificate.passed


def test_synthesis_is_deterministic():
    a = synth_flat_analytic(0.5, 4096, seed=7).h
    b = synth_flat_analytic(0.5, 4096, seed=7).h
    assert a == b


def test_general_contract():
    contract = FlatContract(0.2, 0.82, 0.18)
    result = synth_flat_analytic(contract=contract, budget=1 << 14, seed=1)
    assert result.certificate.passed
    assert result.h.coeff(0) == 0


@settings(max_examples=8)
@given(st.floats(0.45, 1.5), st.integers(0, 50))
def test_returned_h_satisfies_contract(eps, seed):
    result = synth_flat_analytic(eps, 4096, seed=seed)
    problem = analytic_problem(eps, result.degree)
    cert = verify_flat_contract(result.h, problem, grid=4 * result.certificate.grid_size)
    assert cert.passed
    assert result.h.coeff(0) == 0
    assert result.h.is_zero or result.h.lo >= 1


def test_outer_table_matches_series():
    C = outer_coefficients(0.3, 0.5, M=1 << 12)
    table = outer_table(C, 1 << 14)
    theta = np.random.default_rng(0).uniform(0, 2 * np.pi, 40)
    w = np.exp(1j * theta)
    direct = np.polynomial.polynomial.polyval(w, C)
    assert np.allclose(outer_on_circle(table, w), direct, atol=1e-9)


def test_bilateral_half():
    result = synth_flat_bilateral(0.5, 0.5, 4.0, budget=1024, seed=0)
    cert = result.certificate
    assert cert.passed
    assert result.h.coeff(0) == 0
    achieved = cert.clause("m{|h-1| > delta}").measured / 0.5
    assert achieved <= 4.0
    assert u_norm(result.h) <= 2.0


def test_bilateral_delta_probe(capsys):
    rows = []
    for delta in (0.5, 0.25, 0.125):
        cert = synth_flat_bilateral(0.5, delta, 4.0, budget=1024, seed=0).certificate
        rows.append((delta, cert.clause("m{|h-1| > delta}").measured / 0.5))
    with capsys.disabled():
        print("\nachieved C at gamma = 0.5:", ", ".join(f"delta={d}: {c:.3f}" for d, c in rows))
    assert all(c <= 4.0 for _, c in rows)
