import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from oracles import brute_rho

from plalab.errors import GridMismatch, TargetUnreachable
from plalab.sampling import (
    Arc,
    SampledFunction,
    StepFunction,
    measure_above,
    rho,
    rho_values,
    step_approximate,
    trapezoid_indicator,
)

TWO_PI = 2 * np.pi

values = arrays(np.float64, 64, elements=st.floats(-3, 3, allow_nan=False))


def sf(v):
    return SampledFunction(len(v), v)


def test_rho_identical():
    f = sf(np.linspace(0, 1, 32))
    assert rho(f, f) == 0.0


def test_rho_constant_difference():
    f = sf(np.zeros(64))
    assert rho(f, sf(np.full(64, 0.3))) == pytest.approx(0.3)


def test_rho_spike_on_tenth():
    G = 1024
    d = np.zeros(G)
    d[: round(0.1 * G)] = 1.0
    assert rho(sf(d), sf(np.zeros(G))) == pytest.approx(0.1, abs=1 / G)


def test_rho_matches_dense_scan():
    rng = np.random.default_rng(0)
    G = 1024
    for _ in range(20):
        d = np.abs(rng.standard_cauchy(G)) * rng.uniform(0, 0.5)
        assert abs(rho_values(d) - brute_rho(d)) <= 2 / G


def test_rho_grid_mismatch():
    with pytest.raises(GridMismatch):
        rho(sf(np.zeros(8)), sf(np.zeros(16)))


@given(values, values)
def test_rho_symmetric_and_below_sup(a, b):
    f, g = sf(a), sf(b)
    assert rho(f, g) == rho(g, f)
    assert rho(f, g) <= np.abs(a - b).max() + 1e-15


@given(values, values, values)
def test_rho_triangle(a, b, c):
    assert rho(sf(a), sf(c)) <= rho(sf(a), sf(b)) + rho(sf(b), sf(c)) + 1e-12


@given(values, values)
def test_rho_zero_iff_equal(a, b):
    assert (rho(sf(a), sf(b)) == 0) == bool(np.all(a == b))


def test_measure_above_examples():
    assert measure_above(sf(np.zeros(16)), 0.0) == 0.0
    assert measure_above(sf(np.ones(16)), 0.5) == 1.0


def test_measure_above_sine_arc():
    G = 4096
    f = SampledFunction.from_callable(lambda t: 2 * np.abs(np.sin(t / 2)), G)
    assert abs(measure_above(f, 1.0) - 2 / 3) <= 2 / G


@given(values, st.floats(0, 2), st.floats(0, 2))
def test_measure_above_monotone(a, e1, e2):
    lo, hi = sorted((e1, e2))
    assert measure_above(sf(a), hi) <= measure_above(sf(a), lo)


def test_step_approximate_exact_step():
    S = StepFunction([0.0, np.pi / 2, np.pi], [1.0, -1.0, 0.5])
    f = S.sample(256)
    out = step_approximate(f, 0.1)
    assert rho(out.sample(256), f) == 0.0


def test_step_approximate_exponential():
    f = SampledFunction.from_callable(lambda t: np.exp(1j * t), 1024)
    S = step_approximate(f, 0.2)
    assert rho(S.sample(1024), f) < 0.2


def test_step_approximate_white_noise():
    rng = np.random.default_rng(1)
    f = sf(rng.normal(size=256))
    with pytest.raises(TargetUnreachable):
        step_approximate(f, 0.01)


@given(arrays(np.float64, 128, elements=st.floats(-1, 1, allow_nan=False)), st.floats(0.05, 0.9))
def test_step_approximate_certified(a, target):
    f = sf(a)
    try:
        S = step_approximate(f, target)
    except TargetUnreachable:
        return
    assert rho(S.sample(f.G), f) < target


def test_step_function_fourier_matches_quadrature():
    S = StepFunction([0.0, 1.0, 4.0], [2.0, -1j, 0.5])
    F = S.fourier(5)
    t = TWO_PI * (np.arange(1 << 16) + 0.5) / (1 << 16)
    v = S(t)
    for n in range(-5, 6):
        assert abs(F.coeff(n) - np.mean(v * np.exp(-1j * n * t))) < 1e-4


def test_indicator_step_wraps():
    S = StepFunction.indicator(Arc(5.5, 1.5))
    assert S(0.0) == 1 and S(5.6) == 1 and S(1.5) == 0


def test_trapezoid_half_circle():
    g, cert = trapezoid_indicator(Arc(0.0, np.pi), 0.3, 1.0)
    assert cert.passed
    assert np.abs(g.coeffs).sum() <= 6 / 0.3


def test_trapezoid_empty_arc():
    g, cert = trapezoid_indicator(Arc(1.0, 0.0), 0.3, 1.0)
    assert g.is_zero and cert.passed


@given(st.floats(0, TWO_PI - 0.01), st.floats(0.1, 5.0), st.floats(0.1, 0.9))
def test_trapezoid_triangle_positivity(start, length, delta):
    g, cert = trapezoid_indicator(Arc(start, length), delta, 2.0, grid=1024)
    assert cert.clause("triangle coefficients >= 0").passed(0.0)
    assert cert.clause("||g*||_inf").passed(0.0)
