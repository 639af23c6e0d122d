import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plalab import io
from plalab.sampling import SampledFunction, StepFunction
from plalab.trigpoly import SpecialProduct, TrigPoly

finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(st.dictionaries(st.integers(-500, 500), st.tuples(finite, finite), min_size=1, max_size=20))
def test_coefficients_round_trip(table):
    P = TrigPoly.from_mapping({n: complex(*v) for n, v in table.items()})
    assert io.coefficients_from_text(io.coefficients_to_text(P)) == P


def test_coefficients_reject_duplicates_and_bad_header():
    with pytest.raises(io.FormatError):
        io.coefficients_from_text("n,re,im\n1,0,0\n1,2,0\n")
    with pytest.raises(io.FormatError):
        io.coefficients_from_text("k,re,im\n1,0,0\n")


def test_sampled_and_step_round_trip():
    f = SampledFunction(8, np.arange(8) * (1 + 0.5j))
    assert io.sampled_from_text(io.sampled_to_text(f)) == f
    S = StepFunction([0.0, 1.0, 3.0], [1.0, -2j, 0.25])
    assert io.step_from_text(io.step_to_text(S)) == S


@given(st.lists(st.booleans(), min_size=8, max_size=8).map(lambda b: b * 8))
def test_mask_round_trip(bits):
    mask = np.array(bits)
    assert np.array_equal(io.mask_from_text(io.mask_to_text(mask)), mask)


def test_product_round_trip(tmp_path):
    P = SpecialProduct(TrigPoly.from_mapping({-1: 0.5, 1: 0.5}), TrigPoly.monomial(2, 0.1j), 4)
    io.write_product(tmp_path / "P.txt", P)
    Q = io.read_product(tmp_path / "P.txt")
    assert (Q.g, Q.h, Q.r) == (P.g, P.h, P.r)


def test_read_function_from_step(tmp_path):
    path = tmp_path / "step.csv"
    path.write_text(io.step_to_text(StepFunction([0.0, np.pi], [1.0, 0.0])))
    f = io.read_function(path, 16)
    assert np.array_equal(f.values.real, [1.0] * 8 + [0.0] * 8)
