"""Constructive approximation by analytic trigonometric polynomials.

Build flat polynomials, indicator and step polynomials and their (P, Q)
pairs, run the round-by-round decomposition of a sampled function, and check
every result through an independent certificate.
"""

from .constructors import (
    Construction,
    PQPair,
    certify_indicator,
    certify_pq,
    certify_step,
    indicator_polynomial,
    pq_pair,
    pq_pair_u,
    step_polynomial,
)
from .decompose import (
    DecompositionReport,
    RoundRecord,
    menshov_decompose,
    pla_decompose,
    verify_round,
)
from .density import (
    approximation_error,
    modulated_average,
    modulated_average_direct,
    tail_bound,
)
from .errors import (
    ClippingInfeasible,
    ConfigError,
    DilationTooSmall,
    GridMismatch,
    GridTooCoarse,
    Infeasible,
    InfeasibleRamp,
    InvalidDelta,
    InvalidEpsilon,
    InvalidParams,
    PlalabError,
    RoundInfeasible,
    TargetUnreachable,
)
from .sampling import (
    Arc,
    SampledFunction,
    StepFunction,
    rho,
    rho_on,
    step_approximate,
    trapezoid_indicator,
)
from .synth import (
    FlatContract,
    SynthesisProblem,
    SynthesisResult,
    synth_flat_analytic,
    synth_flat_bilateral,
    verify_flat_contract,
)
from .trigpoly import (
    Certificate,
    Clause,
    SpecialProduct,
    TrigPoly,
    coeff_sup,
    dilate,
    eval_at,
    eval_grid,
    l2_norm,
    maximal,
    maximal_at,
    maximal_sup,
    multiply,
    special_product,
    sup_norm,
    u_norm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
