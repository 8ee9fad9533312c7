"""Multilevel Monte Carlo for piecewise deterministic Markov processes.

Paths are built by thinning a dominating Poisson process, which gives a
natural coupling between Euler discretisations of different step sizes.
Likelihood-ratio weights (:mod:`pdmp.reweight`) turn that coupling into a
strong one, and :mod:`pdmp.estimators` plans and runs classical and
multilevel estimators.
"""
from .core import Characteristics, MarkState, PathSkeleton, evaluate_state, simulate_coupled, simulate_path
from .errors import (
    ConfigError,
    DegenerateRate,
    DegenerateWeight,
    InvalidArgument,
    NumericalFailure,
    PdmpError,
    PlanDegenerate,
    RateBoundViolation,
)
from .flows import FlowScheme, euler_polygon, exact_flow, flow_eval, reference_flow, reference_solve
from .rng import StreamKey, ThinningTrace, derive_stream, sample_trace, sample_trace_block

__version__ = "0.1.0"
