"""Harmonic curves from Euclidean domains into the first Heisenberg group.

The package builds maps f = (H(y), y, t) by solving the quasilinear
Dirichlet problem for y, recovers t from the contact equations and runs
numerical checks of the classical elliptic estimates on the result.
"""

import os

# HEIS_THREADS caps BLAS/OpenMP threads; it must be set before numpy loads
if os.environ.get("HEIS_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["HEIS_THREADS"])

from heiscurves.errors import (
    ConfigError,
    HeisError,
    LoopResidualError,
    PreconditionError,
    ProfileDomainError,
)
from heiscurves.grid import Grid, ScalarField, build_grid
from heiscurves.hgroup import Point, TangentVector
from heiscurves.profile import CurveProfile, ConditionVerdict
from heiscurves.solver import HarmonicCurve, SolveReport
from heiscurves.verify import CheckResult, VerificationReport

__all__ = [
    "CheckResult",
    "ConditionVerdict",
    "ConfigError",
    "CurveProfile",
    "Grid",
    "HarmonicCurve",
    "HeisError",
    "LoopResidualError",
    "Point",
    "PreconditionError",
    "ProfileDomainError",
    "ScalarField",
    "SolveReport",
    "TangentVector",
    "VerificationReport",
    "build_grid",
]

__version__ = "0.1.0"
